use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ChoiceDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ChainMeta {
    pub sampler: String,
    pub seed: u64,
    pub chain_index: u32,
    pub config: serde_json::Value,
    pub dataset_digest: String,
}

/// Per-iteration scalar monitors, one entry per sweep (burn-in included).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Monitors {
    pub iteration: Vec<usize>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub log_likelihood: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub max_abs_utility: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub mean_chosen_prob: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub max_abs_param: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub accept_beta: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub accept_alpha: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub mean_phi: Vec<f64>,
}

impl Monitors {
    pub fn len(&self) -> usize {
        self.iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iteration.is_empty()
    }
}

/// Stored post-burn-in draws of named scalar parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    names: Vec<String>,
    iterations: Vec<usize>,
    draws: Vec<Vec<f64>>,
    pub monitors: Monitors,
    pub meta: ChainMeta,
}

impl Chain {
    pub fn new(names: Vec<String>, meta: ChainMeta) -> Result<Self> {
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return invalid(format!("duplicate parameter name {n}"));
            }
        }
        Ok(Self { names, iterations: Vec::new(), draws: Vec::new(), monitors: Monitors::default(), meta })
    }

    pub fn push(&mut self, iteration: usize, values: Vec<f64>) -> Result<()> {
        if values.len() != self.names.len() {
            return invalid(format!("draw has {} values for {} names", values.len(), self.names.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite draw for {} at iteration {iteration}", self.names[i]));
        }
        self.iterations.push(iteration);
        self.draws.push(values);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    pub fn draws(&self) -> &[Vec<f64>] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index_of(name)?;
        Some(self.draws.iter().map(|d| d[i]).collect())
    }
}

/// FNV-1a over the dataset's dimensions, covariates and choices.
pub fn dataset_digest(data: &ChoiceDataset) -> String {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    for d in [data.n_decision_makers(), data.n_occasions(), data.n_alternatives(), data.n_fixed(), data.n_random()] {
        feed(&(d as u64).to_le_bytes());
    }
    for x in data.xf_all().iter().chain(data.xr_all()) {
        feed(&x.to_bits().to_le_bytes());
    }
    for c in data.choices() {
        feed(&(*c as u64).to_le_bytes());
    }
    format!("{h:016x}")
}
