use serde::{Deserialize, Serialize};

use super::summary::summarize_column;
use super::{Chain, Summary};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// `|mean - truth| / sd`.
    pub abs_z: f64,
    /// Truth inside the central 95% interval.
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
    pub rmse: f64,
}

impl RecoveryReport {
    pub fn get(&self, name: &str) -> Option<&RecoveryRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Score posterior summaries against known truth. Every truth name must be
/// present in the summary.
pub fn recovery_report(summary: &Summary, truth: &[(String, f64)]) -> Result<RecoveryReport> {
    let missing: Vec<&str> = truth.iter().filter(|(n, _)| summary.get(n).is_none()).map(|(n, _)| n.as_str()).collect();
    if !missing.is_empty() {
        return invalid(format!("summary lacks parameters {missing:?}"));
    }
    let rows: Vec<RecoveryRow> = truth
        .iter()
        .map(|(name, t)| {
            let p = summary.get(name).expect("checked above");
            let bias = p.mean - t;
            let abs_z = if bias == 0.0 { 0.0 } else { bias.abs() / p.sd };
            RecoveryRow {
                name: name.clone(),
                truth: *t,
                mean: p.mean,
                bias,
                abs_z,
                covered: p.q025 <= *t && *t <= p.q975,
            }
        })
        .collect();
    let rmse = if rows.is_empty() {
        0.0
    } else {
        (rows.iter().map(|r| r.bias * r.bias).sum::<f64>() / rows.len() as f64).sqrt()
    };
    Ok(RecoveryReport { rows, rmse })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name_a: String,
    pub name_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mcse_a: f64,
    pub mcse_b: f64,
    /// `(mean_a - mean_b) / sqrt(mcse_a² + mcse_b²)`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainComparison {
    pub rows: Vec<ComparisonRow>,
    /// Map entries whose names were not found in one of the chains.
    pub unmapped: Vec<String>,
}

impl ChainComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

/// Compare posterior means of mapped parameter pairs using Monte Carlo
/// standard errors derived from each chain's effective sample size.
pub fn compare_chains(a: &Chain, b: &Chain, map: &[(String, String)]) -> Result<ChainComparison> {
    let mut rows = Vec::new();
    let mut unmapped = Vec::new();
    for (na, nb) in map {
        match (a.column(na), b.column(nb)) {
            (Some(xa), Some(xb)) if !xa.is_empty() && !xb.is_empty() => {
                let sa = summarize_column(na, &xa);
                let sb = summarize_column(nb, &xb);
                let diff = sa.mean - sb.mean;
                let se = (sa.mcse().powi(2) + sb.mcse().powi(2)).sqrt();
                let z = if diff == 0.0 { 0.0 } else { diff / se };
                rows.push(ComparisonRow {
                    name_a: na.clone(),
                    name_b: nb.clone(),
                    mean_a: sa.mean,
                    mean_b: sb.mean,
                    mcse_a: sa.mcse(),
                    mcse_b: sb.mcse(),
                    z,
                });
            }
            (ca, _) => {
                let which = if ca.is_none() { na } else { nb };
                unmapped.push(which.clone());
            }
        }
    }
    Ok(ChainComparison { rows, unmapped })
}
