//! Per-sweep utility statistics and the divergence monitor shared by both
//! samplers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Chain;
use crate::model::{log_sum_exp, ChoiceDataset};

/// Summary of the current utilities over every occasion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityStats {
    pub log_likelihood: f64,
    pub max_abs_utility: f64,
    pub mean_chosen_prob: f64,
    pub all_finite: bool,
}

/// Statistics of a utility tensor in dataset row order.
pub fn utility_stats(data: &ChoiceDataset, v: &[f64]) -> UtilityStats {
    let j = data.n_alternatives();
    let mut ll = 0.0;
    let mut max_abs = 0.0f64;
    let mut prob_sum = 0.0;
    let mut all_finite = true;
    for (row, &y) in v.chunks_exact(j).zip(data.choices()) {
        for x in row {
            if !x.is_finite() {
                all_finite = false;
            }
            max_abs = max_abs.max(x.abs());
        }
        let lp = row[y] - log_sum_exp(row);
        ll += lp;
        prob_sum += lp.exp();
    }
    UtilityStats {
        log_likelihood: ll,
        max_abs_utility: max_abs,
        mean_chosen_prob: prob_sum / data.choices().len() as f64,
        all_finite: all_finite && ll.is_finite(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DivergenceThresholds {
    #[serde(default = "default_v_max")]
    pub divergence_v_max: f64,
    #[serde(default = "default_param_max")]
    pub divergence_param_max: f64,
    #[serde(default = "default_window")]
    pub monitor_window: usize,
}

fn default_v_max() -> f64 {
    500.0
}
fn default_param_max() -> f64 {
    1e6
}
fn default_window() -> usize {
    100
}

impl Default for DivergenceThresholds {
    fn default() -> Self {
        Self {
            divergence_v_max: default_v_max(),
            divergence_param_max: default_param_max(),
            monitor_window: default_window(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceReason {
    UtilityOverflow,
    ParameterOverflow,
    NonFinite,
}

/// Windowed monitor trace, one entry per sweep, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MonitorTrace {
    pub iteration: Vec<usize>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub max_abs_utility: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub mean_chosen_prob: Vec<f64>,
    #[serde(deserialize_with = "crate::nullable::vec")]
    pub max_abs_param: Vec<f64>,
}

impl MonitorTrace {
    pub fn len(&self) -> usize {
        self.iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iteration.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DivergenceReport {
    pub triggered: bool,
    pub iteration: usize,
    pub reason: Option<DivergenceReason>,
    pub thresholds: DivergenceThresholds,
    pub trace: MonitorTrace,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    iteration: usize,
    max_abs_utility: f64,
    mean_chosen_prob: f64,
    max_abs_param: f64,
}

/// Keeps the last `monitor_window` sweeps and decides when a run has diverged.
#[derive(Debug, Clone)]
pub struct DivergenceMonitor {
    thresholds: DivergenceThresholds,
    window: VecDeque<Entry>,
}

impl DivergenceMonitor {
    pub fn new(thresholds: DivergenceThresholds) -> Self {
        Self { thresholds, window: VecDeque::with_capacity(thresholds.monitor_window.max(1)) }
    }

    /// Record one sweep. Returns the report if this sweep trips a threshold.
    ///
    /// Exactly one reason is recorded, checked in the order non-finite,
    /// utility overflow, parameter overflow.
    pub fn observe(&mut self, iteration: usize, stats: &UtilityStats, max_abs_param: f64) -> Option<DivergenceReport> {
        if self.window.len() == self.thresholds.monitor_window.max(1) {
            self.window.pop_front();
        }
        self.window.push_back(Entry {
            iteration,
            max_abs_utility: stats.max_abs_utility,
            mean_chosen_prob: stats.mean_chosen_prob,
            max_abs_param,
        });
        let reason = if !stats.all_finite || !max_abs_param.is_finite() || !stats.mean_chosen_prob.is_finite() {
            Some(DivergenceReason::NonFinite)
        } else if stats.max_abs_utility > self.thresholds.divergence_v_max {
            Some(DivergenceReason::UtilityOverflow)
        } else if max_abs_param > self.thresholds.divergence_param_max {
            Some(DivergenceReason::ParameterOverflow)
        } else {
            None
        };
        reason.map(|r| DivergenceReport {
            triggered: true,
            iteration,
            reason: Some(r),
            thresholds: self.thresholds,
            trace: self.trace(),
        })
    }

    pub fn trace(&self) -> MonitorTrace {
        let mut t = MonitorTrace::default();
        for e in &self.window {
            t.iteration.push(e.iteration);
            t.max_abs_utility.push(e.max_abs_utility);
            t.mean_chosen_prob.push(e.mean_chosen_prob);
            t.max_abs_param.push(e.max_abs_param);
        }
        t
    }
}

/// Result of a sampler run. A diverged run keeps the draws stored so far.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Completed(Chain),
    Diverged { report: DivergenceReport, chain: Chain },
}

impl RunOutcome {
    pub fn chain(&self) -> &Chain {
        match self {
            RunOutcome::Completed(c) => c,
            RunOutcome::Diverged { chain, .. } => chain,
        }
    }

    pub fn divergence(&self) -> Option<&DivergenceReport> {
        match self {
            RunOutcome::Completed(_) => None,
            RunOutcome::Diverged { report, .. } => Some(report),
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, RunOutcome::Diverged { .. })
    }

    pub fn into_chain(self) -> Chain {
        match self {
            RunOutcome::Completed(c) => c,
            RunOutcome::Diverged { chain, .. } => chain,
        }
    }
}
