use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::monitor::DivergenceReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TraceStats {
    /// Mean chosen-alternative probability over the window.
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub prob_chosen_tail_mean: f64,
    /// Least-squares slope of `ln max|V|` against iteration.
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub v_growth_slope: f64,
}

/// Summarize the windowed trace of a triggered divergence report. A final
/// non-finite entry is excluded.
pub fn divergence_trace_stats(report: &DivergenceReport) -> Result<TraceStats> {
    if !report.triggered {
        return invalid("divergence report was not triggered");
    }
    let t = &report.trace;
    let keep: Vec<usize> = (0..t.len())
        .filter(|&i| {
            t.mean_chosen_prob[i].is_finite() && t.max_abs_utility[i].is_finite() && t.max_abs_utility[i] > 0.0
        })
        .collect();
    if keep.len() < 2 {
        return invalid("divergence trace has fewer than two finite entries");
    }
    let prob = keep.iter().map(|&i| t.mean_chosen_prob[i]).sum::<f64>() / keep.len() as f64;
    let xs: Vec<f64> = keep.iter().map(|&i| t.iteration[i] as f64).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| t.max_abs_utility[i].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(TraceStats { prob_chosen_tail_mean: prob, v_growth_slope: sxy / sxx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::{DivergenceReason, DivergenceThresholds, MonitorTrace};

    fn report(v: Vec<f64>, p: Vec<f64>, triggered: bool) -> DivergenceReport {
        let n = v.len();
        DivergenceReport {
            triggered,
            iteration: n,
            reason: triggered.then_some(DivergenceReason::UtilityOverflow),
            thresholds: DivergenceThresholds::default(),
            trace: MonitorTrace {
                iteration: (0..n).collect(),
                max_abs_utility: v,
                mean_chosen_prob: p,
                max_abs_param: vec![1.0; n],
            },
        }
    }

    #[test]
    fn constant_probability_tail() {
        let r = report(vec![1.0, 2.0, 3.0], vec![0.995; 3], true);
        assert!((divergence_trace_stats(&r).unwrap().prob_chosen_tail_mean - 0.995).abs() < 1e-15);
    }

    #[test]
    fn exponential_growth_slope() {
        let v: Vec<f64> = (0..100).map(|i| 3.0 * (0.07 * i as f64).exp()).collect();
        let r = report(v, vec![0.9; 100], true);
        assert!((divergence_trace_stats(&r).unwrap().v_growth_slope - 0.07).abs() < 1e-6);
    }

    #[test]
    fn untriggered_rejected() {
        assert!(divergence_trace_stats(&report(vec![1.0, 2.0], vec![0.5; 2], false)).is_err());
    }

    #[test]
    fn final_non_finite_entry_ignored() {
        let r = report(vec![1.0, std::f64::consts::E, f64::INFINITY], vec![0.99, 0.99, f64::NAN], true);
        let s = divergence_trace_stats(&r).unwrap();
        assert!((s.v_growth_slope - 1.0).abs() < 1e-12);
    }
}
