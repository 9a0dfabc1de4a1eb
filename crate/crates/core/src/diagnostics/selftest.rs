//! Statistical self-checks of the Pólya-Gamma generator.

use std::f64::consts::PI;

use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::Z_THRESHOLD;
use crate::error::Result;
use crate::kernels::{polya_gamma_mean, polya_gamma_variance, sample_polya_gamma_truncated, PolyaGamma};
use crate::rng::{Purpose, RngStream};

const IDENTITY_Z_LIMIT: f64 = 3.0;
const ORACLE_TERMS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SelfTestCheck {
    pub group: String,
    pub label: String,
    pub estimate: f64,
    pub reference: f64,
    pub z: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SelfTestReport {
    pub seed: u64,
    pub draws: usize,
    pub identity_draws: usize,
    pub checks: Vec<SelfTestCheck>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SelfTestConfig {
    pub seed: u64,
    /// Draws per tilt for the moment, symmetry and oracle checks.
    pub draws: usize,
    /// PG(1, 0) draws per cell of the logistic identity grid.
    pub identity_draws: usize,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        Self { seed: 1, draws: 100_000, identity_draws: 1_000_000 }
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

fn push(
    checks: &mut Vec<SelfTestCheck>,
    group: &str,
    label: String,
    estimate: f64,
    reference: f64,
    z: f64,
    limit: f64,
) {
    checks.push(SelfTestCheck { group: group.into(), label, estimate, reference, z, limit, passed: z.abs() < limit });
}

/// Mean of the terms a `terms`-term truncation drops.
fn truncation_tail_mean(c: f64, terms: usize) -> f64 {
    let d = c * c / (4.0 * PI * PI);
    // sum_{k>m} 1/((k-1/2)^2 + d) ≈ integral from m, accurate to O(m^-3)
    let m = terms as f64;
    let tail = if d > 0.0 { (PI / 2.0 - (m / d.sqrt()).atan()) / d.sqrt() } else { 1.0 / m };
    tail / (2.0 * PI * PI)
}

/// Moments against closed forms, symmetry in the tilt, agreement with the
/// truncated series, and the logistic identity
/// `e^{yη}/(1+e^η) = ½ e^{(y-½)η} E[exp(-ω η²/2)]`, ω ~ PG(1, 0).
pub fn pg_selftest(config: &SelfTestConfig) -> Result<SelfTestReport> {
    let n = config.draws;
    let mut checks = Vec::new();
    let stream = |purpose_unit: u64| RngStream::from_parts(config.seed, Purpose::Test, 0, purpose_unit);

    for (i, c) in [0.0, 0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let pg = PolyaGamma::new(c)?;
        let mut rng = stream(i as u64);
        let exact: Vec<f64> = (0..n).map(|_| pg.sample(&mut rng)).collect();
        let (m, v) = mean_var(&exact);
        let target = polya_gamma_mean(c);
        push(
            &mut checks,
            "moments",
            format!("mean c={c}"),
            m,
            target,
            z_score(m - target, (v / n as f64).sqrt()),
            Z_THRESHOLD,
        );
        let sq: Vec<f64> = exact.iter().map(|x| (x - target).powi(2)).collect();
        let (msq, vsq) = mean_var(&sq);
        let tv = polya_gamma_variance(c);
        push(
            &mut checks,
            "moments",
            format!("variance c={c}"),
            msq,
            tv,
            z_score(msq - tv, (vsq / n as f64).sqrt()),
            Z_THRESHOLD,
        );

        let mut rng = stream(100 + i as u64);
        let tail = truncation_tail_mean(c, ORACLE_TERMS);
        let oracle: Vec<f64> = (0..n).map(|_| sample_polya_gamma_truncated(c, ORACLE_TERMS, &mut rng) + tail).collect();
        let (mo, vo) = mean_var(&oracle);
        let se = ((v + vo) / n as f64).sqrt();
        push(&mut checks, "oracle", format!("mean c={c}"), m, mo, z_score(m - mo, se), Z_THRESHOLD);
    }

    for (p, label) in [(1, "mean"), (2, "second moment")] {
        let mut r1 = stream(200);
        let mut r2 = stream(201);
        let pos = PolyaGamma::new(3.0)?;
        let neg = PolyaGamma::new(-3.0)?;
        let a: Vec<f64> = (0..n).map(|_| pos.sample(&mut r1).powi(p)).collect();
        let b: Vec<f64> = (0..n).map(|_| neg.sample(&mut r2).powi(p)).collect();
        let (ma, va) = mean_var(&a);
        let (mb, vb) = mean_var(&b);
        let z = z_score(ma - mb, ((va + vb) / n as f64).sqrt());
        push(&mut checks, "symmetry", format!("{label} c=3 vs c=-3"), ma, mb, z, Z_THRESHOLD);
    }

    let pg0 = PolyaGamma::new(0.0)?;
    let m = config.identity_draws;
    let mut rng = stream(300);
    for eta in [-3.0f64, -1.0, 0.0, 1.0, 3.0] {
        for y in [0.0f64, 1.0] {
            let lhs = (eta * y).exp() / (1.0 + eta.exp());
            let pre = 0.5 * ((y - 0.5) * eta).exp();
            let vals: Vec<f64> = (0..m).map(|_| pre * (-0.5 * eta * eta * pg0.sample(&mut rng)).exp()).collect();
            let (est, var) = mean_var(&vals);
            let z = z_score(est - lhs, (var / m as f64).sqrt());
            push(&mut checks, "identity", format!("eta={eta} y={y}"), est, lhs, z, IDENTITY_Z_LIMIT);
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(SelfTestReport { seed: config.seed, draws: n, identity_draws: m, checks, passed })
}
