use serde::{Deserialize, Serialize};

use super::Chain;
use crate::error::{invalid, Result};

pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ParamSummary {
    pub name: String,
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub mean: f64,
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub sd: f64,
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub q025: f64,
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub q50: f64,
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub q975: f64,
    #[serde(deserialize_with = "crate::nullable::scalar")]
    pub ess: f64,
    /// Zero-variance chain; `ess` is then set to the draw count.
    pub degenerate: bool,
}

impl ParamSummary {
    /// Monte Carlo standard error of the mean.
    pub fn mcse(&self) -> f64 {
        if self.degenerate {
            0.0
        } else {
            self.sd / self.ess.sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Summary {
    pub n_draws: usize,
    pub params: Vec<ParamSummary>,
}

impl Summary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Effective sample size by Geyer's initial positive sequence: sums of
/// adjacent autocorrelation pairs are accumulated until the first
/// non-positive pair. Capped at the draw count.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let gamma0 = c.iter().map(|x| x * x).sum::<f64>() / nf;
    if gamma0 <= 0.0 {
        return nf;
    }
    let autocorr =
        |lag: usize| -> f64 { c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / nf / gamma0 };
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = if m == 0 { 1.0 + autocorr(1) } else { autocorr(2 * m) + autocorr(2 * m + 1) };
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    (nf / tau.max(1.0 / nf)).min(nf)
}

pub fn summarize(chain: &Chain) -> Result<Summary> {
    if chain.len() < MIN_DRAWS {
        return invalid(format!("summary needs at least {MIN_DRAWS} draws, chain has {}", chain.len()));
    }
    let params = chain
        .names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let xs: Vec<f64> = chain.draws().iter().map(|d| d[i]).collect();
            summarize_column(name, &xs)
        })
        .collect();
    Ok(Summary { n_draws: chain.len(), params })
}

pub(crate) fn summarize_column(name: &str, xs: &[f64]) -> ParamSummary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let degenerate = sorted[0] == sorted[sorted.len() - 1];
    ParamSummary {
        name: name.to_string(),
        mean,
        sd: var.sqrt(),
        q025: quantile(&sorted, 0.025),
        q50: quantile(&sorted, 0.5),
        q975: quantile(&sorted, 0.975),
        ess: if degenerate { n } else { effective_sample_size(xs) },
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::ChainMeta;
    use crate::rng::{Purpose, RngStream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn chain_of(xs: &[f64]) -> Chain {
        let meta = ChainMeta {
            sampler: "t".into(),
            seed: 0,
            chain_index: 0,
            config: serde_json::Value::Null,
            dataset_digest: String::new(),
        };
        let mut c = Chain::new(vec!["x".into()], meta).unwrap();
        for (i, x) in xs.iter().enumerate() {
            c.push(i, vec![*x]).unwrap();
        }
        c
    }

    #[test]
    fn too_few_draws() {
        assert!(summarize(&chain_of(&[1.0; 50])).is_err());
    }

    #[test]
    fn constant_chain_is_degenerate() {
        let s = summarize(&chain_of(&[2.5; 200])).unwrap();
        let p = &s.params[0];
        assert_eq!(p.sd, 0.0);
        assert!(p.degenerate);
        assert_eq!((p.q025, p.q50, p.q975), (2.5, 2.5, 2.5));
        assert_eq!(p.ess, 200.0);
    }

    #[test]
    fn iid_normal() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| s.sample(StandardNormal)).collect();
        let p = &summarize(&chain_of(&xs)).unwrap().params[0];
        assert!(p.mean.abs() < 4.0 / 100.0);
        assert!((p.ess - 10_000.0).abs() < 0.2 * 10_000.0, "ess {}", p.ess);
        assert!(p.q025 < p.q50 && p.q50 < p.q975);
    }

    #[test]
    fn ar1_ess() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 1);
        let rho: f64 = 0.9;
        let n = 100_000;
        let mut x = 0.0;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = s.sample(StandardNormal);
                x = rho * x + (1.0 - rho * rho).sqrt() * e;
                x
            })
            .collect();
        let ess = effective_sample_size(&xs);
        let expect = n as f64 * (1.0 - rho) / (1.0 + rho);
        assert!((ess - expect).abs() < 0.3 * expect, "ess {ess} vs {expect}");
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.125), 0.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    proptest::proptest! {
        #[test]
        fn moments_permutation_invariant(mut xs in proptest::collection::vec(-100.0f64..100.0, 100..300), seed in 0u64..1000) {
            let a = summarize_column("x", &xs);
            let mut s = RngStream::from_parts(seed, Purpose::Test, 0, 0);
            for i in (1..xs.len()).rev() {
                let j = s.random_range(0..=i);
                xs.swap(i, j);
            }
            let b = summarize_column("x", &xs);
            proptest::prop_assert!((a.mean - b.mean).abs() < 1e-9);
            proptest::prop_assert!((a.sd - b.sd).abs() < 1e-9);
            proptest::prop_assert_eq!(a.q025, b.q025);
            proptest::prop_assert_eq!(a.q50, b.q50);
            proptest::prop_assert_eq!(a.q975, b.q975);
            proptest::prop_assert!(a.ess > 0.0 && a.ess <= xs.len() as f64);
        }
    }
}
