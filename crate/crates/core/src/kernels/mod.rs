//! Random-variate generation. Every sampler takes the stream it draws
//! from; none of them hold state of their own.

mod mvn;
mod polya_gamma;
mod wishart;

pub use mvn::{sample_mvn_cov, sample_mvn_precision, standard_normal_vec};
pub use polya_gamma::{
    polya_gamma_mean, polya_gamma_variance, sample_polya_gamma, sample_polya_gamma_truncated, PolyaGamma,
};
pub use wishart::sample_inverse_wishart;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Gumbel};

use crate::error::{invalid, Result};

/// Gamma draw in the rate parameterization: mean is `shape / rate`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return invalid(format!("gamma needs positive finite shape and rate, got ({shape}, {rate})"));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| crate::Error::InvalidInput(format!("gamma: {e}")))?;
    Ok(g.sample(rng))
}

/// Standard Gumbel(0, 1).
pub fn sample_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Gumbel::new(0.0, 1.0).expect("unit scale").sample(rng)
}

const SIMPLEX_TOL: f64 = 1e-12;

/// Index drawn with the given probabilities (0-based).
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    if probs.is_empty() {
        return invalid("categorical over an empty simplex");
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return invalid("categorical probabilities must be finite and non-negative");
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return invalid(format!("categorical probabilities sum to {total}, not 1"));
    }
    Ok(categorical_unchecked(probs, rng))
}

pub(crate) fn categorical_unchecked<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}
