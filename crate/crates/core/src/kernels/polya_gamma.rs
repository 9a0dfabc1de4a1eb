//! Exact Pólya-Gamma PG(1, c) draws.
//!
//! Devroye's alternating-series rejection sampler for the Jacobi
//! distribution `J*(1, z)` with `z = |c|/2`, using a truncated exponential
//! right proposal and a truncated inverse-Gaussian left proposal joined at
//! `t = 0.64`. `PG(1, c) = J*(1, |c|/2) / 4`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Result};

const TRUNC: f64 = 0.64;
const TRUNC_RECIP: f64 = 1.0 / TRUNC;

/// PG(1, c) as a `rand` distribution. Construct with [`PolyaGamma::new`].
#[derive(Debug, Clone, Copy)]
pub struct PolyaGamma {
    z: f64,
    fz: f64,
    mass_exp: f64,
}

impl PolyaGamma {
    pub fn new(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return invalid(format!("PG tilt must be finite, got {c}"));
        }
        let z = 0.5 * c.abs();
        let fz = 0.125 * PI * PI + 0.5 * z * z;
        Ok(Self { z, fz, mass_exp: mass_texpon(z, fz) })
    }

    fn sample_jacobi<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = if rng.random::<f64>() < self.mass_exp {
                TRUNC + rng.sample::<f64, _>(Exp1) / self.fz
            } else {
                truncated_inverse_gaussian(self.z, rng)
            };
            let mut s = series_coef(0, x);
            let y = rng.random::<f64>() * s;
            let mut n = 0u32;
            loop {
                n += 1;
                if n % 2 == 1 {
                    s -= series_coef(n, x);
                    if y <= s {
                        return x;
                    }
                } else {
                    s += series_coef(n, x);
                    if y > s {
                        break;
                    }
                }
            }
        }
    }
}

impl Distribution<f64> for PolyaGamma {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        0.25 * self.sample_jacobi(rng)
    }
}

/// One exact draw from PG(1, c).
pub fn sample_polya_gamma<R: Rng + ?Sized>(c: f64, rng: &mut R) -> Result<f64> {
    Ok(PolyaGamma::new(c)?.sample(rng))
}

/// PG(1, c) from the first `terms` terms of its sum-of-exponentials
/// representation. Biased low by the dropped tail; a reference for checking
/// the exact sampler, not a replacement for it.
pub fn sample_polya_gamma_truncated<R: Rng + ?Sized>(c: f64, terms: usize, rng: &mut R) -> f64 {
    let d = c * c / (4.0 * PI * PI);
    let mut acc = 0.0;
    for k in 1..=terms {
        let g: f64 = rng.sample(Exp1);
        let h = k as f64 - 0.5;
        acc += g / (h * h + d);
    }
    acc / (2.0 * PI * PI)
}

/// `E[PG(1, c)] = tanh(c/2) / (2c)`, 1/4 at c = 0.
pub fn polya_gamma_mean(c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-4 {
        0.25 - c * c / 48.0
    } else {
        (0.5 * c).tanh() / (2.0 * c)
    }
}

/// `Var[PG(1, c)] = (sinh c - c) / (4 c³ cosh²(c/2))`, 1/24 at c = 0.
pub fn polya_gamma_variance(c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-4 {
        1.0 / 24.0 - c * c / 120.0
    } else if c < 1.0 {
        // sinh c - c by its series to avoid cancellation
        let c2 = c * c;
        let mut term = c * c2 / 6.0;
        let mut diff = 0.0f64;
        let mut m = 1.0;
        while term > 1e-18 * diff.max(f64::MIN_POSITIVE) {
            diff += term;
            term *= c2 / ((2.0 * m + 2.0) * (2.0 * m + 3.0));
            m += 1.0;
        }
        let ch = (0.5 * c).cosh();
        diff / (4.0 * c * c2 * ch * ch)
    } else if c > 700.0 {
        // sinh c / cosh²(c/2) -> 2
        (2.0 - 4.0 * c * (-c).exp()) / (4.0 * c * c * c)
    } else {
        let ch = (0.5 * c).cosh();
        (c.sinh() - c) / (4.0 * c * c * c * ch * ch)
    }
}

/// Coefficient `a_n(x)` of the alternating series for the J*(1, 0) density.
fn series_coef(n: u32, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        let h = n as f64 + 0.5;
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}

/// `log Φ(x)`, accurate in the far left tail.
fn log_ndtr(x: f64) -> f64 {
    if x > -20.0 {
        (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Probability of choosing the exponential (right) proposal.
fn mass_texpon(z: f64, fz: f64) -> f64 {
    let t = TRUNC;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + log_ndtr(b);
    let xa = x0 + z + log_ndtr(a);
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    let m = 1.0 / (1.0 + q_over_p);
    if m.is_nan() {
        0.0
    } else {
        m
    }
}

/// Inverse-Gaussian IG(1/z, 1) truncated to (0, t).
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let t = TRUNC;
    if TRUNC_RECIP > z {
        // mean beyond the truncation point: propose from the z = 0 law
        loop {
            let (mut e1, mut e2): (f64, f64) = (rng.sample(Exp1), rng.sample(Exp1));
            while e1 * e1 > 2.0 * e2 / t {
                e1 = rng.sample(Exp1);
                e2 = rng.sample(Exp1);
            }
            let d = 1.0 + e1 * t;
            let x = t / (d * d);
            let alpha = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= alpha {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let y: f64 = rng.sample(StandardNormal);
            let y = y * y;
            let half_mu = 0.5 * mu;
            let mu_y = mu * y;
            let mut x = mu + half_mu * mu_y - half_mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                return x;
            }
        }
    }
}
