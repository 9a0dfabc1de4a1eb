//! Conjugate updates for the population-level parameters, shared by both
//! samplers: the half-t scales `a`, the covariance `Ω` and the means `ζ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, PdStage, Result};
use crate::kernels::{sample_gamma, sample_inverse_wishart, sample_mvn_cov, sample_mvn_precision};
use crate::linalg::PdMatrix;
use crate::model::HyperParameters;
use crate::Mutation;

/// Form of the `ζ` conditional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaUpdate {
    /// Normal prior `N(μ₀, Σ₀)` combined with the `β` likelihood.
    #[default]
    Conjugate,
    /// `N(β̄, Ω/N)`: the prior on `ζ` is dropped (flat prior).
    Flat,
}

/// `a_k ~ Gamma((ν + K)/2, rate 1/A_k² + ν (Ω⁻¹)_kk)` independently.
pub fn draw_a<R: Rng + ?Sized>(
    omega: &PdMatrix,
    hyper: &HyperParameters,
    mutation: Option<Mutation>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let k = omega.dim();
    let omega_inv = omega.inverse();
    let shape = (hyper.nu + k as f64) / 2.0;
    let mut a = DVector::zeros(k);
    for i in 0..k {
        let prior_rate = 1.0 / (hyper.a_scale[i] * hyper.a_scale[i]);
        let rate = if mutation == Some(Mutation::A) { prior_rate } else { prior_rate + hyper.nu * omega_inv[(i, i)] };
        a[i] = sample_gamma(shape, rate, rng)?;
    }
    Ok(a)
}

/// `Ω ~ IW(ν + m + K - 1, 2ν diag(a) + S)` where `m` vectors contributed
/// the scatter matrix `S`.
pub fn draw_omega<R: Rng + ?Sized>(
    n_vectors: usize,
    scatter: &DMatrix<f64>,
    a: &DVector<f64>,
    hyper: &HyperParameters,
    mutation: Option<Mutation>,
    rng: &mut R,
) -> Result<PdMatrix> {
    let k = a.len();
    let df = hyper.nu + n_vectors as f64 + k as f64 - 1.0;
    let mut scale = scatter.clone();
    if mutation != Some(Mutation::Omega) {
        scale += DMatrix::from_diagonal(&(a * (2.0 * hyper.nu)));
    }
    let scale = PdMatrix::with_stage(scale, PdStage::WishartScale)?;
    sample_inverse_wishart(df, &scale, rng)
}

/// `Σ (x - center)(x - center)ᵀ`.
pub fn scatter<'a>(xs: impl Iterator<Item = &'a DVector<f64>>, center: &DVector<f64>, k: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(k, k);
    for x in xs {
        let d = x - center;
        s.ger(1.0, &d, &d, 1.0);
    }
    s
}

/// Draw `ζ` given the `m` individual coefficient vectors in `betas`.
pub fn draw_zeta<'a, R: Rng + ?Sized>(
    betas: impl Iterator<Item = &'a DVector<f64>>,
    omega: &PdMatrix,
    hyper: &HyperParameters,
    rule: ZetaUpdate,
    mutation: Option<Mutation>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let k = omega.dim();
    let mut sum = DVector::zeros(k);
    let mut m = 0usize;
    for b in betas {
        sum += b;
        m += 1;
    }
    match rule {
        ZetaUpdate::Flat => {
            if m == 0 {
                return Err(Error::InvalidInput("flat zeta update needs N >= 1".into()));
            }
            let mean = sum / m as f64;
            if mutation == Some(Mutation::Zeta) {
                return Ok(mean);
            }
            let cov = PdMatrix::with_stage(omega.matrix() / m as f64, PdStage::Covariance)?;
            sample_mvn_cov(&mean, &cov, rng)
        }
        ZetaUpdate::Conjugate => {
            let omega_inv = omega.inverse();
            let sigma0_inv = hyper.sigma0.inverse();
            let precision = PdMatrix::with_stage(&sigma0_inv + &omega_inv * m as f64, PdStage::Precision)?;
            let linear = &sigma0_inv * hyper.mu0_vec() + &omega_inv * sum;
            if mutation == Some(Mutation::Zeta) {
                return Ok(precision.solve(&linear));
            }
            sample_mvn_precision(&precision, &linear, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};

    fn hyper(k: usize) -> HyperParameters {
        HyperParameters::weakly_informative(1, k)
    }

    #[test]
    fn a_conditional_moments() {
        let h = hyper(2);
        let omega = PdMatrix::identity(2);
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let a = draw_a(&omega, &h, None, &mut s).unwrap();
            sum += a[0];
            sumsq += a[0] * a[0];
        }
        let m = sum / n as f64;
        let sd = (sumsq / n as f64 - m * m).sqrt();
        // shape (2+2)/2 = 2, rate 1e-6 + 2
        let expect = 2.0 / (2.0 + 1e-6);
        assert!((m - expect).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn a_with_huge_omega_tends_to_prior_rate() {
        let h = hyper(1);
        let omega = PdMatrix::diagonal(&[1e12]).unwrap();
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 1);
        let n = 50_000;
        let m = (0..n).map(|_| draw_a(&omega, &h, None, &mut s).unwrap()[0]).sum::<f64>() / n as f64;
        // mean -> A²(ν + K)/2 = 1e6 * 1.5, rate ≈ 1e-6 + 2e-12
        let expect = 1.5 / (1e-6 + 2e-12);
        let sd = 1.5f64.sqrt() / (1e-6 + 2e-12);
        assert!((m - expect).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn a_deterministic_under_fixed_stream() {
        let h = hyper(2);
        let omega = PdMatrix::identity(2);
        let mut s1 = RngStream::from_parts(1, Purpose::Hyper, 0, 0);
        let mut s2 = RngStream::from_parts(1, Purpose::Hyper, 0, 0);
        assert_eq!(draw_a(&omega, &h, None, &mut s1).unwrap(), draw_a(&omega, &h, None, &mut s2).unwrap());
    }

    #[test]
    fn omega_without_scatter_has_prior_form() {
        let h = HyperParameters { nu: 6.0, ..hyper(2) };
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let s0 = DMatrix::zeros(2, 2);
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 2);
        let n = 100_000;
        let mut sum = DMatrix::zeros(2, 2);
        for _ in 0..n {
            sum += draw_omega(0, &s0, &a, &h, None, &mut s).unwrap().matrix();
        }
        let mean = sum / n as f64;
        // IW(ν + K - 1, 2ν diag a) has mean 2ν diag(a) / (ν + K - 1 - K - 1) = 12 diag(a) / 4
        for i in 0..2 {
            let expect = 3.0 * a[i];
            assert!((mean[(i, i)] - expect).abs() / expect < 0.03, "{}", mean[(i, i)]);
        }
        assert!(mean[(0, 1)].abs() < 0.05);
    }

    #[test]
    fn omega_concentrates_on_scatter() {
        let h = hyper(2);
        let truth = PdMatrix::new(DMatrix::from_row_slice(2, 2, &[0.8, 0.3, 0.3, 0.5])).unwrap();
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 3);
        let zero = DVector::zeros(2);
        let betas: Vec<_> = (0..10_000).map(|_| sample_mvn_cov(&zero, &truth, &mut s).unwrap()).collect();
        let sc = scatter(betas.iter(), &zero, 2);
        let a = DVector::from_vec(vec![1.0, 1.0]);
        let mut sum = DMatrix::zeros(2, 2);
        for _ in 0..200 {
            sum += draw_omega(betas.len(), &sc, &a, &h, None, &mut s).unwrap().matrix();
        }
        let mean = sum / 200.0;
        for i in 0..2 {
            for j in 0..2 {
                assert!((mean[(i, j)] - truth.get(i, j)).abs() < 0.05 * truth.get(i, i).max(truth.get(j, j)));
            }
        }
    }

    #[test]
    fn zeta_flat_all_equal_betas() {
        let h = hyper(2);
        let b = DVector::from_vec(vec![1.5, -0.5]);
        let betas = vec![b.clone(); 1000];
        let omega = PdMatrix::identity(2);
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 4);
        let n = 20_000;
        let mut sum = DVector::zeros(2);
        let mut sumsq = DVector::zeros(2);
        for _ in 0..n {
            let z = draw_zeta(betas.iter(), &omega, &h, ZetaUpdate::Flat, None, &mut s).unwrap();
            sum += &z;
            sumsq += z.component_mul(&z);
        }
        let mean = &sum / n as f64;
        let var = sumsq / n as f64 - mean.component_mul(&mean);
        for i in 0..2 {
            assert!((mean[i] - b[i]).abs() < 4.0 * (1.0 / 1000.0 / n as f64).sqrt());
            // variance Ω/N
            assert!((var[i] - 1e-3).abs() < 5e-5);
        }
        assert!(draw_zeta(std::iter::empty(), &omega, &h, ZetaUpdate::Flat, None, &mut s).is_err());
    }

    #[test]
    fn zeta_conjugate_without_data_is_prior() {
        let h = HyperParameters { mu0: vec![1.0, -2.0], ..hyper(2) };
        let omega = PdMatrix::identity(2);
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 5);
        let n = 50_000;
        let draws: Vec<_> = (0..n)
            .map(|_| draw_zeta(std::iter::empty(), &omega, &h, ZetaUpdate::Conjugate, None, &mut s).unwrap())
            .collect();
        for i in 0..2 {
            let m = draws.iter().map(|d| d[i]).sum::<f64>() / n as f64;
            assert!((m - h.mu0[i]).abs() < 4.0 * (10.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn zeta_deterministic_under_fixed_stream() {
        let h = hyper(1);
        let betas = [DVector::from_vec(vec![0.3]), DVector::from_vec(vec![-0.1])];
        let omega = PdMatrix::identity(1);
        let draw = || {
            let mut s = RngStream::from_parts(9, Purpose::Hyper, 0, 0);
            draw_zeta(betas.iter(), &omega, &h, ZetaUpdate::Flat, None, &mut s).unwrap()
        };
        assert_eq!(draw(), draw());
    }
}
