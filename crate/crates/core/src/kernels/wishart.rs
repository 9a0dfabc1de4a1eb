use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, PdStage, Result};
use crate::kernels::sample_gamma;
use crate::linalg::PdMatrix;

/// Inverse-Wishart draw with density ∝ |Ω|^{-(df+p+1)/2} exp(-tr(Ψ Ω⁻¹)/2),
/// so that `E[Ω] = Ψ / (df - p - 1)`.
///
/// Bartlett construction: with `Ψ = U Uᵀ` and `A` the Bartlett factor of a
/// standard Wishart, `Ω = (U A⁻ᵀ)(U A⁻ᵀ)ᵀ`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(df: f64, scale: &PdMatrix, rng: &mut R) -> Result<PdMatrix> {
    let p = scale.dim();
    if !(df.is_finite() && df > p as f64 - 1.0) {
        return invalid(format!("inverse Wishart needs df > dim - 1, got df={df}, dim={p}"));
    }
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        // chi-square(df - i) = 2 * Gamma((df - i)/2, rate 1)
        let chi2 = 2.0 * sample_gamma((df - i as f64) / 2.0, 1.0, rng)?;
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let a_inv = a
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or(crate::Error::NumericalPd { min_diag: 0.0, stage: PdStage::WishartScale })?;
    let m = scale.chol().l() * a_inv.transpose();
    let omega = &m * m.transpose();
    PdMatrix::with_stage(omega, PdStage::WishartScale)
}
