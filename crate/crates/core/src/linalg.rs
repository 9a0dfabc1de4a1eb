//! Symmetric positive-definite matrices and the jittered Cholesky used
//! by every covariance and precision factorization.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, PdStage, Result};

/// First diagonal jitter, as a multiple of the mean diagonal.
pub const JITTER_START: f64 = 1e-10;
/// Number of times the jitter is escalated by a factor of ten.
pub const JITTER_ESCALATIONS: u32 = 3;

const SYMMETRY_TOL: f64 = 1e-12;

fn min_diag(m: &DMatrix<f64>) -> f64 {
    m.diagonal().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Cholesky factorization with bounded diagonal jitter.
///
/// Tries the plain factorization first, then adds `δ · mean(diag) · I`
/// with δ = 1e-10, 1e-9, 1e-8, 1e-7 before giving up.
pub fn cholesky_jittered(m: &DMatrix<f64>, stage: PdStage) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalPd { min_diag: min_diag(m), stage });
    }
    if let Some(c) = m.clone().cholesky() {
        return Ok(c);
    }
    let n = m.nrows();
    let mean_diag = if n == 0 { 0.0 } else { m.trace() / n as f64 };
    let mut delta = JITTER_START;
    for _ in 0..=JITTER_ESCALATIONS {
        let shift = delta * mean_diag.abs().max(f64::MIN_POSITIVE);
        let mut jittered = m.clone();
        for i in 0..n {
            jittered[(i, i)] += shift;
        }
        if let Some(c) = jittered.cholesky() {
            log::warn!("cholesky at stage {stage} needed jitter {delta:e}");
            return Ok(c);
        }
        delta *= 10.0;
    }
    Err(Error::NumericalPd { min_diag: min_diag(m), stage })
}

/// A symmetric positive-definite matrix with its cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct PdMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl PdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_stage(matrix, PdStage::Construct)
    }

    pub fn with_stage(matrix: DMatrix<f64>, stage: PdStage) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!("expected square matrix, got {}x{}", matrix.nrows(), matrix.ncols())));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidInput(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let chol = cholesky_jittered(&matrix, stage)?;
        Ok(Self { matrix, chol })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is PD")
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * s)
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn chol(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    /// Lower-triangular Cholesky factor.
    pub fn chol_lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.chol.inverse();
        (&inv + inv.transpose()) * 0.5
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Normalized `log N(x | mean, self)`.
    pub fn mvn_log_density(&self, x: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        let k = self.dim() as f64;
        let diff = x - mean;
        let l = self.chol.l();
        let z = l.solve_lower_triangular(&diff).expect("cholesky factor has nonzero diagonal");
        let log_det: f64 = l.diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        -0.5 * (z.norm_squared() + log_det + k * (2.0 * std::f64::consts::PI).ln())
    }

    pub fn is_symmetric_pd(m: &DMatrix<f64>) -> bool {
        m.is_square()
            && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= SYMMETRY_TOL * m.amax().max(1.0)))
            && m.clone().cholesky().is_some()
    }
}

impl PartialEq for PdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Serialize for PdMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PdMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("matrix rows must form a square"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        PdMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(PdMatrix::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_indefinite_with_stage() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match PdMatrix::with_stage(m, PdStage::Precision) {
            Err(Error::NumericalPd { min_diag, stage }) => {
                assert_eq!(min_diag, 1.0);
                assert_eq!(stage, PdStage::Precision);
            }
            other => panic!("expected PD error, got {other:?}"),
        }
    }

    #[test]
    fn jitter_repairs_semidefinite() {
        // rank one, PSD: needs jitter
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let pd = PdMatrix::new(m).unwrap();
        assert_eq!(pd.dim(), 2);
    }

    #[test]
    fn log_density_standard_normal() {
        let pd = PdMatrix::identity(1);
        let x = DVector::from_vec(vec![0.0]);
        let ld = pd.mvn_log_density(&x, &x);
        assert!((ld + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn serde_roundtrip() {
        let pd = PdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5])).unwrap();
        let s = serde_json::to_string(&pd).unwrap();
        let back: PdMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(pd, back);
    }
}
