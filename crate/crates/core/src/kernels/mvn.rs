use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::PdMatrix;

pub fn standard_normal_vec<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Draw from `N(mean, cov)` as `mean + L z` with `L` the Cholesky factor.
pub fn sample_mvn_cov<R: Rng + ?Sized>(mean: &DVector<f64>, cov: &PdMatrix, rng: &mut R) -> Result<DVector<f64>> {
    if mean.len() != cov.dim() {
        return Err(Error::Dimension(format!(
            "mean has length {}, covariance is {}x{}",
            mean.len(),
            cov.dim(),
            cov.dim()
        )));
    }
    let z = standard_normal_vec(mean.len(), rng);
    Ok(mean + cov.chol().l() * z)
}

/// Draw from `N(Λ⁻¹b, Λ⁻¹)` given the precision `Λ` and linear term `b`.
///
/// With `Λ = R Rᵀ`, the mean is a Cholesky solve and the noise is
/// `R⁻ᵀ z`; `Λ` is never inverted.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    precision: &PdMatrix,
    linear_term: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if linear_term.len() != precision.dim() {
        return Err(Error::Dimension(format!(
            "linear term has length {}, precision is {}x{}",
            linear_term.len(),
            precision.dim(),
            precision.dim()
        )));
    }
    let mean = precision.solve(linear_term);
    let z = standard_normal_vec(mean.len(), rng);
    let noise = precision
        .chol()
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::InvalidState("singular precision factor".into()))?;
    Ok(mean + noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};
    use nalgebra::DMatrix;

    fn moments(draws: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let n = draws.len() as f64;
        let d = draws[0].len();
        let mut m = DVector::zeros(d);
        for x in draws {
            m += x;
        }
        m /= n;
        let mut c = DMatrix::zeros(d, d);
        for x in draws {
            let e = x - &m;
            c += &e * e.transpose();
        }
        (m, c / (n - 1.0))
    }

    /// Standard error of a sample covariance entry, from fourth moments.
    fn cov_se(draws: &[DVector<f64>], mean: &DVector<f64>, i: usize, j: usize) -> f64 {
        let n = draws.len() as f64;
        let prods: Vec<f64> = draws.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).collect();
        let pm = prods.iter().sum::<f64>() / n;
        let pv = prods.iter().map(|p| (p - pm).powi(2)).sum::<f64>() / (n - 1.0);
        (pv / n).sqrt()
    }

    fn check(draws: &[DVector<f64>], mean: &DVector<f64>, cov: &DMatrix<f64>) {
        let (m, c) = moments(draws);
        let n = draws.len() as f64;
        for i in 0..mean.len() {
            let se = (cov[(i, i)] / n).sqrt();
            assert!((m[i] - mean[i]).abs() < 4.0 * se, "mean[{i}] {} vs {}", m[i], mean[i]);
            for j in 0..mean.len() {
                let se = cov_se(draws, &m, i, j);
                assert!((c[(i, j)] - cov[(i, j)]).abs() < 4.0 * se, "cov[{i},{j}] {} vs {}", c[(i, j)], cov[(i, j)]);
            }
        }
    }

    #[test]
    fn cov_form_standard() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 0);
        let cov = PdMatrix::identity(2);
        let mean = DVector::zeros(2);
        let draws: Vec<_> = (0..100_000).map(|_| sample_mvn_cov(&mean, &cov, &mut s).unwrap()).collect();
        check(&draws, &mean, cov.matrix());
    }

    #[test]
    fn cov_form_diagonal() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 1);
        let cov = PdMatrix::diagonal(&[4.0, 9.0]).unwrap();
        let mean = DVector::zeros(2);
        let draws: Vec<_> = (0..100_000).map(|_| sample_mvn_cov(&mean, &cov, &mut s).unwrap()).collect();
        check(&draws, &mean, cov.matrix());
    }

    #[test]
    fn cov_form_correlated() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 2);
        let cov = PdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let mean = DVector::from_vec(vec![1.0, -1.0]);
        let draws: Vec<_> = (0..1_000_000).map(|_| sample_mvn_cov(&mean, &cov, &mut s).unwrap()).collect();
        check(&draws, &mean, cov.matrix());
    }

    #[test]
    fn precision_identity() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 3);
        let p = PdMatrix::identity(2);
        let b = DVector::zeros(2);
        let draws: Vec<_> = (0..100_000).map(|_| sample_mvn_precision(&p, &b, &mut s).unwrap()).collect();
        check(&draws, &b, &DMatrix::identity(2, 2));
    }

    #[test]
    fn precision_scalar() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 4);
        let p = PdMatrix::diagonal(&[4.0]).unwrap();
        let b = DVector::from_vec(vec![8.0]);
        let draws: Vec<_> = (0..100_000).map(|_| sample_mvn_precision(&p, &b, &mut s).unwrap()).collect();
        check(&draws, &DVector::from_vec(vec![2.0]), &DMatrix::from_element(1, 1, 0.25));
    }

    #[test]
    fn precision_matches_dense_inverse() {
        let lam = DMatrix::from_row_slice(3, 3, &[3.0, 0.8, -0.4, 0.8, 2.0, 0.3, -0.4, 0.3, 1.5]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        // oracle: Gauss-Jordan inverse, independent of the Cholesky path
        let inv = lam.clone().try_inverse().unwrap();
        let mean = &inv * &b;
        let p = PdMatrix::new(lam).unwrap();
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 5);
        let draws: Vec<_> = (0..1_000_000).map(|_| sample_mvn_precision(&p, &b, &mut s).unwrap()).collect();
        check(&draws, &mean, &inv);
    }

    #[test]
    fn dimension_errors() {
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 6);
        let p = PdMatrix::identity(2);
        assert!(matches!(sample_mvn_precision(&p, &DVector::zeros(3), &mut s), Err(Error::Dimension(_))));
        assert!(matches!(sample_mvn_cov(&DVector::zeros(1), &p, &mut s), Err(Error::Dimension(_))));
    }
}
