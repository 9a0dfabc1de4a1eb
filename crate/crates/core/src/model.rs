//! Model mathematics shared by both samplers: datasets, parameter states,
//! representative utilities, MNL probabilities and the binary-logit
//! reduction quantities `L`, `η`, `κ`.
//!
//! Alternatives, decision-makers and occasions are 0-based here. The file
//! formats in [`crate::io`] convert to 1-based indices.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::sample_polya_gamma;
use crate::linalg::PdMatrix;

/// Balanced panel of `N` decision-makers × `T` occasions × `J` alternatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDataset {
    n_dm: usize,
    n_occ: usize,
    n_alt: usize,
    n_fixed: usize,
    n_random: usize,
    xf: Vec<f64>,
    xr: Vec<f64>,
    choices: Vec<usize>,
}

impl ChoiceDataset {
    /// `xf` is laid out `[n][t][j][l]`, `xr` as `[n][t][j][k]`, `choices`
    /// as `[n][t]` with 0-based alternative indices.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_dm: usize,
        n_occ: usize,
        n_alt: usize,
        n_fixed: usize,
        n_random: usize,
        xf: Vec<f64>,
        xr: Vec<f64>,
        choices: Vec<usize>,
    ) -> Result<Self> {
        if n_dm == 0 || n_occ == 0 || n_alt == 0 {
            return invalid("N, T and J must be positive");
        }
        let rows = n_dm * n_occ * n_alt;
        if xf.len() != rows * n_fixed || xr.len() != rows * n_random {
            return Err(Error::Dimension(format!(
                "covariate tensors have {} and {} entries, expected {} and {}",
                xf.len(),
                xr.len(),
                rows * n_fixed,
                rows * n_random
            )));
        }
        if choices.len() != n_dm * n_occ {
            return Err(Error::Dimension(format!("{} choices for {} occasions", choices.len(), n_dm * n_occ)));
        }
        if let Some(i) = xf.iter().chain(xr.iter()).position(|x| !x.is_finite()) {
            return invalid(format!("non-finite covariate at flat index {i}"));
        }
        if let Some(i) = choices.iter().position(|&c| c >= n_alt) {
            return invalid(format!("choice {} out of range at occasion {i}", choices[i]));
        }
        Ok(Self { n_dm, n_occ, n_alt, n_fixed, n_random, xf, xr, choices })
    }

    pub fn n_decision_makers(&self) -> usize {
        self.n_dm
    }
    pub fn n_occasions(&self) -> usize {
        self.n_occ
    }
    pub fn n_alternatives(&self) -> usize {
        self.n_alt
    }
    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }
    pub fn n_random(&self) -> usize {
        self.n_random
    }

    #[inline]
    pub fn row_index(&self, n: usize, t: usize, j: usize) -> usize {
        (n * self.n_occ + t) * self.n_alt + j
    }

    #[inline]
    pub fn xf(&self, n: usize, t: usize, j: usize) -> &[f64] {
        let r = self.row_index(n, t, j) * self.n_fixed;
        &self.xf[r..r + self.n_fixed]
    }

    #[inline]
    pub fn xr(&self, n: usize, t: usize, j: usize) -> &[f64] {
        let r = self.row_index(n, t, j) * self.n_random;
        &self.xr[r..r + self.n_random]
    }

    #[inline]
    pub fn choice(&self, n: usize, t: usize) -> usize {
        self.choices[n * self.n_occ + t]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn xf_all(&self) -> &[f64] {
        &self.xf
    }

    pub fn xr_all(&self) -> &[f64] {
        &self.xr
    }

    /// Replace the observed choices, keeping covariates. Used when
    /// simulating fresh outcomes from a parameter state.
    pub fn set_choices(&mut self, choices: Vec<usize>) -> Result<()> {
        if choices.len() != self.choices.len() || choices.iter().any(|&c| c >= self.n_alt) {
            return invalid("replacement choices do not fit the panel");
        }
        self.choices = choices;
        Ok(())
    }
}

fn default_nu() -> f64 {
    2.0
}

/// Prior hyper-parameters `{λ₀, Ξ₀, μ₀, Σ₀, ν, A}`.
///
/// The half-t construction uses `a_k ~ Gamma(1/2, rate 1/A_k²)` and
/// `Ω | a ~ IW(ν + K - 1, 2ν diag(a))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HyperParameters {
    pub lambda0: Vec<f64>,
    pub xi0: PdMatrix,
    pub mu0: Vec<f64>,
    pub sigma0: PdMatrix,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub a_scale: Vec<f64>,
}

impl HyperParameters {
    /// Weakly-informative defaults: λ₀ = 0, μ₀ = 0, Ξ₀ = Σ₀ = 10·I, ν = 2, A_k = 10³.
    pub fn weakly_informative(n_fixed: usize, n_random: usize) -> Self {
        Self {
            lambda0: vec![0.0; n_fixed],
            xi0: PdMatrix::scaled_identity(n_fixed, 10.0).expect("positive diagonal"),
            mu0: vec![0.0; n_random],
            sigma0: PdMatrix::scaled_identity(n_random, 10.0).expect("positive diagonal"),
            nu: 2.0,
            a_scale: vec![1e3; n_random],
        }
    }

    pub fn validate(&self, n_fixed: usize, n_random: usize) -> Result<()> {
        if self.lambda0.len() != n_fixed || self.xi0.dim() != n_fixed {
            return Err(Error::Dimension(format!(
                "fixed-coefficient prior has dims ({}, {}), dataset has L={n_fixed}",
                self.lambda0.len(),
                self.xi0.dim()
            )));
        }
        if self.mu0.len() != n_random || self.sigma0.dim() != n_random || self.a_scale.len() != n_random {
            return Err(Error::Dimension(format!(
                "random-coefficient prior has dims ({}, {}, {}), dataset has K={n_random}",
                self.mu0.len(),
                self.sigma0.dim(),
                self.a_scale.len()
            )));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return invalid(format!("nu must be positive, got {}", self.nu));
        }
        if self.a_scale.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return invalid("A_k must be positive");
        }
        Ok(())
    }

    pub fn lambda0_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.lambda0)
    }

    pub fn mu0_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mu0)
    }

    /// Degrees of freedom of the inverse-Wishart prior on Ω.
    pub fn omega_prior_df(&self) -> f64 {
        self.nu + self.mu0.len() as f64 - 1.0
    }
}

/// Parameters of the generic-coefficient model: shared `α`, `β_n` across alternatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericParamState {
    pub alpha: DVector<f64>,
    pub zeta: DVector<f64>,
    pub omega: PdMatrix,
    pub a: DVector<f64>,
    pub beta: Vec<DVector<f64>>,
}

/// Parameters of the alternative-specific model used by the Pólya-Gamma
/// sampler, including the auxiliary `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AltSpecificParamState {
    pub alpha: Vec<DVector<f64>>,
    pub zeta: Vec<DVector<f64>>,
    pub omega: PdMatrix,
    pub a: DVector<f64>,
    /// Indexed `n * J + j`.
    pub beta: Vec<DVector<f64>>,
    /// Indexed like dataset rows, `(n * T + t) * J + j`.
    pub phi: Vec<f64>,
}

impl AltSpecificParamState {
    pub fn n_alternatives(&self) -> usize {
        self.alpha.len()
    }

    #[inline]
    pub fn beta_at(&self, n: usize, j: usize) -> &DVector<f64> {
        &self.beta[n * self.alpha.len() + j]
    }
}

/// Anything that assigns a representative utility to a (n, t, j) cell.
pub trait Utility {
    fn utility(&self, data: &ChoiceDataset, n: usize, t: usize, j: usize) -> f64;
    fn check_dims(&self, data: &ChoiceDataset) -> Result<()>;
}

#[inline]
pub(crate) fn dot(x: &[f64], b: &DVector<f64>) -> f64 {
    x.iter().zip(b.iter()).map(|(a, b)| a * b).sum()
}

impl Utility for GenericParamState {
    #[inline]
    fn utility(&self, data: &ChoiceDataset, n: usize, t: usize, j: usize) -> f64 {
        let fixed = dot(data.xf(n, t, j), &self.alpha);
        if data.n_random() == 0 {
            fixed
        } else {
            fixed + dot(data.xr(n, t, j), &self.beta[n])
        }
    }

    fn check_dims(&self, data: &ChoiceDataset) -> Result<()> {
        let ok = self.alpha.len() == data.n_fixed()
            && self.zeta.len() == data.n_random()
            && self.omega.dim() == data.n_random()
            && self.a.len() == data.n_random()
            && self.beta.len() == data.n_decision_makers()
            && self.beta.iter().all(|b| b.len() == data.n_random());
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("generic state does not match dataset".into()))
        }
    }
}

impl Utility for AltSpecificParamState {
    #[inline]
    fn utility(&self, data: &ChoiceDataset, n: usize, t: usize, j: usize) -> f64 {
        let fixed = dot(data.xf(n, t, j), &self.alpha[j]);
        if data.n_random() == 0 {
            fixed
        } else {
            fixed + dot(data.xr(n, t, j), self.beta_at(n, j))
        }
    }

    fn check_dims(&self, data: &ChoiceDataset) -> Result<()> {
        let j = data.n_alternatives();
        let ok = self.alpha.len() == j
            && self.alpha.iter().all(|a| a.len() == data.n_fixed())
            && self.zeta.len() == j
            && self.zeta.iter().all(|z| z.len() == data.n_random())
            && self.omega.dim() == data.n_random()
            && self.a.len() == data.n_random()
            && self.beta.len() == data.n_decision_makers() * j
            && self.beta.iter().all(|b| b.len() == data.n_random())
            && self.phi.len() == data.n_decision_makers() * data.n_occasions() * j;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("alternative-specific state does not match dataset".into()))
        }
    }
}

/// `V[n][t][j]` flattened in dataset row order.
pub fn representative_utility<P: Utility + ?Sized>(data: &ChoiceDataset, params: &P) -> Result<Vec<f64>> {
    params.check_dims(data)?;
    let mut v = Vec::with_capacity(data.n_dm * data.n_occ * data.n_alt);
    for n in 0..data.n_dm {
        for t in 0..data.n_occ {
            for j in 0..data.n_alt {
                v.push(params.utility(data, n, t, j));
            }
        }
    }
    Ok(v)
}

/// Max-shifted log-sum-exp. Empty input gives `-inf`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-sum-exp over every entry except `skip`, without forming the full sum.
pub fn log_sum_exp_excluding(v: &[f64], skip: usize) -> f64 {
    let m = v.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = v.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, x)| (x - m).exp()).sum();
    m + s.ln()
}

/// Softmax of one occasion's utilities.
pub fn mnl_probabilities(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return invalid("no alternatives");
    }
    if v.iter().any(|x| !x.is_finite()) {
        return invalid("non-finite utility");
    }
    let lse = log_sum_exp(v);
    Ok(v.iter().map(|x| (x - lse).exp()).collect())
}

/// `log P(y_nt | V)` for one occasion.
#[inline]
pub(crate) fn log_prob_chosen(v: &[f64], chosen: usize) -> f64 {
    v[chosen] - log_sum_exp(v)
}

/// `Σ_t log P(y_nt | ·)` for decision-maker `n`.
pub fn sequence_log_likelihood<P: Utility + ?Sized>(data: &ChoiceDataset, params: &P, n: usize) -> Result<f64> {
    params.check_dims(data)?;
    if n >= data.n_dm {
        return invalid(format!("decision-maker {n} out of range"));
    }
    Ok(sequence_log_likelihood_unchecked(data, params, n))
}

pub(crate) fn sequence_log_likelihood_unchecked<P: Utility + ?Sized>(
    data: &ChoiceDataset,
    params: &P,
    n: usize,
) -> f64 {
    let mut v = vec![0.0; data.n_alt];
    let mut ll = 0.0;
    for t in 0..data.n_occ {
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = params.utility(data, n, t, j);
        }
        ll += log_prob_chosen(&v, data.choice(n, t));
    }
    ll
}

/// `L_ntj = ln Σ_{k≠j} exp(V_ntk)` and `η_ntj = V_ntj - L_ntj` for every
/// occasion, given `V` in dataset row order with `n_alt` entries per occasion.
pub fn compute_l_eta(v: &[f64], n_alt: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_alt < 2 {
        return invalid("L is undefined with a single alternative");
    }
    if j >= n_alt {
        return invalid(format!("alternative {j} out of range"));
    }
    if !v.len().is_multiple_of(n_alt) {
        return Err(Error::Dimension("utility tensor is not a whole number of occasions".into()));
    }
    let (l, eta): (Vec<f64>, Vec<f64>) = v
        .chunks_exact(n_alt)
        .map(|row| {
            let l = log_sum_exp_excluding(row, j);
            (l, row[j] - l)
        })
        .unzip();
    Ok((l, eta))
}

/// `κ = y - 1/2`.
pub fn kappa(y: u8) -> Result<f64> {
    match y {
        0 => Ok(-0.5),
        1 => Ok(0.5),
        _ => invalid(format!("indicator must be 0 or 1, got {y}")),
    }
}

/// Rewrite per-alternative fixed coefficients as generic ones: the output
/// has `L·J` fixed covariates, alternative `j`'s covariates occupying block
/// `j` and zeros elsewhere, so a shared `α'` equals `(α_1, …, α_J)` stacked.
pub fn expand_alternative_specific(data: &ChoiceDataset) -> Result<ChoiceDataset> {
    let (l, j_n) = (data.n_fixed, data.n_alt);
    let width = l * j_n;
    let mut xf = vec![0.0; data.n_dm * data.n_occ * j_n * width];
    for n in 0..data.n_dm {
        for t in 0..data.n_occ {
            for j in 0..j_n {
                let row = data.row_index(n, t, j) * width + j * l;
                xf[row..row + l].copy_from_slice(data.xf(n, t, j));
            }
        }
    }
    ChoiceDataset::new(data.n_dm, data.n_occ, j_n, width, data.n_random, xf, data.xr.clone(), data.choices.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs_estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo check of the Pólya-Gamma integral identity
/// `e^{ηy} / (1 + e^η) = (e^{κη} / 2) E[exp(-η² φ / 2)]`, `φ ~ PG(1, 0)`.
pub fn pg_identity_check<R: Rng + ?Sized>(eta: f64, y: u8, n_draws: usize, rng: &mut R) -> Result<IdentityCheck> {
    if n_draws < 10_000 {
        return invalid(format!("identity check needs at least 10^4 draws, got {n_draws}"));
    }
    if !eta.is_finite() {
        return invalid("eta must be finite");
    }
    let k = kappa(y)?;
    let lhs = (eta * y as f64 - (1.0 + eta.exp()).ln()).exp();
    let pre = 0.5 * (k * eta).exp();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n_draws {
        let phi = sample_polya_gamma(0.0, rng)?;
        let w = (-0.5 * eta * eta * phi).exp();
        s += w;
        s2 += w * w;
    }
    let nf = n_draws as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(IdentityCheck { lhs, rhs_estimate: pre * mean, std_error: pre * (var / nf).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};
    use proptest::prelude::{prop, prop_assert, proptest};

    fn scalar_dataset(xf: f64, xr: f64) -> ChoiceDataset {
        ChoiceDataset::new(1, 1, 1, 1, 1, vec![xf], vec![xr], vec![0]).unwrap()
    }

    fn generic(alpha: &[f64], beta: Vec<Vec<f64>>) -> GenericParamState {
        let k = beta.first().map_or(0, |b| b.len());
        GenericParamState {
            alpha: DVector::from_column_slice(alpha),
            zeta: DVector::zeros(k),
            omega: PdMatrix::identity(k),
            a: DVector::from_element(k, 1.0),
            beta: beta.into_iter().map(DVector::from_vec).collect(),
        }
    }

    #[test]
    fn scalar_utility() {
        let d = scalar_dataset(1.0, 2.0);
        let p = generic(&[0.5], vec![vec![1.5]]);
        assert_eq!(representative_utility(&d, &p).unwrap(), vec![3.5]);
    }

    #[test]
    fn zero_covariates_zero_utility() {
        let d = ChoiceDataset::new(2, 2, 3, 2, 1, vec![0.0; 24], vec![0.0; 12], vec![0; 4]).unwrap();
        let p = generic(&[1.0, -2.0], vec![vec![3.0], vec![4.0]]);
        assert!(representative_utility(&d, &p).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn utility_matches_loop_oracle() {
        let (n_dm, n_occ, n_alt, l, k) = (3, 4, 3, 2, 2);
        let mut s = RngStream::from_parts(1, Purpose::Test, 0, 0);
        let mut draw = |m: usize| -> Vec<f64> { (0..m).map(|_| s.random::<f64>() * 4.0 - 2.0).collect() };
        let xf = draw(n_dm * n_occ * n_alt * l);
        let xr = draw(n_dm * n_occ * n_alt * k);
        let alpha: Vec<DVector<f64>> = (0..n_alt).map(|_| DVector::from_vec(draw(l))).collect();
        let beta: Vec<DVector<f64>> = (0..n_dm * n_alt).map(|_| DVector::from_vec(draw(k))).collect();
        let d = ChoiceDataset::new(n_dm, n_occ, n_alt, l, k, xf.clone(), xr.clone(), vec![0; n_dm * n_occ]).unwrap();
        let p = AltSpecificParamState {
            alpha: alpha.clone(),
            zeta: vec![DVector::zeros(k); n_alt],
            omega: PdMatrix::identity(k),
            a: DVector::from_element(k, 1.0),
            beta: beta.clone(),
            phi: vec![0.25; n_dm * n_occ * n_alt],
        };
        let v = representative_utility(&d, &p).unwrap();
        let mut idx = 0;
        for n in 0..n_dm {
            for t in 0..n_occ {
                for j in 0..n_alt {
                    let mut acc = 0.0;
                    for li in 0..l {
                        acc += xf[((n * n_occ + t) * n_alt + j) * l + li] * alpha[j][li];
                    }
                    for ki in 0..k {
                        acc += xr[((n * n_occ + t) * n_alt + j) * k + ki] * beta[n * n_alt + j][ki];
                    }
                    assert!((v[idx] - acc).abs() < 1e-12);
                    idx += 1;
                }
            }
        }
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(ChoiceDataset::new(1, 1, 2, 1, 0, vec![0.0; 2], vec![], vec![2]).is_err());
        assert!(ChoiceDataset::new(1, 1, 2, 1, 0, vec![f64::NAN, 0.0], vec![], vec![0]).is_err());
        assert!(ChoiceDataset::new(1, 1, 2, 1, 0, vec![0.0; 3], vec![], vec![0]).is_err());
    }

    #[test]
    fn softmax_examples() {
        let p = mnl_probabilities(&[0.0, 0.0, 0.0]).unwrap();
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = mnl_probabilities(&[1.0, 0.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((p[0] - 0.731_059).abs() < 1e-6);
        assert!((p[1] - 0.268_941).abs() < 1e-6);
        let p = mnl_probabilities(&[800.0, 0.0]).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
        assert!(mnl_probabilities(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn sequence_log_likelihood_examples() {
        let d = ChoiceDataset::new(1, 1, 2, 1, 0, vec![0.0, 0.0], vec![], vec![0]).unwrap();
        let p = generic(&[1.0], vec![vec![]]);
        let p = GenericParamState { beta: vec![DVector::zeros(0)], ..p };
        assert!((sequence_log_likelihood(&d, &p, 0).unwrap() - 0.5f64.ln()).abs() < 1e-15);

        let d1 = ChoiceDataset::new(1, 1, 2, 1, 0, vec![0.3, -0.2], vec![], vec![1]).unwrap();
        let d3 = ChoiceDataset::new(1, 3, 2, 1, 0, [0.3, -0.2].repeat(3), vec![], vec![1; 3]).unwrap();
        let l1 = sequence_log_likelihood(&d1, &p, 0).unwrap();
        let l3 = sequence_log_likelihood(&d3, &p, 0).unwrap();
        assert!((l3 - 3.0 * l1).abs() < 1e-14);
        assert!(sequence_log_likelihood(&d1, &p, 1).is_err());
    }

    #[test]
    fn sequence_log_likelihood_matches_product() {
        let mut s = RngStream::from_parts(2, Purpose::Test, 0, 0);
        let (t_n, j_n) = (6, 4);
        let xf: Vec<f64> = (0..t_n * j_n * 2).map(|_| s.random::<f64>() * 3.0 - 1.5).collect();
        let choices: Vec<usize> = (0..t_n).map(|_| s.random_range(0..j_n)).collect();
        let d = ChoiceDataset::new(1, t_n, j_n, 2, 0, xf, vec![], choices.clone()).unwrap();
        let p = GenericParamState { beta: vec![DVector::zeros(0)], ..generic(&[0.7, -1.1], vec![vec![]]) };
        let v = representative_utility(&d, &p).unwrap();
        let prod: f64 = v.chunks(j_n).zip(&choices).map(|(row, &c)| mnl_probabilities(row).unwrap()[c]).product();
        let ll = sequence_log_likelihood(&d, &p, 0).unwrap();
        assert!((ll.exp() - prod).abs() < 1e-10 * prod.max(1e-300));
    }

    #[test]
    fn l_eta_examples() {
        let (l, eta) = compute_l_eta(&[1.5, -0.25], 2, 0).unwrap();
        assert_eq!(l[0], -0.25);
        assert_eq!(eta[0], 1.75);
        let (l, eta) = compute_l_eta(&[0.0, 0.0, 0.0], 3, 0).unwrap();
        assert!((l[0] - 2f64.ln()).abs() < 1e-15);
        assert!((eta[0] + 2f64.ln()).abs() < 1e-15);
        assert!(compute_l_eta(&[0.0], 1, 0).is_err());
    }

    #[test]
    fn l_eta_extreme_values_match_high_precision() {
        // V = [700, -700, 699]; for j=1: L = ln(e^700 + e^699) = 700 + ln(1 + e^-1)
        let v = [700.0, -700.0, 699.0];
        let (l, eta) = compute_l_eta(&v, 3, 1).unwrap();
        let expect = 700.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!(((l[0] - expect) / expect).abs() < 1e-9);
        assert!(eta[0].is_finite());
        // j=0: L = ln(e^-700 + e^699) = 699 + ln(1 + e^-1399) = 699 exactly in double
        let (l, _) = compute_l_eta(&v, 3, 0).unwrap();
        assert_eq!(l[0], 699.0);
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(1).unwrap(), 0.5);
        assert_eq!(kappa(0).unwrap(), -0.5);
        assert!(kappa(2).is_err());
        let j = 4;
        let row: f64 = (0..j).map(|k| kappa(u8::from(k == 2)).unwrap()).sum();
        assert_eq!(row, 1.0 - j as f64 / 2.0);
    }

    #[test]
    fn identity_at_zero_is_exact() {
        let mut s = RngStream::from_parts(3, Purpose::Test, 0, 0);
        let c = pg_identity_check(0.0, 1, 10_000, &mut s).unwrap();
        assert_eq!(c.lhs, 0.5);
        assert_eq!(c.rhs_estimate, 0.5);
        assert!(pg_identity_check(0.0, 1, 10, &mut s).is_err());
    }

    #[test]
    fn identity_holds_statistically() {
        let mut s = RngStream::from_parts(3, Purpose::Test, 0, 1);
        for (eta, y) in [(1.0, 1u8), (-2.0, 0)] {
            let c = pg_identity_check(eta, y, 200_000, &mut s).unwrap();
            assert!((c.lhs - c.rhs_estimate).abs() < 3.0 * c.std_error, "{eta},{y}: {c:?}");
        }
    }

    proptest! {
        #[test]
        fn softmax_translation_invariant(
            v in prop::collection::vec(-300.0f64..300.0, 2..6),
            c in -300.0f64..300.0,
        ) {
            let p = mnl_probabilities(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let q = mnl_probabilities(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn softmax_is_simplex(v in prop::collection::vec(-700.0f64..700.0, 1..8)) {
            let p = mnl_probabilities(&v).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| *x >= 0.0 && *x <= 1.0));
        }

        #[test]
        fn binary_logit_of_eta_equals_softmax(v in prop::collection::vec(-50.0f64..50.0, 2..6), jsel in 0usize..6) {
            let j = jsel % v.len();
            let (_, eta) = compute_l_eta(&v, v.len(), j).unwrap();
            let p = mnl_probabilities(&v).unwrap();
            let logistic = 1.0 / (1.0 + (-eta[0]).exp());
            prop_assert!((logistic - p[j]).abs() < 1e-12);
        }

        #[test]
        fn l_invariant_to_permuting_others(v in prop::collection::vec(-100.0f64..100.0, 3..6)) {
            let (l, _) = compute_l_eta(&v, v.len(), 0).unwrap();
            let mut w = v.clone();
            w[1..].reverse();
            let (l2, _) = compute_l_eta(&w, w.len(), 0).unwrap();
            prop_assert!((l[0] - l2[0]).abs() < 1e-12 * l[0].abs().max(1.0));
        }
    }
}
