//! Joint-distribution correctness test for the samplers.
//!
//! Two simulators target the same joint law of parameters and choices on a
//! small panel with fixed covariates. The marginal-conditional simulator
//! draws parameters from the prior and then choices from the likelihood.
//! The successive-conditional simulator alternates one sampler sweep with a
//! fresh draw of the choices. If the sampler leaves its posterior invariant
//! both produce the prior as the marginal of the parameters, so the means of
//! a set of test functions must agree. Standard errors of the
//! successive-conditional means use the effective sample size.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conjugate::ZetaUpdate;
use crate::error::{invalid, Result};
use crate::kernels::{categorical_unchecked, sample_gamma, sample_inverse_wishart, sample_mvn_cov};
use crate::linalg::PdMatrix;
use crate::mh::{generic_names, MhConfig, MhSampler};
use crate::model::{
    mnl_probabilities, AltSpecificParamState, ChoiceDataset, GenericParamState, HyperParameters, Utility,
};
use crate::pg::{alt_specific_names, alt_specific_values, PgConfig, PgSampler, PhiSchedule};
use crate::rng::{Purpose, RngStream};
use crate::Mutation;

use super::summary::effective_sample_size;
use super::Z_THRESHOLD;

/// Fewest outer draws accepted by [`geweke_joint_test`].
pub const MIN_OUTER: usize = 1_000;

/// Which sampler a Geweke run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Mh,
    Pg,
}

/// A small panel for the joint test. The MH sampler sees generic
/// coefficients, the PG sampler alternative-specific ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ToySpec {
    pub n: usize,
    pub t: usize,
    pub j: usize,
    pub l: usize,
    pub k: usize,
    /// Seed for the fixed covariates.
    #[serde(default)]
    pub covariate_seed: u64,
    /// Proper prior with finite moments; defaults to [`ToySpec::default_hyper`].
    #[serde(default)]
    pub hyper: Option<HyperParameters>,
}

impl ToySpec {
    pub fn new(n: usize, t: usize, j: usize, l: usize, k: usize) -> Self {
        Self { n, t, j, l, k, covariate_seed: 0, hyper: None }
    }

    /// `λ₀ = 1, Ξ₀ = I/4, μ₀ = 0, Σ₀ = I, ν = 10, A = 1`. The large `ν` keeps
    /// the fourth moments of `Ω` finite.
    pub fn default_hyper(l: usize, k: usize) -> HyperParameters {
        HyperParameters {
            lambda0: vec![1.0; l],
            xi0: PdMatrix::scaled_identity(l, 0.25).expect("PD"),
            mu0: vec![0.0; k],
            sigma0: PdMatrix::identity(k),
            nu: 10.0,
            a_scale: vec![1.0; k],
        }
    }

    pub fn hyper(&self) -> HyperParameters {
        self.hyper.clone().unwrap_or_else(|| Self::default_hyper(self.l, self.k))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 || self.j < 2 {
            return invalid("toy panel needs N, T >= 1 and J >= 2");
        }
        if self.l + self.k == 0 {
            return invalid("toy panel needs at least one coefficient");
        }
        self.hyper().validate(self.l, self.k)
    }

    /// Covariates drawn iid standard normal; all choices start at the first
    /// alternative.
    pub fn dataset(&self) -> Result<ChoiceDataset> {
        self.validate()?;
        let mut rng = RngStream::from_parts(self.covariate_seed, Purpose::Covariates, 0, 0);
        let rows = self.n * self.t * self.j;
        let xf = (0..rows * self.l).map(|_| rng.sample(StandardNormal)).collect();
        let xr = (0..rows * self.k).map(|_| rng.sample(StandardNormal)).collect();
        ChoiceDataset::new(self.n, self.t, self.j, self.l, self.k, xf, xr, vec![0; self.n * self.t])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GewekeConfig {
    pub sampler: SamplerKind,
    pub outer: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fixed MH proposal scales; no adaptation happens in the joint test.
    #[serde(default = "default_rho_beta")]
    pub rho_beta: f64,
    #[serde(default = "default_rho_alpha")]
    pub rho_alpha: f64,
    #[serde(default)]
    pub phi_schedule: PhiSchedule,
    #[serde(default)]
    pub mutation: Option<Mutation>,
}

fn default_rho_beta() -> f64 {
    1.0
}
fn default_rho_alpha() -> f64 {
    0.5
}

impl GewekeConfig {
    pub fn new(sampler: SamplerKind, outer: usize, seed: u64) -> Self {
        Self {
            sampler,
            outer,
            seed,
            rho_beta: default_rho_beta(),
            rho_alpha: default_rho_alpha(),
            phi_schedule: PhiSchedule::default(),
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GewekeRow {
    pub name: String,
    pub mean_marginal: f64,
    pub mean_successive: f64,
    pub se_marginal: f64,
    pub se_successive: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GewekeReport {
    pub sampler: SamplerKind,
    pub outer: usize,
    pub mutation: Option<Mutation>,
    pub rows: Vec<GewekeRow>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }

    /// Every test function agrees within [`Z_THRESHOLD`].
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.z.abs() < Z_THRESHOLD)
    }
}

fn draw_a_omega<R: Rng + ?Sized>(hyper: &HyperParameters, rng: &mut R) -> Result<(DVector<f64>, PdMatrix)> {
    let k = hyper.a_scale.len();
    let mut a = DVector::zeros(k);
    for i in 0..k {
        a[i] = sample_gamma(0.5, 1.0 / (hyper.a_scale[i] * hyper.a_scale[i]), rng)?;
    }
    let scale = PdMatrix::diagonal((&a * (2.0 * hyper.nu)).as_slice())?;
    let omega = sample_inverse_wishart(hyper.omega_prior_df(), &scale, rng)?;
    Ok((a, omega))
}

fn prior_generic<R: Rng + ?Sized>(toy: &ToySpec, hyper: &HyperParameters, rng: &mut R) -> Result<GenericParamState> {
    let (a, omega) = draw_a_omega(hyper, rng)?;
    let alpha = sample_mvn_cov(&hyper.lambda0_vec(), &hyper.xi0, rng)?;
    let zeta = sample_mvn_cov(&hyper.mu0_vec(), &hyper.sigma0, rng)?;
    let beta = (0..toy.n).map(|_| sample_mvn_cov(&zeta, &omega, rng)).collect::<Result<_>>()?;
    Ok(GenericParamState { alpha, zeta, omega, a, beta })
}

fn prior_alt<R: Rng + ?Sized>(toy: &ToySpec, hyper: &HyperParameters, rng: &mut R) -> Result<AltSpecificParamState> {
    let (a, omega) = draw_a_omega(hyper, rng)?;
    let alpha = (0..toy.j).map(|_| sample_mvn_cov(&hyper.lambda0_vec(), &hyper.xi0, rng)).collect::<Result<_>>()?;
    let zeta: Vec<DVector<f64>> =
        (0..toy.j).map(|_| sample_mvn_cov(&hyper.mu0_vec(), &hyper.sigma0, rng)).collect::<Result<_>>()?;
    let mut beta = Vec::with_capacity(toy.n * toy.j);
    for _ in 0..toy.n {
        for z in &zeta {
            beta.push(sample_mvn_cov(z, &omega, rng)?);
        }
    }
    Ok(AltSpecificParamState { alpha, zeta, omega, a, beta, phi: vec![0.25; toy.n * toy.t * toy.j] })
}

fn simulate_choices<U: Utility, R: Rng + ?Sized>(data: &ChoiceDataset, state: &U, rng: &mut R) -> Result<Vec<usize>> {
    let j = data.n_alternatives();
    let mut v = vec![0.0; j];
    let mut out = Vec::with_capacity(data.choices().len());
    for n in 0..data.n_decision_makers() {
        for t in 0..data.n_occasions() {
            for (jj, x) in v.iter_mut().enumerate() {
                *x = state.utility(data, n, t, jj);
            }
            out.push(categorical_unchecked(&mnl_probabilities(&v)?, rng));
        }
    }
    Ok(out)
}

fn squares_and_beta(alpha: &[f64], zeta: &[f64], beta: &[DVector<f64>], out: &mut Vec<f64>) {
    out.extend(alpha.iter().map(|x| x * x));
    out.extend(zeta.iter().map(|x| x * x));
    if !beta.is_empty() && !beta[0].is_empty() {
        out.push(beta.iter().map(|b| b.norm_squared()).sum::<f64>() / beta.len() as f64);
    }
}

fn function_names(base: Vec<String>, alpha: usize, zeta: usize, k: usize) -> Vec<String> {
    let mut names = base.clone();
    names.extend(base[..alpha].iter().map(|n| format!("{n}^2")));
    names.extend(base[alpha..alpha + zeta].iter().map(|n| format!("{n}^2")));
    if k > 0 {
        names.push("mean|beta|^2".into());
    }
    names
}

fn generic_functions(state: &GenericParamState) -> Vec<f64> {
    let mut v: Vec<f64> = state.alpha.iter().copied().collect();
    v.extend(state.zeta.iter());
    let k = state.omega.dim();
    for k1 in 0..k {
        for k2 in k1..k {
            v.push(state.omega.get(k1, k2));
        }
    }
    v.extend(state.a.iter());
    squares_and_beta(state.alpha.as_slice(), state.zeta.as_slice(), &state.beta, &mut v);
    v
}

fn alt_functions(state: &AltSpecificParamState) -> Vec<f64> {
    let mut v = alt_specific_values(state);
    let alpha: Vec<f64> = state.alpha.iter().flat_map(|a| a.iter().copied()).collect();
    let zeta: Vec<f64> = state.zeta.iter().flat_map(|z| z.iter().copied()).collect();
    squares_and_beta(&alpha, &zeta, &state.beta, &mut v);
    v
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn compare(names: Vec<String>, marginal: &[Vec<f64>], successive: &[Vec<f64>]) -> Vec<GewekeRow> {
    names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let a: Vec<f64> = marginal.iter().map(|r| r[i]).collect();
            let b: Vec<f64> = successive.iter().map(|r| r[i]).collect();
            let (ma, va) = mean_var(&a);
            let (mb, vb) = mean_var(&b);
            let se_a = (va / a.len() as f64).sqrt();
            let se_b = (vb / effective_sample_size(&b)).sqrt();
            let se = (se_a * se_a + se_b * se_b).sqrt();
            let z = if se > 0.0 { (ma - mb) / se } else { 0.0 };
            GewekeRow { name, mean_marginal: ma, mean_successive: mb, se_marginal: se_a, se_successive: se_b, z }
        })
        .collect()
}

/// Run both simulators for `config.outer` draws each and compare the means
/// of every stored parameter, the squares of `α` and `ζ` and the mean
/// squared norm of the individual coefficients.
pub fn geweke_joint_test(toy: &ToySpec, config: &GewekeConfig) -> Result<GewekeReport> {
    if config.outer < MIN_OUTER {
        return invalid(format!("at least {MIN_OUTER} outer draws are needed, got {}", config.outer));
    }
    let hyper = toy.hyper();
    let mut data = toy.dataset()?;
    let mut prior_rng = RngStream::from_parts(config.seed, Purpose::Geweke, 0, 0);
    let mut choice_rng = RngStream::from_parts(config.seed, Purpose::Geweke, 0, 1);
    let outer = config.outer;
    let mut marginal = Vec::with_capacity(outer);
    let mut successive = Vec::with_capacity(outer);
    let names;
    match config.sampler {
        SamplerKind::Mh => {
            for _ in 0..outer {
                marginal.push(generic_functions(&prior_generic(toy, &hyper, &mut prior_rng)?));
            }
            let cfg = MhConfig {
                rho_beta: config.rho_beta,
                rho_alpha: config.rho_alpha,
                zeta_update: ZetaUpdate::Conjugate,
                ..MhConfig::new(outer + 1, 0, config.seed)
            };
            let mut sampler = MhSampler::new(&data, &hyper, &cfg)?;
            sampler.set_mutation(config.mutation);
            let mut state = prior_generic(toy, &hyper, &mut prior_rng)?;
            for _ in 0..outer {
                data.set_choices(simulate_choices(&data, &state, &mut choice_rng)?)?;
                sampler.sweep(&data, &mut state)?;
                successive.push(generic_functions(&state));
            }
            names = function_names(generic_names(toy.l, toy.k), toy.l, toy.k, toy.k);
        }
        SamplerKind::Pg => {
            for _ in 0..outer {
                marginal.push(alt_functions(&prior_alt(toy, &hyper, &mut prior_rng)?));
            }
            let cfg = PgConfig {
                zeta_update: ZetaUpdate::Conjugate,
                phi_schedule: config.phi_schedule,
                ..PgConfig::new(outer + 1, 0, config.seed)
            };
            let mut sampler = PgSampler::new(&data, &hyper, &cfg)?;
            sampler.set_mutation(config.mutation);
            let mut state = prior_alt(toy, &hyper, &mut prior_rng)?;
            state.phi = sampler.initial_state(&data)?.phi;
            for _ in 0..outer {
                data.set_choices(simulate_choices(&data, &state, &mut choice_rng)?)?;
                sampler.sweep(&data, &mut state)?;
                successive.push(alt_functions(&state));
            }
            names = function_names(alt_specific_names(toy.j, toy.l, toy.k), toy.j * toy.l, toy.j * toy.k, toy.k);
        }
    }
    Ok(GewekeReport {
        sampler: config.sampler,
        outer,
        mutation: config.mutation,
        rows: compare(names, &marginal, &successive),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_outer_draws_rejected() {
        let toy = ToySpec::new(3, 2, 2, 1, 1);
        assert!(geweke_joint_test(&toy, &GewekeConfig::new(SamplerKind::Pg, 10, 0)).is_err());
    }

    #[test]
    fn toy_spec_json_is_strict() {
        let t: ToySpec = serde_json::from_str(r#"{"n": 10, "t": 3, "j": 2, "l": 1, "k": 2}"#).unwrap();
        assert_eq!(t.hyper().nu, 10.0);
        assert!(serde_json::from_str::<ToySpec>(r#"{"n": 10, "t": 3, "j": 2, "l": 1, "k": 2, "x": 1}"#).is_err());
        assert!(ToySpec::new(3, 2, 1, 1, 1).validate().is_err());
    }

    #[test]
    fn short_runs_have_expected_rows() {
        let toy = ToySpec::new(4, 2, 3, 1, 1);
        let r = geweke_joint_test(&toy, &GewekeConfig::new(SamplerKind::Pg, MIN_OUTER, 1)).unwrap();
        // 3 alpha + 3 zeta + 1 omega + 1 a + 3 + 3 squares + beta
        assert_eq!(r.rows.len(), 15);
        assert!(r.rows.iter().all(|row| row.z.is_finite()));
        let r = geweke_joint_test(&toy, &GewekeConfig::new(SamplerKind::Mh, MIN_OUTER, 1)).unwrap();
        assert_eq!(r.rows.len(), 7);
    }
}
