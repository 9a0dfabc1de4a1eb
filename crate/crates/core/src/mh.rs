//! Metropolis-within-Gibbs sampler for generic coefficients.
//!
//! Each sweep updates, in order, the half-t scales `a`, the covariance `Ω`
//! and mean `ζ` (all conjugate), then each `β_n` and finally `α` with
//! random-walk Metropolis steps. Proposals are preconditioned by `Chol(Ω)`
//! for `β_n` and `Chol(Ξ₀)` for `α`; their scales adapt multiplicatively
//! towards a target acceptance rate during burn-in only.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conjugate::{draw_a, draw_omega, draw_zeta, scatter, ZetaUpdate};
use crate::diagnostics::{dataset_digest, Chain, ChainMeta};
use crate::error::{invalid, Error, Result};
use crate::kernels::standard_normal_vec;
use crate::linalg::PdMatrix;
use crate::model::{
    dot, expand_alternative_specific, log_sum_exp, ChoiceDataset, GenericParamState, HyperParameters, Utility,
};
use crate::monitor::{utility_stats, DivergenceMonitor, DivergenceThresholds, RunOutcome};
use crate::rng::{Purpose, RngStream};
use crate::synth::indexed_name;
use crate::Mutation;

fn one() -> usize {
    1
}
fn default_target() -> f64 {
    0.23
}
fn default_rho() -> f64 {
    0.1
}
fn default_adapt_every() -> usize {
    100
}
fn default_adapt_factor() -> f64 {
    1.1
}
fn default_v_max() -> f64 {
    DivergenceThresholds::default().divergence_v_max
}
fn default_param_max() -> f64 {
    DivergenceThresholds::default().divergence_param_max
}
fn default_window() -> usize {
    DivergenceThresholds::default().monitor_window
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MhConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default = "default_target")]
    pub target_accept: f64,
    #[serde(default = "default_rho")]
    pub rho_beta: f64,
    #[serde(default = "default_rho")]
    pub rho_alpha: f64,
    #[serde(default = "default_adapt_every")]
    pub adapt_every: usize,
    #[serde(default = "default_adapt_factor")]
    pub adapt_factor: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub chain: u32,
    /// Run the per-individual `β` updates on the rayon pool. Results are
    /// identical to serial execution.
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub zeta_update: ZetaUpdate,
    /// Give every alternative its own fixed coefficients `α_j`. The sampler
    /// then runs on the expanded design of [`expand_alternative_specific`]
    /// with the `N(λ₀, Ξ₀)` prior applied to each `α_j`.
    #[serde(default)]
    pub alternative_specific: bool,
    #[serde(default = "default_v_max")]
    pub divergence_v_max: f64,
    #[serde(default = "default_param_max")]
    pub divergence_param_max: f64,
    #[serde(default = "default_window")]
    pub monitor_window: usize,
}

impl MhConfig {
    pub fn new(n_iter: usize, n_burn: usize, seed: u64) -> Self {
        Self {
            n_iter,
            n_burn,
            thin: 1,
            target_accept: default_target(),
            rho_beta: default_rho(),
            rho_alpha: default_rho(),
            adapt_every: default_adapt_every(),
            adapt_factor: default_adapt_factor(),
            seed,
            chain: 0,
            parallel: false,
            zeta_update: ZetaUpdate::default(),
            alternative_specific: false,
            divergence_v_max: default_v_max(),
            divergence_param_max: default_param_max(),
            monitor_window: default_window(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.n_burn >= self.n_iter {
            return invalid(format!("need 0 <= n_burn < n_iter, got {} and {}", self.n_burn, self.n_iter));
        }
        if self.thin == 0 || self.adapt_every == 0 {
            return invalid("thin and adapt_every must be at least 1");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return invalid("target_accept must lie in (0, 1)");
        }
        if !(self.rho_beta > 0.0 && self.rho_alpha > 0.0) || !self.rho_beta.is_finite() || !self.rho_alpha.is_finite() {
            return invalid("proposal scales must be positive");
        }
        if self.adapt_factor.is_nan() || self.adapt_factor < 1.0 {
            return invalid("adapt_factor must be at least 1");
        }
        if !(self.divergence_v_max > 0.0 && self.divergence_param_max > 0.0) || self.monitor_window == 0 {
            return invalid("divergence thresholds must be positive");
        }
        Ok(())
    }

    pub fn thresholds(&self) -> DivergenceThresholds {
        DivergenceThresholds {
            divergence_v_max: self.divergence_v_max,
            divergence_param_max: self.divergence_param_max,
            monitor_window: self.monitor_window,
        }
    }
}

/// `a_k ~ Gamma((ν + K)/2, rate 1/A_k² + ν (Ω⁻¹)_kk)`.
pub fn update_a<R: Rng + ?Sized>(
    state: &GenericParamState,
    hyper: &HyperParameters,
    rng: &mut R,
) -> Result<DVector<f64>> {
    draw_a(&state.omega, hyper, None, rng)
}

/// `Ω ~ IW(ν + N + K - 1, 2ν diag(a) + Σ_n (β_n - ζ)(β_n - ζ)ᵀ)`.
pub fn update_omega_generic<R: Rng + ?Sized>(
    state: &GenericParamState,
    hyper: &HyperParameters,
    rng: &mut R,
) -> Result<PdMatrix> {
    let s = scatter(state.beta.iter(), &state.zeta, state.zeta.len());
    draw_omega(state.beta.len(), &s, &state.a, hyper, None, rng)
}

/// `ζ | β, Ω`. With [`ZetaUpdate::Flat`] this is `N(β̄, Ω/N)`.
pub fn update_zeta_generic<R: Rng + ?Sized>(
    state: &GenericParamState,
    hyper: &HyperParameters,
    rule: ZetaUpdate,
    rng: &mut R,
) -> Result<DVector<f64>> {
    draw_zeta(state.beta.iter(), &state.omega, hyper, rule, None, rng)
}

fn person_log_likelihood(
    data: &ChoiceDataset,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    n: usize,
    buf: &mut [f64],
) -> f64 {
    let has_random = data.n_random() > 0;
    let mut ll = 0.0;
    for t in 0..data.n_occasions() {
        for (j, v) in buf.iter_mut().enumerate() {
            let mut u = dot(data.xf(n, t, j), alpha);
            if has_random {
                u += dot(data.xr(n, t, j), beta);
            }
            *v = u;
        }
        ll += buf[data.choice(n, t)] - log_sum_exp(buf);
    }
    ll
}

struct BetaContext<'a> {
    data: &'a ChoiceDataset,
    alpha: &'a DVector<f64>,
    prior_mean: DVector<f64>,
    omega: &'a PdMatrix,
    step: DMatrix<f64>,
}

impl BetaContext<'_> {
    fn step<R: Rng + ?Sized>(&self, n: usize, beta: &mut DVector<f64>, rng: &mut R) -> Result<bool> {
        let mut buf = vec![0.0; self.data.n_alternatives()];
        let ll_cur = person_log_likelihood(self.data, self.alpha, beta, n, &mut buf);
        if !ll_cur.is_finite() {
            return Err(Error::InvalidState(format!("non-finite log-likelihood for decision-maker {n}")));
        }
        let proposal = &*beta + &self.step * standard_normal_vec(beta.len(), rng);
        let ll_prop = person_log_likelihood(self.data, self.alpha, &proposal, n, &mut buf);
        let log_ratio = ll_prop + self.omega.mvn_log_density(&proposal, &self.prior_mean)
            - ll_cur
            - self.omega.mvn_log_density(beta, &self.prior_mean);
        let u: f64 = rng.random();
        if u.ln() < log_ratio {
            *beta = proposal;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// One random-walk Metropolis step for every `β_n`, each drawing from its
/// own stream. Returns the number of accepted proposals.
pub fn mh_update_beta(
    state: &mut GenericParamState,
    data: &ChoiceDataset,
    rho_beta: f64,
    streams: &mut [RngStream],
    parallel: bool,
) -> Result<usize> {
    mh_update_beta_impl(state, data, rho_beta, streams, parallel, None)
}

fn mh_update_beta_impl(
    state: &mut GenericParamState,
    data: &ChoiceDataset,
    rho_beta: f64,
    streams: &mut [RngStream],
    parallel: bool,
    mutation: Option<Mutation>,
) -> Result<usize> {
    if !(rho_beta > 0.0 && rho_beta.is_finite()) {
        return invalid(format!("rho_beta must be positive, got {rho_beta}"));
    }
    if streams.len() != state.beta.len() {
        return Err(Error::Dimension("one stream per decision-maker required".into()));
    }
    let ctx = BetaContext {
        data,
        alpha: &state.alpha,
        prior_mean: if mutation == Some(Mutation::Beta) {
            DVector::zeros(state.zeta.len())
        } else {
            state.zeta.clone()
        },
        omega: &state.omega,
        step: state.omega.chol_lower() * rho_beta,
    };
    let results: Vec<Result<bool>> = if parallel {
        par_beta(&ctx, &mut state.beta, streams)
    } else {
        state.beta.iter_mut().zip(streams.iter_mut()).enumerate().map(|(n, (b, s))| ctx.step(n, b, s)).collect()
    };
    let mut accepted = 0;
    for r in results {
        if r? {
            accepted += 1;
        }
    }
    Ok(accepted)
}

#[cfg(feature = "parallel")]
fn par_beta(ctx: &BetaContext<'_>, beta: &mut [DVector<f64>], streams: &mut [RngStream]) -> Vec<Result<bool>> {
    use rayon::prelude::*;
    beta.par_iter_mut().zip(streams.par_iter_mut()).enumerate().map(|(n, (b, s))| ctx.step(n, b, s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_beta(ctx: &BetaContext<'_>, beta: &mut [DVector<f64>], streams: &mut [RngStream]) -> Vec<Result<bool>> {
    beta.iter_mut().zip(streams.iter_mut()).enumerate().map(|(n, (b, s))| ctx.step(n, b, s)).collect()
}

fn total_log_likelihood(data: &ChoiceDataset, alpha: &DVector<f64>, beta: &[DVector<f64>]) -> f64 {
    let mut buf = vec![0.0; data.n_alternatives()];
    let empty = DVector::zeros(0);
    (0..data.n_decision_makers())
        .map(|n| person_log_likelihood(data, alpha, beta.get(n).unwrap_or(&empty), n, &mut buf))
        .sum()
}

/// One block random-walk Metropolis step for `α` against the full-data
/// likelihood and the `N(λ₀, Ξ₀)` prior. Returns whether it was accepted.
pub fn mh_update_alpha<R: Rng + ?Sized>(
    state: &mut GenericParamState,
    data: &ChoiceDataset,
    hyper: &HyperParameters,
    rho_alpha: f64,
    rng: &mut R,
) -> Result<bool> {
    mh_update_alpha_impl(state, data, hyper, rho_alpha, None, rng)
}

fn mh_update_alpha_impl<R: Rng + ?Sized>(
    state: &mut GenericParamState,
    data: &ChoiceDataset,
    hyper: &HyperParameters,
    rho_alpha: f64,
    mutation: Option<Mutation>,
    rng: &mut R,
) -> Result<bool> {
    if !(rho_alpha > 0.0 && rho_alpha.is_finite()) {
        return invalid(format!("rho_alpha must be positive, got {rho_alpha}"));
    }
    if state.alpha.is_empty() {
        return Ok(false);
    }
    let ll_cur = total_log_likelihood(data, &state.alpha, &state.beta);
    if !ll_cur.is_finite() {
        return Err(Error::InvalidState("non-finite log-likelihood at current alpha".into()));
    }
    let proposal = &state.alpha + hyper.xi0.chol_lower() * standard_normal_vec(state.alpha.len(), rng) * rho_alpha;
    let ll_prop = total_log_likelihood(data, &proposal, &state.beta);
    let lambda0 =
        if mutation == Some(Mutation::Alpha) { DVector::zeros(state.alpha.len()) } else { hyper.lambda0_vec() };
    let prior = |x: &DVector<f64>| hyper.xi0.mvn_log_density(x, &lambda0);
    let log_ratio = ll_prop + prior(&proposal) - ll_cur - prior(&state.alpha);
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        state.alpha = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Acceptance counts from one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MhSweep {
    pub accept_beta: usize,
    pub accept_alpha: usize,
}

/// Sampler state that persists across sweeps: streams and proposal scales.
#[derive(Debug, Clone)]
pub struct MhSampler {
    hyper: HyperParameters,
    config: MhConfig,
    rho_beta: f64,
    rho_alpha: f64,
    hyper_rng: RngStream,
    alpha_rng: RngStream,
    beta_rngs: Vec<RngStream>,
    mutation: Option<Mutation>,
    window_accept_beta: usize,
    window_accept_alpha: usize,
    window_sweeps: usize,
}

impl MhSampler {
    pub fn new(data: &ChoiceDataset, hyper: &HyperParameters, config: &MhConfig) -> Result<Self> {
        config.validate()?;
        hyper.validate(data.n_fixed(), data.n_random())?;
        let (seed, chain) = (config.seed, config.chain);
        Ok(Self {
            hyper: hyper.clone(),
            config: config.clone(),
            rho_beta: config.rho_beta,
            rho_alpha: config.rho_alpha,
            hyper_rng: RngStream::from_parts(seed, Purpose::Hyper, chain, 0),
            alpha_rng: RngStream::from_parts(seed, Purpose::Alpha, chain, 0),
            beta_rngs: RngStream::family(seed, Purpose::Beta, chain, data.n_decision_makers()),
            mutation: None,
            window_accept_beta: 0,
            window_accept_alpha: 0,
            window_sweeps: 0,
        })
    }

    #[doc(hidden)]
    pub fn set_mutation(&mut self, mutation: Option<Mutation>) {
        self.mutation = mutation;
    }

    pub fn rho(&self) -> (f64, f64) {
        (self.rho_beta, self.rho_alpha)
    }

    /// Prior-centred start: `α = λ₀`, `ζ = β_n = μ₀`, `Ω = I`, `a_k = 1/A_k²`.
    pub fn initial_state(&self, data: &ChoiceDataset) -> GenericParamState {
        let k = data.n_random();
        GenericParamState {
            alpha: self.hyper.lambda0_vec(),
            zeta: self.hyper.mu0_vec(),
            omega: PdMatrix::identity(k),
            a: DVector::from_iterator(k, self.hyper.a_scale.iter().map(|a| 1.0 / (a * a))),
            beta: vec![self.hyper.mu0_vec(); data.n_decision_makers()],
        }
    }

    /// One full sweep in the order `a, Ω, ζ, β_{1:N}, α`. Without random
    /// coefficients only `α` is updated.
    pub fn sweep(&mut self, data: &ChoiceDataset, state: &mut GenericParamState) -> Result<MhSweep> {
        let mut accept_beta = 0;
        if data.n_random() > 0 {
            state.a = draw_a(&state.omega, &self.hyper, self.mutation, &mut self.hyper_rng)?;
            let s = scatter(state.beta.iter(), &state.zeta, state.zeta.len());
            state.omega = draw_omega(state.beta.len(), &s, &state.a, &self.hyper, self.mutation, &mut self.hyper_rng)?;
            state.zeta = draw_zeta(
                state.beta.iter(),
                &state.omega,
                &self.hyper,
                self.config.zeta_update,
                self.mutation,
                &mut self.hyper_rng,
            )?;
            accept_beta = mh_update_beta_impl(
                state,
                data,
                self.rho_beta,
                &mut self.beta_rngs,
                self.config.parallel,
                self.mutation,
            )?;
        }
        let accept_alpha = if data.n_fixed() > 0 {
            usize::from(mh_update_alpha_impl(
                state,
                data,
                &self.hyper,
                self.rho_alpha,
                self.mutation,
                &mut self.alpha_rng,
            )?)
        } else {
            0
        };
        self.window_accept_beta += accept_beta;
        self.window_accept_alpha += accept_alpha;
        self.window_sweeps += 1;
        Ok(MhSweep { accept_beta, accept_alpha })
    }

    /// Called after sweep `iteration`; rescales the proposals every
    /// `adapt_every` sweeps while `iteration < n_burn`.
    pub fn adapt(&mut self, iteration: usize, n_decision_makers: usize) {
        if self.window_sweeps < self.config.adapt_every {
            return;
        }
        if iteration < self.config.n_burn {
            let target = self.config.target_accept;
            let f = self.config.adapt_factor;
            let rate_alpha = self.window_accept_alpha as f64 / self.window_sweeps as f64;
            self.rho_alpha = if rate_alpha > target { self.rho_alpha * f } else { self.rho_alpha / f };
            if n_decision_makers > 0 {
                let rate_beta = self.window_accept_beta as f64 / (self.window_sweeps * n_decision_makers) as f64;
                self.rho_beta = if rate_beta > target { self.rho_beta * f } else { self.rho_beta / f };
            }
        }
        self.window_accept_beta = 0;
        self.window_accept_alpha = 0;
        self.window_sweeps = 0;
    }
}

/// Chain column names for the generic model.
pub fn generic_names(n_fixed: usize, n_random: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..n_fixed).map(|l| indexed_name("alpha", None, l)).collect();
    names.extend((0..n_random).map(|k| indexed_name("zeta", None, k)));
    names.extend(omega_names(n_random));
    names.extend((0..n_random).map(|k| indexed_name("a", None, k)));
    names
}

pub(crate) fn omega_names(k: usize) -> Vec<String> {
    let mut v = Vec::new();
    for k1 in 0..k {
        for k2 in k1..k {
            v.push(format!("omega[{}][{}]", k1 + 1, k2 + 1));
        }
    }
    v
}

pub(crate) fn omega_values(omega: &PdMatrix) -> impl Iterator<Item = f64> + '_ {
    let k = omega.dim();
    (0..k).flat_map(move |k1| (k1..k).map(move |k2| omega.get(k1, k2)))
}

fn generic_values(state: &GenericParamState) -> Vec<f64> {
    let mut v: Vec<f64> = state.alpha.iter().copied().collect();
    v.extend(state.zeta.iter());
    v.extend(omega_values(&state.omega));
    v.extend(state.a.iter());
    v
}

pub(crate) fn max_abs_generic(state: &GenericParamState) -> f64 {
    let mut m = 0.0f64;
    let all = state
        .alpha
        .iter()
        .chain(state.zeta.iter())
        .chain(state.omega.matrix().iter())
        .chain(state.a.iter())
        .chain(state.beta.iter().flat_map(|b| b.iter()));
    for x in all {
        if !x.is_finite() {
            return f64::INFINITY;
        }
        m = m.max(x.abs());
    }
    m
}

/// Repeat the fixed-coefficient prior for each of `n_alt` stacked blocks.
pub fn expand_hyper(hyper: &HyperParameters, n_alt: usize) -> Result<HyperParameters> {
    let l = hyper.lambda0.len();
    let mut xi0 = DMatrix::zeros(l * n_alt, l * n_alt);
    for j in 0..n_alt {
        xi0.view_mut((j * l, j * l), (l, l)).copy_from(hyper.xi0.matrix());
    }
    Ok(HyperParameters { lambda0: hyper.lambda0.repeat(n_alt), xi0: PdMatrix::new(xi0)?, ..hyper.clone() })
}

/// Run the sampler for `n_iter` sweeps, storing thinned post-burn-in draws.
pub fn run_mh(data: &ChoiceDataset, hyper: &HyperParameters, config: &MhConfig) -> Result<RunOutcome> {
    if config.alternative_specific {
        let expanded = expand_alternative_specific(data)?;
        let hyper = expand_hyper(hyper, data.n_alternatives())?;
        let mut names: Vec<String> = (0..data.n_alternatives())
            .flat_map(|j| (0..data.n_fixed()).map(move |l| indexed_name("alpha", Some(j), l)))
            .collect();
        names.extend(generic_names(0, data.n_random()));
        return run_mh_named(&expanded, &hyper, config, names, dataset_digest(data));
    }
    let names = generic_names(data.n_fixed(), data.n_random());
    run_mh_named(data, hyper, config, names, dataset_digest(data))
}

fn run_mh_named(
    data: &ChoiceDataset,
    hyper: &HyperParameters,
    config: &MhConfig,
    names: Vec<String>,
    digest: String,
) -> Result<RunOutcome> {
    let mut sampler = MhSampler::new(data, hyper, config)?;
    let mut state = sampler.initial_state(data);
    let meta = ChainMeta {
        sampler: "mh".into(),
        seed: config.seed,
        chain_index: config.chain,
        config: serde_json::to_value(config)?,
        dataset_digest: digest,
    };
    let mut chain = Chain::new(names, meta)?;
    let mut monitor = DivergenceMonitor::new(config.thresholds());
    let n_dm = data.n_decision_makers();
    for iter in 0..config.n_iter {
        let sweep = sampler.sweep(data, &mut state)?;
        sampler.adapt(iter, n_dm);

        let v: Vec<f64> = (0..n_dm)
            .flat_map(|n| {
                let st = &state;
                (0..data.n_occasions())
                    .flat_map(move |t| (0..data.n_alternatives()).map(move |j| st.utility(data, n, t, j)))
            })
            .collect();
        let stats = utility_stats(data, &v);
        let max_param = max_abs_generic(&state);
        let m = &mut chain.monitors;
        m.iteration.push(iter);
        m.log_likelihood.push(stats.log_likelihood);
        m.max_abs_utility.push(stats.max_abs_utility);
        m.mean_chosen_prob.push(stats.mean_chosen_prob);
        m.max_abs_param.push(max_param);
        m.accept_beta.push(if n_dm > 0 && data.n_random() > 0 {
            sweep.accept_beta as f64 / n_dm as f64
        } else {
            f64::NAN
        });
        m.accept_alpha.push(sweep.accept_alpha as f64);
        m.mean_phi.push(f64::NAN);
        if let Some(report) = monitor.observe(iter, &stats, max_param) {
            return Ok(RunOutcome::Diverged { report, chain });
        }
        if iter >= config.n_burn && (iter - config.n_burn).is_multiple_of(config.thin) {
            chain.push(iter, generic_values(&state))?;
        }
    }
    Ok(RunOutcome::Completed(chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, preset};

    fn zero_data(n: usize, t: usize, j: usize, l: usize, k: usize, seed: u64) -> ChoiceDataset {
        let mut s = RngStream::from_parts(seed, Purpose::Test, 0, 0);
        let choices = (0..n * t).map(|_| s.random_range(0..j)).collect();
        ChoiceDataset::new(n, t, j, l, k, vec![0.0; n * t * j * l], vec![0.0; n * t * j * k], choices).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(MhConfig::new(10, 10, 0).validate().is_err());
        let mut c = MhConfig::new(10, 5, 0);
        c.rho_beta = 0.0;
        assert!(c.validate().is_err());
        c.rho_beta = 0.1;
        c.thin = 0;
        assert!(c.validate().is_err());
        let json = r#"{"n-iter": 10, "n-burn": 2, "bogus": 1}"#;
        assert!(serde_json::from_str::<MhConfig>(json).is_err());
        let json = r#"{"n-iter": 10, "n-burn": 2}"#;
        let c: MhConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.rho_beta, 0.1);
        assert_eq!(c.target_accept, 0.23);
    }

    #[test]
    fn zero_rho_rejected() {
        let data = zero_data(3, 2, 2, 1, 1, 0);
        let hyper = HyperParameters::weakly_informative(1, 1);
        let sampler = MhSampler::new(&data, &hyper, &MhConfig::new(10, 5, 0)).unwrap();
        let mut state = sampler.initial_state(&data);
        let mut streams = RngStream::family(0, Purpose::Beta, 0, 3);
        assert!(mh_update_beta(&mut state, &data, 0.0, &mut streams, false).is_err());
        let mut s = RngStream::from_parts(0, Purpose::Alpha, 0, 0);
        assert!(mh_update_alpha(&mut state, &data, &hyper, -1.0, &mut s).is_err());
    }

    #[test]
    fn acceptance_counts_in_range() {
        let (data, _) = generate(&preset("mmnl-j2").unwrap()).unwrap();
        let hyper = HyperParameters::weakly_informative(1, 2);
        let mut sampler = MhSampler::new(&data, &hyper, &MhConfig::new(100, 50, 3)).unwrap();
        let mut state = sampler.initial_state(&data);
        for _ in 0..20 {
            let s = sampler.sweep(&data, &mut state).unwrap();
            assert!(s.accept_beta <= data.n_decision_makers());
            assert!(s.accept_alpha <= 1);
        }
    }

    #[test]
    fn huge_alpha_step_is_rejected() {
        let (data, _) = generate(&preset("mnl-j3").unwrap()).unwrap();
        let data = crate::model::expand_alternative_specific(&data).unwrap();
        let hyper = HyperParameters::weakly_informative(6, 0);
        let sampler = MhSampler::new(&data, &hyper, &MhConfig::new(10, 5, 0)).unwrap();
        let mut state = sampler.initial_state(&data);
        let mut s = RngStream::from_parts(0, Purpose::Alpha, 0, 0);
        let accepted = (0..200).filter(|_| mh_update_alpha(&mut state, &data, &hyper, 1e3, &mut s).unwrap()).count();
        assert!(accepted <= 2, "{accepted}");
    }

    #[test]
    fn likelihood_free_beta_matches_prior() {
        // X_R ≡ 0: β_n | ζ, Ω is N(ζ, Ω) regardless of the choices
        let data = zero_data(1, 2, 2, 0, 2, 1);
        let mut state = GenericParamState {
            alpha: DVector::zeros(0),
            zeta: DVector::from_vec(vec![1.0, -2.0]),
            omega: PdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5])).unwrap(),
            a: DVector::from_vec(vec![1.0, 1.0]),
            beta: vec![DVector::from_vec(vec![1.0, -2.0])],
        };
        let mut streams = RngStream::family(5, Purpose::Beta, 0, 1);
        let n = 200_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            mh_update_beta(&mut state, &data, 1.5, &mut streams, false).unwrap();
            xs.push(state.beta[0].clone());
        }
        for k in 0..2 {
            let col: Vec<f64> = xs.iter().map(|b| b[k]).collect();
            let s = crate::diagnostics::summary::summarize_column("b", &col);
            assert!((s.mean - state.zeta[k]).abs() < 4.0 * s.mcse(), "k={k} mean {}", s.mean);
            let sq: Vec<f64> = col.iter().map(|b| (b - state.zeta[k]).powi(2)).collect();
            let s2 = crate::diagnostics::summary::summarize_column("b2", &sq);
            assert!((s2.mean - state.omega.get(k, k)).abs() < 4.0 * s2.mcse(), "k={k} var {}", s2.mean);
        }
    }

    #[test]
    fn likelihood_free_alpha_matches_prior() {
        let data = zero_data(5, 2, 3, 2, 0, 2);
        let hyper = HyperParameters {
            lambda0: vec![0.5, -1.0],
            xi0: PdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap(),
            ..HyperParameters::weakly_informative(2, 0)
        };
        let mut state = GenericParamState {
            alpha: hyper.lambda0_vec(),
            zeta: DVector::zeros(0),
            omega: PdMatrix::identity(0),
            a: DVector::zeros(0),
            beta: vec![DVector::zeros(0); 5],
        };
        let mut s = RngStream::from_parts(6, Purpose::Alpha, 0, 0);
        let n = 200_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            mh_update_alpha(&mut state, &data, &hyper, 1.5, &mut s).unwrap();
            xs.push(state.alpha.clone());
        }
        for l in 0..2 {
            let col: Vec<f64> = xs.iter().map(|b| b[l]).collect();
            let sm = crate::diagnostics::summary::summarize_column("a", &col);
            assert!((sm.mean - hyper.lambda0[l]).abs() < 4.0 * sm.mcse());
            let sq: Vec<f64> = col.iter().map(|b| (b - hyper.lambda0[l]).powi(2)).collect();
            let s2 = crate::diagnostics::summary::summarize_column("a2", &sq);
            assert!((s2.mean - hyper.xi0.get(l, l)).abs() < 4.0 * s2.mcse());
        }
    }

    #[test]
    fn same_seed_same_chain() {
        let (data, _) = generate(&preset("mmnl-j2").unwrap()).unwrap();
        let hyper = HyperParameters::weakly_informative(1, 2);
        let cfg = MhConfig::new(300, 100, 11);
        let a = run_mh(&data, &hyper, &cfg).unwrap().into_chain();
        let b = run_mh(&data, &hyper, &cfg).unwrap().into_chain();
        assert_eq!(a.draws(), b.draws());
        assert_eq!(a.monitors.log_likelihood, b.monitors.log_likelihood);
    }

    #[test]
    fn parallel_matches_serial() {
        let (data, _) = generate(&preset("mmnl-j2").unwrap()).unwrap();
        let hyper = HyperParameters::weakly_informative(1, 2);
        let cfg = MhConfig::new(200, 100, 12);
        let serial = run_mh(&data, &hyper, &cfg).unwrap().into_chain();
        let parallel = run_mh(&data, &hyper, &MhConfig { parallel: true, ..cfg }).unwrap().into_chain();
        assert_eq!(serial.draws(), parallel.draws());
    }

    #[test]
    fn alternative_specific_names_and_prior() {
        let (data, _) = generate(&preset("mnl-j3").unwrap()).unwrap();
        let hyper = HyperParameters::weakly_informative(2, 0);
        let cfg = MhConfig { alternative_specific: true, ..MhConfig::new(20, 10, 1) };
        let chain = run_mh(&data, &hyper, &cfg).unwrap().into_chain();
        assert_eq!(chain.names()[..3], ["alpha[1][1]", "alpha[1][2]", "alpha[2][1]"]);
        assert_eq!(chain.names().len(), 6);
        let h = expand_hyper(&hyper, 3).unwrap();
        assert_eq!(h.xi0.get(2, 2), 10.0);
        assert_eq!(h.xi0.get(1, 2), 0.0);
    }

    #[test]
    fn rho_frozen_after_burn_in() {
        let (data, _) = generate(&preset("mmnl-j2").unwrap()).unwrap();
        let hyper = HyperParameters::weakly_informative(1, 2);
        let cfg = MhConfig { adapt_every: 10, ..MhConfig::new(100, 50, 1) };
        let mut sampler = MhSampler::new(&data, &hyper, &cfg).unwrap();
        let mut state = sampler.initial_state(&data);
        let mut rhos = Vec::new();
        for iter in 0..100 {
            sampler.sweep(&data, &mut state).unwrap();
            sampler.adapt(iter, data.n_decision_makers());
            rhos.push(sampler.rho());
        }
        assert_ne!(rhos[0], rhos[49]);
        assert!(rhos[50..].iter().all(|r| *r == rhos[50]));
    }
}
