//! Pólya-Gamma augmented Gibbs sampler for alternative-specific coefficients.
//!
//! For one alternative `i` the multinomial likelihood, seen as a function of
//! `V_i` with the other utilities held fixed, is a logistic likelihood in
//! `η_i = V_i - L_i` with `L_i = log Σ_{k≠i} exp V_k`. Conditioning on
//! `φ ~ PG(1, η_i)` turns it into a Gaussian kernel in `(α_i, β_·i)`, so
//! both get closed-form normal updates. A sweep updates `a` and `Ω` first,
//! then for each alternative in turn `ζ_i`, `β_·i` and `α_i`.
//!
//! The utilities `V` are kept as a working tensor that is refreshed after
//! every block, so `L_i` and `η_i` always reflect the latest coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conjugate::{draw_a, draw_omega, draw_zeta, ZetaUpdate};
use crate::diagnostics::{dataset_digest, Chain, ChainMeta};
use crate::error::{invalid, Error, PdStage, Result};
use crate::kernels::{sample_mvn_precision, sample_polya_gamma};
use crate::linalg::PdMatrix;
use crate::mh::{omega_names, omega_values};
use crate::model::{dot, log_sum_exp_excluding, AltSpecificParamState, ChoiceDataset, HyperParameters, Utility};
use crate::monitor::{utility_stats, DivergenceMonitor, DivergenceThresholds, RunOutcome, UtilityStats};
use crate::rng::{Purpose, RngStream};
use crate::synth::indexed_name;
use crate::Mutation;

/// When the auxiliary `φ_·i` are drawn relative to the updates of block `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiSchedule {
    /// Draw `φ_·i ~ PG(1, η_i)` from the current utilities immediately
    /// before `β_·i` and `α_i` are updated.
    #[default]
    Fresh,
    /// Draw `φ_·i` at the end of block `i` and reuse it in the next sweep,
    /// after the other alternatives' coefficients have moved.
    Deferred,
}

fn one() -> usize {
    1
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
pub struct PgConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub chain: u32,
    /// Run the per-individual `β` and `φ` draws on the rayon pool. Results
    /// are identical to serial execution.
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub zeta_update: ZetaUpdate,
    #[serde(default)]
    pub phi_schedule: PhiSchedule,
    /// Recompute `V` from scratch after every block and fail if the working
    /// copy differs by more than 1e-12.
    #[serde(default)]
    pub verify_freshness: bool,
    #[serde(default = "default_v_max")]
    pub divergence_v_max: f64,
    #[serde(default = "default_param_max")]
    pub divergence_param_max: f64,
    #[serde(default = "default_window")]
    pub monitor_window: usize,
}

impl PgConfig {
    pub fn new(n_iter: usize, n_burn: usize, seed: u64) -> Self {
        Self {
            n_iter,
            n_burn,
            thin: 1,
            seed,
            chain: 0,
            parallel: false,
            zeta_update: ZetaUpdate::default(),
            phi_schedule: PhiSchedule::default(),
            verify_freshness: false,
            divergence_v_max: default_v_max(),
            divergence_param_max: default_param_max(),
            monitor_window: default_window(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.n_burn >= self.n_iter {
            return invalid(format!("need 0 <= n_burn < n_iter, got {} and {}", self.n_burn, self.n_iter));
        }
        if self.thin == 0 {
            return invalid("thin must be at least 1");
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

/// Mutable view of one decision-maker's slice of the sampler state.
struct Unit<'a> {
    n: usize,
    beta: &'a mut [DVector<f64>],
    phi: &'a mut [f64],
    v: &'a mut [f64],
    l: &'a [f64],
    rng_beta: &'a mut RngStream,
    rng_phi: &'a mut RngStream,
}

fn for_each_unit<F>(units: &mut [Unit<'_>], parallel: bool, f: F) -> Result<()>
where
    F: Fn(&mut Unit<'_>) -> Result<()> + Sync + Send,
{
    if parallel {
        par_units(units, f)
    } else {
        units.iter_mut().try_for_each(f)
    }
}

#[cfg(feature = "parallel")]
fn par_units<F>(units: &mut [Unit<'_>], f: F) -> Result<()>
where
    F: Fn(&mut Unit<'_>) -> Result<()> + Sync + Send,
{
    use rayon::prelude::*;
    units.par_iter_mut().map(f).collect::<Vec<_>>().into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
fn par_units<F>(units: &mut [Unit<'_>], f: F) -> Result<()>
where
    F: Fn(&mut Unit<'_>) -> Result<()> + Sync + Send,
{
    units.iter_mut().try_for_each(f)
}

fn kappa_of(data: &ChoiceDataset, n: usize, t: usize, i: usize) -> f64 {
    if data.choice(n, t) == i {
        0.5
    } else {
        -0.5
    }
}

/// Sampler state that persists across sweeps: streams, the working utility
/// tensor and the `L_i` of the block in progress.
#[derive(Debug, Clone)]
pub struct PgSampler {
    hyper: HyperParameters,
    config: PgConfig,
    hyper_rng: RngStream,
    alpha_rng: RngStream,
    beta_rngs: Vec<RngStream>,
    phi_rngs: Vec<RngStream>,
    v: Vec<f64>,
    l: Vec<f64>,
    mutation: Option<Mutation>,
}

impl PgSampler {
    pub fn new(data: &ChoiceDataset, hyper: &HyperParameters, config: &PgConfig) -> Result<Self> {
        config.validate()?;
        hyper.validate(data.n_fixed(), data.n_random())?;
        if data.n_alternatives() < 2 {
            return invalid("the PG sampler needs at least two alternatives");
        }
        let (seed, chain, n) = (config.seed, config.chain, data.n_decision_makers());
        Ok(Self {
            hyper: hyper.clone(),
            config: config.clone(),
            hyper_rng: RngStream::from_parts(seed, Purpose::Hyper, chain, 0),
            alpha_rng: RngStream::from_parts(seed, Purpose::Alpha, chain, 0),
            beta_rngs: RngStream::family(seed, Purpose::Beta, chain, n),
            phi_rngs: RngStream::family(seed, Purpose::Phi, chain, n),
            v: vec![0.0; n * data.n_occasions() * data.n_alternatives()],
            l: vec![0.0; n * data.n_occasions()],
            mutation: None,
        })
    }

    #[doc(hidden)]
    pub fn set_mutation(&mut self, mutation: Option<Mutation>) {
        self.mutation = mutation;
    }

    /// The working utilities, in dataset row order, as left by the last sweep.
    pub fn utilities(&self) -> &[f64] {
        &self.v
    }

    /// Prior-centred start with `φ ~ PG(1, 0)`: `α_j = λ₀`, `ζ_j = β_nj = μ₀`,
    /// `Ω = I`, `a_k = 1/A_k²`.
    pub fn initial_state(&mut self, data: &ChoiceDataset) -> Result<AltSpecificParamState> {
        let (n_dm, n_occ, n_alt, k) =
            (data.n_decision_makers(), data.n_occasions(), data.n_alternatives(), data.n_random());
        let mut phi = vec![0.0; n_dm * n_occ * n_alt];
        for (chunk, rng) in phi.chunks_mut(n_occ * n_alt).zip(self.phi_rngs.iter_mut()) {
            for p in chunk {
                *p = sample_polya_gamma(0.0, rng)?;
            }
        }
        Ok(AltSpecificParamState {
            alpha: vec![self.hyper.lambda0_vec(); n_alt],
            zeta: vec![self.hyper.mu0_vec(); n_alt],
            omega: PdMatrix::identity(k),
            a: DVector::from_iterator(k, self.hyper.a_scale.iter().map(|a| 1.0 / (a * a))),
            beta: vec![self.hyper.mu0_vec(); n_dm * n_alt],
            phi,
        })
    }

    fn recompute_utilities(&mut self, data: &ChoiceDataset, state: &AltSpecificParamState) {
        let (n_occ, n_alt) = (data.n_occasions(), data.n_alternatives());
        for n in 0..data.n_decision_makers() {
            for t in 0..n_occ {
                for j in 0..n_alt {
                    self.v[(n * n_occ + t) * n_alt + j] = state.utility(data, n, t, j);
                }
            }
        }
    }

    fn refresh_l(&mut self, n_alt: usize, i: usize) {
        for (l, row) in self.l.iter_mut().zip(self.v.chunks_exact(n_alt)) {
            *l = log_sum_exp_excluding(row, i);
        }
    }

    fn units<'a>(&'a mut self, state: &'a mut AltSpecificParamState, n_occ: usize, n_alt: usize) -> Vec<Unit<'a>> {
        let beta_chunk = n_alt;
        state
            .beta
            .chunks_mut(beta_chunk)
            .zip(state.phi.chunks_mut(n_occ * n_alt))
            .zip(self.v.chunks_mut(n_occ * n_alt))
            .zip(self.l.chunks(n_occ))
            .zip(self.beta_rngs.iter_mut().zip(self.phi_rngs.iter_mut()))
            .enumerate()
            .map(|(n, ((((beta, phi), v), l), (rng_beta, rng_phi)))| Unit { n, beta, phi, v, l, rng_beta, rng_phi })
            .collect()
    }

    /// `φ_nti ~ PG(1, V_nti - L_nti)` for every decision-maker and occasion.
    fn draw_phi(&mut self, data: &ChoiceDataset, state: &mut AltSpecificParamState, i: usize) -> Result<()> {
        let (n_occ, n_alt, parallel) = (data.n_occasions(), data.n_alternatives(), self.config.parallel);
        let mut units = self.units(state, n_occ, n_alt);
        for_each_unit(&mut units, parallel, |u| {
            for t in 0..n_occ {
                let r = t * n_alt + i;
                u.phi[r] = sample_polya_gamma(u.v[r] - u.l[t], u.rng_phi)?;
            }
            Ok(())
        })
    }

    /// `β_ni ~ N(P⁻¹b, P⁻¹)` with `P = Ω⁻¹ + Σ_t φ x_R x_Rᵀ` and
    /// `b = Ω⁻¹ζ_i + Σ_t x_R (κ - φ (x_F α_i - L))`.
    fn update_beta(&mut self, data: &ChoiceDataset, state: &mut AltSpecificParamState, i: usize) -> Result<()> {
        let (n_occ, n_alt, k) = (data.n_occasions(), data.n_alternatives(), data.n_random());
        let omega_inv = state.omega.inverse();
        let prior_linear =
            if self.mutation == Some(Mutation::Beta) { DVector::zeros(k) } else { &omega_inv * &state.zeta[i] };
        let alpha_i = state.alpha[i].clone();
        let parallel = self.config.parallel;
        let mut units = self.units(state, n_occ, n_alt);
        for_each_unit(&mut units, parallel, |u| {
            let mut precision = omega_inv.clone();
            let mut linear = prior_linear.clone();
            let mut fixed = vec![0.0; n_occ];
            for (t, f) in fixed.iter_mut().enumerate() {
                let (xr, phi) = (data.xr(u.n, t, i), u.phi[t * n_alt + i]);
                *f = dot(data.xf(u.n, t, i), &alpha_i);
                let c = kappa_of(data, u.n, t, i) - phi * (*f - u.l[t]);
                for a in 0..k {
                    linear[a] += xr[a] * c;
                    for b in 0..k {
                        precision[(a, b)] += phi * xr[a] * xr[b];
                    }
                }
            }
            let precision = PdMatrix::with_stage(precision, PdStage::Precision)?;
            let beta = sample_mvn_precision(&precision, &linear, u.rng_beta)?;
            for (t, f) in fixed.iter().enumerate() {
                u.v[t * n_alt + i] = f + dot(data.xr(u.n, t, i), &beta);
            }
            u.beta[i] = beta;
            Ok(())
        })
    }

    /// `α_i ~ N(P⁻¹b, P⁻¹)` with `P = Ξ₀⁻¹ + ΣΣ φ x_F x_Fᵀ` and
    /// `b = Ξ₀⁻¹λ₀ + ΣΣ x_F (κ - φ (x_R β_ni - L))`.
    fn update_alpha(&mut self, data: &ChoiceDataset, state: &mut AltSpecificParamState, i: usize) -> Result<()> {
        let (n_occ, n_alt, l_dim) = (data.n_occasions(), data.n_alternatives(), data.n_fixed());
        let mut precision = self.hyper.xi0.inverse();
        let mut linear = if self.mutation == Some(Mutation::Alpha) {
            DVector::zeros(l_dim)
        } else {
            &precision * self.hyper.lambda0_vec()
        };
        let has_random = data.n_random() > 0;
        for n in 0..data.n_decision_makers() {
            for t in 0..n_occ {
                let row = n * n_occ + t;
                let phi = state.phi[row * n_alt + i];
                let xf = data.xf(n, t, i);
                let random = if has_random { dot(data.xr(n, t, i), state.beta_at(n, i)) } else { 0.0 };
                let c = kappa_of(data, n, t, i) - phi * (random - self.l[row]);
                for a in 0..l_dim {
                    linear[a] += xf[a] * c;
                    for b in 0..l_dim {
                        precision[(a, b)] += phi * xf[a] * xf[b];
                    }
                }
            }
        }
        let precision = PdMatrix::with_stage(precision, PdStage::Precision)?;
        state.alpha[i] = sample_mvn_precision(&precision, &linear, &mut self.alpha_rng)?;
        for n in 0..data.n_decision_makers() {
            for t in 0..n_occ {
                self.v[(n * n_occ + t) * n_alt + i] = state.utility(data, n, t, i);
            }
        }
        Ok(())
    }

    fn check_fresh(&self, data: &ChoiceDataset, state: &AltSpecificParamState) -> Result<()> {
        let (n_occ, n_alt) = (data.n_occasions(), data.n_alternatives());
        for n in 0..data.n_decision_makers() {
            for t in 0..n_occ {
                for j in 0..n_alt {
                    let fresh = state.utility(data, n, t, j);
                    let held = self.v[(n * n_occ + t) * n_alt + j];
                    if (fresh - held).abs() > 1e-12 * fresh.abs().max(1.0) {
                        return Err(Error::InvalidState(format!(
                            "stale utility at ({}, {}, {}): held {held}, current {fresh}",
                            n + 1,
                            t + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// One full sweep: `a`, `Ω`, then for each alternative `i` in order
    /// `ζ_i`, `β_·i`, `α_i`, with `φ_·i` drawn according to the schedule.
    /// Without random coefficients only the `α_i` (and `φ`) are updated.
    pub fn sweep(&mut self, data: &ChoiceDataset, state: &mut AltSpecificParamState) -> Result<()> {
        state.check_dims(data)?;
        let (n_alt, k) = (data.n_alternatives(), data.n_random());
        if state.phi.len() != self.v.len() || state.beta.len() != data.n_decision_makers() * n_alt {
            return Err(Error::Dimension("state does not match the dataset".into()));
        }
        self.recompute_utilities(data, state);
        if k > 0 {
            state.a = draw_a(&state.omega, &self.hyper, self.mutation, &mut self.hyper_rng)?;
            let mut s = DMatrix::zeros(k, k);
            for (idx, b) in state.beta.iter().enumerate() {
                let d = b - &state.zeta[idx % n_alt];
                s.ger(1.0, &d, &d, 1.0);
            }
            state.omega = draw_omega(state.beta.len(), &s, &state.a, &self.hyper, self.mutation, &mut self.hyper_rng)?;
        }
        for i in 0..n_alt {
            self.refresh_l(n_alt, i);
            if self.config.phi_schedule == PhiSchedule::Fresh {
                self.draw_phi(data, state, i)?;
            }
            if k > 0 {
                state.zeta[i] = draw_zeta(
                    state.beta.iter().skip(i).step_by(n_alt),
                    &state.omega,
                    &self.hyper,
                    self.config.zeta_update,
                    self.mutation,
                    &mut self.hyper_rng,
                )?;
                self.update_beta(data, state, i)?;
            }
            if data.n_fixed() > 0 {
                self.update_alpha(data, state, i)?;
            }
            if self.config.phi_schedule == PhiSchedule::Deferred {
                self.draw_phi(data, state, i)?;
            }
            if self.config.verify_freshness {
                self.check_fresh(data, state)?;
            }
        }
        Ok(())
    }
}

/// Chain column names for the alternative-specific model.
pub fn alt_specific_names(n_alt: usize, n_fixed: usize, n_random: usize) -> Vec<String> {
    let mut names = Vec::new();
    for j in 0..n_alt {
        names.extend((0..n_fixed).map(|l| indexed_name("alpha", Some(j), l)));
    }
    for j in 0..n_alt {
        names.extend((0..n_random).map(|k| indexed_name("zeta", Some(j), k)));
    }
    names.extend(omega_names(n_random));
    names.extend((0..n_random).map(|k| indexed_name("a", None, k)));
    names
}

pub(crate) fn alt_specific_values(state: &AltSpecificParamState) -> Vec<f64> {
    let mut v: Vec<f64> = state.alpha.iter().flat_map(|a| a.iter().copied()).collect();
    v.extend(state.zeta.iter().flat_map(|z| z.iter().copied()));
    v.extend(omega_values(&state.omega));
    v.extend(state.a.iter());
    v
}

pub(crate) fn max_abs_alt_specific(state: &AltSpecificParamState) -> f64 {
    let all = state
        .alpha
        .iter()
        .chain(state.zeta.iter())
        .chain(state.beta.iter())
        .flat_map(|x| x.iter())
        .chain(state.omega.matrix().iter())
        .chain(state.a.iter());
    let mut m = 0.0f64;
    for x in all {
        if !x.is_finite() {
            return f64::INFINITY;
        }
        m = m.max(x.abs());
    }
    m
}

fn non_finite_stats() -> UtilityStats {
    UtilityStats {
        log_likelihood: f64::NAN,
        max_abs_utility: f64::INFINITY,
        mean_chosen_prob: f64::NAN,
        all_finite: false,
    }
}

/// Run the sampler for `n_iter` sweeps, storing thinned post-burn-in draws.
///
/// A sweep that fails numerically (non-finite tilt, a precision matrix that
/// is not positive definite) is reported as a divergence at that iteration.
pub fn run_pg(data: &ChoiceDataset, hyper: &HyperParameters, config: &PgConfig) -> Result<RunOutcome> {
    run_pg_with(data, hyper, config, None)
}

#[doc(hidden)]
pub fn run_pg_with(
    data: &ChoiceDataset,
    hyper: &HyperParameters,
    config: &PgConfig,
    mutation: Option<Mutation>,
) -> Result<RunOutcome> {
    let mut sampler = PgSampler::new(data, hyper, config)?;
    sampler.set_mutation(mutation);
    let mut state = sampler.initial_state(data)?;
    let meta = ChainMeta {
        sampler: "pg".into(),
        seed: config.seed,
        chain_index: config.chain,
        config: serde_json::to_value(config)?,
        dataset_digest: dataset_digest(data),
    };
    let names = alt_specific_names(data.n_alternatives(), data.n_fixed(), data.n_random());
    let mut chain = Chain::new(names, meta)?;
    let mut monitor = DivergenceMonitor::new(config.thresholds());
    for iter in 0..config.n_iter {
        let (stats, max_param) = match sampler.sweep(data, &mut state) {
            Ok(()) => (utility_stats(data, sampler.utilities()), max_abs_alt_specific(&state)),
            Err(Error::NumericalPd { .. }) | Err(Error::InvalidInput(_)) => (non_finite_stats(), f64::INFINITY),
            Err(e) => return Err(e),
        };
        let m = &mut chain.monitors;
        m.iteration.push(iter);
        m.log_likelihood.push(stats.log_likelihood);
        m.max_abs_utility.push(stats.max_abs_utility);
        m.mean_chosen_prob.push(stats.mean_chosen_prob);
        m.max_abs_param.push(max_param);
        m.accept_beta.push(f64::NAN);
        m.accept_alpha.push(f64::NAN);
        m.mean_phi.push(state.phi.iter().sum::<f64>() / state.phi.len() as f64);
        if let Some(report) = monitor.observe(iter, &stats, max_param) {
            return Ok(RunOutcome::Diverged { report, chain });
        }
        if iter >= config.n_burn && (iter - config.n_burn).is_multiple_of(config.thin) {
            chain.push(iter, alt_specific_values(&state))?;
        }
    }
    Ok(RunOutcome::Completed(chain))
}
