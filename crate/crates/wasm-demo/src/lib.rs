//! Browser bindings for three small demos: the Pólya-Gamma generator against
//! its moments, stable MNL choice probabilities, and a short PG sampler trace
//! under either auxiliary-draw schedule.
//!
//! Each demo is a plain Rust function returning JSON so it can be tested
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use rand::distr::Distribution;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use mmnl::conjugate::ZetaUpdate;
use mmnl::kernels::{polya_gamma_mean, polya_gamma_variance, PolyaGamma};
use mmnl::model::{log_sum_exp, mnl_probabilities};
use mmnl::pg::{run_pg, PgConfig, PhiSchedule};
use mmnl::synth::{generate, preset};
use mmnl::{HyperParameters, Purpose, RngStream};

/// Caps that keep a browser tab responsive.
pub const MAX_DRAWS: usize = 1_000_000;
pub const MAX_BINS: usize = 200;
pub const MAX_UNITS: usize = 500;
pub const MAX_ITERATIONS: usize = 5_000;

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub c: f64,
    pub draws: usize,
    /// `bins + 1` edges; the last bin also collects draws above the range.
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn pg_histogram(c: f64, draws: usize, bins: usize, seed: u64) -> Result<Histogram, String> {
    if !(1..=MAX_DRAWS).contains(&draws) || !(1..=MAX_BINS).contains(&bins) {
        return Err(format!("draws must be in 1..={MAX_DRAWS} and bins in 1..={MAX_BINS}"));
    }
    let pg = PolyaGamma::new(c).map_err(|e| e.to_string())?;
    let mut rng = RngStream::from_parts(seed, Purpose::Test, 0, 0);
    let xs: Vec<f64> = (0..draws).map(|_| pg.sample(&mut rng)).collect();
    let mean = polya_gamma_mean(c);
    let variance = polya_gamma_variance(c);
    let n = draws as f64;
    let sample_mean = xs.iter().sum::<f64>() / n;
    let sample_variance =
        if draws > 1 { xs.iter().map(|x| (x - sample_mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    // six standard deviations past the mean covers all but a sliver of mass
    let hi = mean + 6.0 * variance.sqrt();
    let width = hi / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &xs {
        counts[((x / width) as usize).min(bins - 1)] += 1;
    }
    Ok(Histogram {
        c,
        draws,
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        density: counts.iter().map(|&k| k as f64 / (n * width)).collect(),
        sample_mean,
        sample_variance,
        mean,
        variance,
    })
}

#[derive(Debug, Serialize)]
pub struct Probabilities {
    pub probabilities: Vec<f64>,
    pub log_sum_exp: f64,
}

pub fn choice_probabilities(utilities: &[f64]) -> Result<Probabilities, String> {
    let probabilities = mnl_probabilities(utilities).map_err(|e| e.to_string())?;
    Ok(Probabilities { probabilities, log_sum_exp: log_sum_exp(utilities) })
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub schedule: String,
    pub n: usize,
    pub iteration: Vec<usize>,
    pub max_abs_utility: Vec<f64>,
    pub mean_chosen_prob: Vec<f64>,
    /// Iteration at which the divergence monitor stopped the run.
    pub diverged_at: Option<usize>,
}

/// Run the PG sampler on a reduced copy of the three-alternative mixed logit
/// scenario and return its per-sweep monitors.
pub fn pg_trace(n: usize, iterations: usize, deferred: bool, seed: u64) -> Result<Trace, String> {
    if !(10..=MAX_UNITS).contains(&n) || !(2..=MAX_ITERATIONS).contains(&iterations) {
        return Err(format!("n must be in 10..={MAX_UNITS} and iterations in 2..={MAX_ITERATIONS}"));
    }
    let mut spec = preset("mmnl-j3").map_err(|e| e.to_string())?;
    spec.n = n;
    spec.seed = seed;
    let (data, _) = generate(&spec).map_err(|e| e.to_string())?;
    let hyper = HyperParameters::weakly_informative(data.n_fixed(), data.n_random());
    let schedule = if deferred { PhiSchedule::Deferred } else { PhiSchedule::Fresh };
    let cfg = PgConfig {
        phi_schedule: schedule,
        zeta_update: ZetaUpdate::Flat,
        ..PgConfig::new(iterations, iterations / 2, seed)
    };
    let outcome = run_pg(&data, &hyper, &cfg).map_err(|e| e.to_string())?;
    let diverged_at = outcome.divergence().map(|d| d.iteration);
    let m = &outcome.chain().monitors;
    Ok(Trace {
        schedule: if deferred { "deferred" } else { "fresh" }.into(),
        n,
        iteration: m.iteration.clone(),
        max_abs_utility: m.max_abs_utility.clone(),
        mean_chosen_prob: m.mean_chosen_prob.clone(),
        diverged_at,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Histogram of PG(1, c) draws with exact and sample moments, as JSON.
#[wasm_bindgen(js_name = pgHistogram)]
pub fn pg_histogram_js(c: f64, draws: u32, bins: u32, seed: u32) -> Result<String, JsError> {
    to_json(pg_histogram(c, draws as usize, bins as usize, seed.into()))
}

/// Choice probabilities and log-sum-exp for a utility vector, as JSON.
#[wasm_bindgen(js_name = choiceProbabilities)]
pub fn choice_probabilities_js(utilities: &[f64]) -> Result<String, JsError> {
    to_json(choice_probabilities(utilities))
}

/// Per-sweep PG sampler monitors, as JSON.
#[wasm_bindgen(js_name = pgTrace)]
pub fn pg_trace_js(n: u32, iterations: u32, deferred: bool, seed: u32) -> Result<String, JsError> {
    to_json(pg_trace(n as usize, iterations as usize, deferred, seed.into()))
}
