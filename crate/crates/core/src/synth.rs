//! Synthetic choice data from the hierarchical generative process, and
//! the fixed-truth scenario presets used by the Monte Carlo experiments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{categorical_unchecked, sample_gumbel, sample_mvn_cov};
use crate::linalg::PdMatrix;
use crate::model::{log_sum_exp, ChoiceDataset};
use crate::rng::{Purpose, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Fixed coefficients only, one `α_j` per alternative.
    Mnl,
    /// Shared `α` and `β_n ~ N(ζ, Ω)` across alternatives.
    MmnlGeneric,
    /// Per-alternative `α_j` and `β_nj ~ N(ζ_j, Ω)`.
    MmnlAltspecific,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateLaw {
    IidNormal,
    IidUniform,
    /// iid standard normal, except the last alternative's covariates are zero.
    ReferenceZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChoiceRule {
    /// Categorical draw from the softmax of the utilities.
    #[default]
    Categorical,
    /// Arg-max of utilities plus standard Gumbel noise.
    GumbelMax,
}

/// True parameter values. Rows of `alpha` and `zeta` are per alternative for
/// [`ModelKind::Mnl`] and [`ModelKind::MmnlAltspecific`], a single row otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueValues {
    pub alpha: Vec<Vec<f64>>,
    #[serde(default)]
    pub zeta: Vec<Vec<f64>>,
    #[serde(default)]
    pub omega: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioSpec {
    pub model_kind: ModelKind,
    pub n: usize,
    pub t: usize,
    pub j: usize,
    pub l: usize,
    pub k: usize,
    pub true_values: TrueValues,
    pub covariate_law: CovariateLaw,
    #[serde(default)]
    pub choice_rule: ChoiceRule,
    pub seed: u64,
}

impl ScenarioSpec {
    fn coefficient_rows(&self) -> usize {
        match self.model_kind {
            ModelKind::MmnlGeneric => 1,
            ModelKind::Mnl | ModelKind::MmnlAltspecific => self.j,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 || self.j < 2 {
            return invalid("scenario needs N, T >= 1 and J >= 2");
        }
        let rows = self.coefficient_rows();
        let tv = &self.true_values;
        if tv.alpha.len() != rows || tv.alpha.iter().any(|r| r.len() != self.l) {
            return Err(Error::Dimension(format!("true alpha must be {rows} x {}", self.l)));
        }
        match self.model_kind {
            ModelKind::Mnl => {
                if self.k != 0 || !tv.zeta.is_empty() || !tv.omega.is_empty() {
                    return invalid("mnl scenario has no random coefficients");
                }
            }
            _ => {
                if self.k == 0 {
                    return invalid("mixed logit scenario needs K >= 1");
                }
                if tv.zeta.len() != rows || tv.zeta.iter().any(|r| r.len() != self.k) {
                    return Err(Error::Dimension(format!("true zeta must be {rows} x {}", self.k)));
                }
                self.omega()?;
            }
        }
        if tv.alpha.iter().chain(&tv.zeta).chain(&tv.omega).flatten().any(|v| !v.is_finite()) {
            return invalid("true values must be finite");
        }
        Ok(())
    }

    pub fn omega(&self) -> Result<PdMatrix> {
        let o = &self.true_values.omega;
        if o.len() != self.k || o.iter().any(|r| r.len() != self.k) {
            return Err(Error::Dimension(format!("true omega must be {0} x {0}", self.k)));
        }
        PdMatrix::new(DMatrix::from_fn(self.k, self.k, |r, c| o[r][c]))
    }
}

/// Truth behind a simulated dataset, including the drawn individual coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub spec: ScenarioSpec,
    /// Indexed `n * rows + r` with `rows` the number of coefficient rows.
    pub beta: Vec<Vec<f64>>,
}

impl TrueParams {
    /// Named population-level truth using the chain naming convention
    /// (1-based indices, `[j]` only for per-alternative rows).
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let spec = &self.spec;
        let per_alt = spec.coefficient_rows() > 1;
        let mut out = Vec::new();
        for (j, row) in spec.true_values.alpha.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                out.push((indexed_name("alpha", per_alt.then_some(j), l), *v));
            }
        }
        for (j, row) in spec.true_values.zeta.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                out.push((indexed_name("zeta", per_alt.then_some(j), k), *v));
            }
        }
        for k1 in 0..spec.k {
            for k2 in k1..spec.k {
                out.push((format!("omega[{}][{}]", k1 + 1, k2 + 1), spec.true_values.omega[k1][k2]));
            }
        }
        out
    }
}

pub(crate) fn indexed_name(base: &str, row: Option<usize>, col: usize) -> String {
    match row {
        Some(j) => format!("{base}[{}][{}]", j + 1, col + 1),
        None => format!("{base}[{}]", col + 1),
    }
}

fn draw_covariate<R: Rng + ?Sized>(law: CovariateLaw, last_alt: bool, rng: &mut R) -> f64 {
    match law {
        CovariateLaw::IidNormal => rng.sample(StandardNormal),
        CovariateLaw::IidUniform => rng.random_range(-1.0..1.0),
        CovariateLaw::ReferenceZero => {
            if last_alt {
                0.0
            } else {
                rng.sample(StandardNormal)
            }
        }
    }
}

/// Simulate covariates and choices for a scenario. Each decision-maker
/// draws from its own covariate, coefficient and choice streams.
pub fn generate(spec: &ScenarioSpec) -> Result<(ChoiceDataset, TrueParams)> {
    spec.validate()?;
    let rows = spec.coefficient_rows();
    let (n_dm, n_occ, n_alt, l, k) = (spec.n, spec.t, spec.j, spec.l, spec.k);
    let alpha: Vec<DVector<f64>> = spec.true_values.alpha.iter().map(|r| DVector::from_column_slice(r)).collect();
    let (zeta, omega) = if k > 0 {
        let z: Vec<DVector<f64>> = spec.true_values.zeta.iter().map(|r| DVector::from_column_slice(r)).collect();
        (z, Some(spec.omega()?))
    } else {
        (Vec::new(), None)
    };

    let mut xf = Vec::with_capacity(n_dm * n_occ * n_alt * l);
    let mut xr = Vec::with_capacity(n_dm * n_occ * n_alt * k);
    let mut choices = Vec::with_capacity(n_dm * n_occ);
    let mut beta = Vec::with_capacity(n_dm * rows);
    let mut v = vec![0.0; n_alt];
    let mut probs = vec![0.0; n_alt];

    for n in 0..n_dm {
        let mut cov_rng = RngStream::from_parts(spec.seed, Purpose::Covariates, 0, n as u64);
        let mut truth_rng = RngStream::from_parts(spec.seed, Purpose::Truth, 0, n as u64);
        let mut choice_rng = RngStream::from_parts(spec.seed, Purpose::Choices, 0, n as u64);

        let beta_n: Vec<DVector<f64>> = match &omega {
            Some(om) => zeta.iter().map(|z| sample_mvn_cov(z, om, &mut truth_rng)).collect::<Result<_>>()?,
            None => Vec::new(),
        };

        for _t in 0..n_occ {
            let base_f = xf.len();
            let base_r = xr.len();
            for j in 0..n_alt {
                let last = j == n_alt - 1;
                for _ in 0..l {
                    xf.push(draw_covariate(spec.covariate_law, last, &mut cov_rng));
                }
                for _ in 0..k {
                    xr.push(draw_covariate(spec.covariate_law, last, &mut cov_rng));
                }
            }
            for (j, vj) in v.iter_mut().enumerate() {
                let r = if rows == 1 { 0 } else { j };
                let f = &xf[base_f + j * l..base_f + (j + 1) * l];
                let mut u: f64 = f.iter().zip(alpha[r].iter()).map(|(x, a)| x * a).sum();
                if k > 0 {
                    let x = &xr[base_r + j * k..base_r + (j + 1) * k];
                    u += x.iter().zip(beta_n[r].iter()).map(|(x, b)| x * b).sum::<f64>();
                }
                *vj = u;
            }
            let choice = match spec.choice_rule {
                ChoiceRule::Categorical => {
                    let lse = log_sum_exp(&v);
                    for (p, vj) in probs.iter_mut().zip(&v) {
                        *p = (vj - lse).exp();
                    }
                    categorical_unchecked(&probs, &mut choice_rng)
                }
                ChoiceRule::GumbelMax => {
                    let mut best = 0;
                    let mut best_u = f64::NEG_INFINITY;
                    for (j, vj) in v.iter().enumerate() {
                        let u = vj + sample_gumbel(&mut choice_rng);
                        if u > best_u {
                            best_u = u;
                            best = j;
                        }
                    }
                    best
                }
            };
            choices.push(choice);
        }
        beta.extend(beta_n.into_iter().map(|b| b.iter().copied().collect::<Vec<_>>()));
    }

    let data = ChoiceDataset::new(n_dm, n_occ, n_alt, l, k, xf, xr, choices)?;
    Ok((data, TrueParams { spec: spec.clone(), beta }))
}

pub const PRESET_NAMES: [&str; 3] = ["mnl-j3", "mmnl-j2", "mmnl-j3"];

/// Named Monte Carlo scenarios.
///
/// * `mnl-j3`: N=1000, T=5, J=3, L=2, alternative-specific fixed coefficients only.
/// * `mmnl-j2`: N=500, T=8, J=2, L=1, K=2, last alternative's covariates zero,
///   so generic and alternative-specific parameterizations coincide.
/// * `mmnl-j3`: N=500, T=8, J=3, L=1, K=2, iid normal covariates and strong
///   taste heterogeneity (`ζ = (3, -3)`, `Ω = 10 I`).
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let spec = match name {
        "mnl-j3" => ScenarioSpec {
            model_kind: ModelKind::Mnl,
            n: 1000,
            t: 5,
            j: 3,
            l: 2,
            k: 0,
            true_values: TrueValues {
                alpha: vec![vec![1.0, -0.5], vec![-1.0, 0.5], vec![0.5, 0.0]],
                zeta: vec![],
                omega: vec![],
            },
            covariate_law: CovariateLaw::IidNormal,
            choice_rule: ChoiceRule::Categorical,
            seed: 1,
        },
        "mmnl-j2" => ScenarioSpec {
            model_kind: ModelKind::MmnlGeneric,
            n: 500,
            t: 8,
            j: 2,
            l: 1,
            k: 2,
            true_values: TrueValues {
                alpha: vec![vec![0.5]],
                zeta: vec![vec![1.0, -1.0]],
                omega: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            },
            covariate_law: CovariateLaw::ReferenceZero,
            choice_rule: ChoiceRule::Categorical,
            seed: 1,
        },
        "mmnl-j3" => ScenarioSpec {
            model_kind: ModelKind::MmnlGeneric,
            n: 500,
            t: 8,
            j: 3,
            l: 1,
            k: 2,
            true_values: TrueValues {
                alpha: vec![vec![0.5]],
                zeta: vec![vec![3.0, -3.0]],
                omega: vec![vec![10.0, 0.0], vec![0.0, 10.0]],
            },
            covariate_law: CovariateLaw::IidNormal,
            choice_rule: ChoiceRule::Categorical,
            seed: 1,
        },
        other => return invalid(format!("unknown preset {other:?}; known: {PRESET_NAMES:?}")),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shares(data: &ChoiceDataset) -> Vec<f64> {
        let mut c = vec![0.0; data.n_alternatives()];
        for &y in data.choices() {
            c[y] += 1.0;
        }
        let total = data.choices().len() as f64;
        c.iter().map(|x| x / total).collect()
    }

    #[test]
    fn preset_shapes() {
        assert_eq!(preset("mmnl-j2").unwrap().covariate_law, CovariateLaw::ReferenceZero);
        assert_eq!(preset("mnl-j3").unwrap().k, 0);
        assert!(preset("nope").is_err());
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn generated_presets_are_valid() {
        let (data, truth) = generate(&preset("mmnl-j3").unwrap()).unwrap();
        assert_eq!(data.n_decision_makers(), 500);
        assert_eq!(data.n_alternatives(), 3);
        assert_eq!(truth.beta.len(), 500);
        let (data, _) = generate(&preset("mmnl-j2").unwrap()).unwrap();
        for n in 0..data.n_decision_makers() {
            for t in 0..data.n_occasions() {
                assert!(data.xf(n, t, 1).iter().chain(data.xr(n, t, 1)).all(|x| *x == 0.0));
            }
        }
    }

    #[test]
    fn bit_reproducible() {
        let spec = preset("mmnl-j2").unwrap();
        let (a, ta) = generate(&spec).unwrap();
        let (b, tb) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate(&ScenarioSpec { seed: 2, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_covariates_give_uniform_shares() {
        let spec = ScenarioSpec {
            model_kind: ModelKind::Mnl,
            n: 4000,
            t: 5,
            j: 3,
            l: 2,
            k: 0,
            true_values: TrueValues {
                alpha: vec![vec![-1.0, 1.0], vec![0.0, 0.3], vec![1.0, -0.7]],
                zeta: vec![],
                omega: vec![],
            },
            covariate_law: CovariateLaw::IidNormal,
            choice_rule: ChoiceRule::Categorical,
            seed: 9,
        };
        let (data, _) = generate(&spec).unwrap();
        let zeroed = ChoiceDataset::new(
            data.n_decision_makers(),
            data.n_occasions(),
            3,
            2,
            0,
            vec![0.0; data.xf_all().len()],
            vec![],
            data.choices().to_vec(),
        )
        .unwrap();
        // regenerate with zero covariates by scaling the truth to zero
        let spec0 = ScenarioSpec {
            true_values: TrueValues { alpha: vec![vec![0.0; 2]; 3], zeta: vec![], omega: vec![] },
            ..spec
        };
        let (d0, _) = generate(&spec0).unwrap();
        let n = d0.choices().len() as f64;
        let se = ((1.0 / 3.0) * (2.0 / 3.0) / n).sqrt();
        for s in shares(&d0) {
            assert!((s - 1.0 / 3.0).abs() < 4.0 * se, "{s}");
        }
        assert_eq!(zeroed.n_fixed(), 2);
    }

    #[test]
    fn degenerate_mixing_matches_fixed_coefficients() {
        let base = preset("mmnl-j3").unwrap();
        let tiny = ScenarioSpec {
            true_values: TrueValues {
                alpha: vec![vec![0.5]],
                zeta: vec![vec![1.0, -1.0]],
                omega: vec![vec![1e-12, 0.0], vec![0.0, 1e-12]],
            },
            n: 2000,
            seed: 4,
            ..base.clone()
        };
        let (d, truth) = generate(&tiny).unwrap();
        for b in &truth.beta {
            assert!((b[0] - 1.0).abs() < 1e-4 && (b[1] + 1.0).abs() < 1e-4);
        }
        // compare choice shares against expected MNL probabilities at beta = zeta
        let mut expect = vec![0.0; 3];
        for n in 0..d.n_decision_makers() {
            for t in 0..d.n_occasions() {
                let v: Vec<f64> =
                    (0..3).map(|j| 0.5 * d.xf(n, t, j)[0] + d.xr(n, t, j)[0] - d.xr(n, t, j)[1]).collect();
                let p = crate::model::mnl_probabilities(&v).unwrap();
                for j in 0..3 {
                    expect[j] += p[j];
                }
            }
        }
        let total = d.choices().len() as f64;
        for (s, e) in shares(&d).iter().zip(&expect) {
            let e = e / total;
            let se = (e * (1.0 - e) / total).sqrt();
            assert!((s - e).abs() < 4.0 * se);
        }
    }

    #[test]
    fn drawn_beta_moments_match_truth() {
        let spec = ScenarioSpec {
            n: 1000,
            t: 10,
            true_values: TrueValues {
                alpha: vec![vec![0.5]],
                zeta: vec![vec![1.0, -1.0]],
                omega: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            },
            ..preset("mmnl-j3").unwrap()
        };
        let (_, truth) = generate(&spec).unwrap();
        let n = truth.beta.len() as f64;
        for k in 0..2 {
            let m = truth.beta.iter().map(|b| b[k]).sum::<f64>() / n;
            let target = spec.true_values.zeta[0][k];
            assert!((m - target).abs() < 4.0 * (0.5 / n).sqrt());
            let var = truth.beta.iter().map(|b| (b[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
            // var of the sample variance of a normal: 2σ⁴/(n-1)
            assert!((var - 0.5).abs() < 4.0 * (2.0 * 0.25 / (n - 1.0)).sqrt());
        }
        let cov = truth.beta.iter().map(|b| b[0] * b[1]).sum::<f64>() / n
            - truth.beta.iter().map(|b| b[0]).sum::<f64>() / n * truth.beta.iter().map(|b| b[1]).sum::<f64>() / n;
        assert!(cov.abs() < 4.0 * (0.25 / n).sqrt());
    }

    #[test]
    fn gumbel_rule_matches_categorical() {
        let base = ScenarioSpec { n: 20_000, t: 5, ..preset("mnl-j3").unwrap() };
        let (a, _) = generate(&base).unwrap();
        let (b, _) = generate(&ScenarioSpec { choice_rule: ChoiceRule::GumbelMax, ..base }).unwrap();
        // same covariates, different choice mechanism: chi-square homogeneity
        assert_eq!(a.xf_all(), b.xf_all());
        let (sa, sb) = (shares(&a), shares(&b));
        let n = a.choices().len() as f64;
        let mut chi2 = 0.0;
        for j in 0..3 {
            let pooled = (sa[j] + sb[j]) / 2.0;
            chi2 += 2.0 * n * (sa[j] - pooled).powi(2) / pooled + 2.0 * n * (sb[j] - pooled).powi(2) / pooled;
        }
        // chi-square(2) 1% critical value
        assert!(chi2 < 9.21, "chi2 {chi2}");
    }

    #[test]
    fn larger_omega_spreads_individual_shares() {
        // per-individual share of choices going to the alternative with the
        // largest first random covariate; its spread tracks |β_n1| heterogeneity
        let mut spreads = Vec::new();
        for (i, s2) in [0.05, 0.5, 3.0].into_iter().enumerate() {
            let spec = ScenarioSpec {
                true_values: TrueValues {
                    alpha: vec![vec![0.0]],
                    zeta: vec![vec![1.0, 0.0]],
                    omega: vec![vec![s2, 0.0], vec![0.0, s2]],
                },
                t: 20,
                covariate_law: CovariateLaw::IidNormal,
                seed: 100 + i as u64,
                ..preset("mmnl-j3").unwrap()
            };
            let (d, _) = generate(&spec).unwrap();
            let per: Vec<f64> = (0..d.n_decision_makers())
                .map(|n| {
                    let hits = (0..d.n_occasions())
                        .filter(|&t| {
                            let best = (0..d.n_alternatives())
                                .max_by(|&a, &b| d.xr(n, t, a)[0].total_cmp(&d.xr(n, t, b)[0]))
                                .unwrap();
                            d.choice(n, t) == best
                        })
                        .count();
                    hits as f64 / d.n_occasions() as f64
                })
                .collect();
            let m = per.iter().sum::<f64>() / per.len() as f64;
            spreads.push(per.iter().map(|p| (p - m).powi(2)).sum::<f64>() / per.len() as f64);
        }
        assert!(spreads[0] < spreads[1] && spreads[1] < spreads[2], "{spreads:?}");
    }

    #[test]
    fn rejects_inconsistent_spec() {
        let mut spec = preset("mmnl-j2").unwrap();
        spec.true_values.zeta = vec![vec![1.0]];
        assert!(generate(&spec).is_err());
        let mut spec = preset("mmnl-j2").unwrap();
        spec.true_values.omega = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(generate(&spec).is_err());
    }
}
