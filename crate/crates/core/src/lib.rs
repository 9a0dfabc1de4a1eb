//! Bayesian estimation of multinomial and mixed multinomial logit models.
//!
//! Two samplers share the same hierarchical prior (normal priors on fixed
//! coefficients and on the random-coefficient mean, Huang's half-t prior on
//! the random-coefficient covariance):
//!
//! * [`mh`]: the Metropolis-within-Gibbs sampler for generic coefficients,
//! * [`pg`]: the Pólya-Gamma augmented Gibbs sampler for
//!   alternative-specific coefficients, with a divergence monitor.
//!
//! [`synth`] simulates datasets, [`diagnostics`] summarizes and compares
//! chains and runs joint-distribution correctness tests, and [`io`] holds
//! the CSV/JSON formats used by the command-line tool.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod mh;
pub mod model;
pub mod pg;
pub mod rng;
pub mod synth;

pub mod conjugate;
pub mod monitor;
mod nullable;

pub use error::{Error, PdStage, Result};
pub use linalg::PdMatrix;
pub use model::{AltSpecificParamState, ChoiceDataset, GenericParamState, HyperParameters};
pub use rng::{Purpose, RngStream, StreamId};

/// Deliberate defects, one per conditional update, used to check that the
/// joint-distribution test has power. Never set outside tests.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// `a_k` ignores `Ω`.
    A,
    /// `Ω` drops the `2ν diag(a)` prior scale.
    Omega,
    /// `ζ` is set to its conditional mean instead of drawn.
    Zeta,
    /// `β` update centres its prior at zero instead of `ζ`.
    Beta,
    /// `α` update centres its prior at zero instead of `λ₀`.
    Alpha,
}
