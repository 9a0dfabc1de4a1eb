//! Chains, posterior summaries, recovery and cross-sampler comparison,
//! joint-distribution correctness tests, generator self-checks and
//! divergence trace analysis.

mod chain;
mod compare;
mod divergence;
pub mod geweke;
mod selftest;
pub(crate) mod summary;

pub use chain::{dataset_digest, Chain, ChainMeta, Monitors};
pub use compare::{compare_chains, recovery_report, ChainComparison, ComparisonRow, RecoveryReport, RecoveryRow};
pub use divergence::{divergence_trace_stats, TraceStats};
pub use geweke::{geweke_joint_test, GewekeConfig, GewekeReport, GewekeRow, ToySpec};
pub use selftest::{pg_selftest, SelfTestCheck, SelfTestConfig, SelfTestReport};
pub use summary::{effective_sample_size, quantile, summarize, ParamSummary, Summary};

/// |z| threshold used by every statistical check in this crate.
pub const Z_THRESHOLD: f64 = 4.0;
