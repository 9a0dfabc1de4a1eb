//! `mmnl`: simulate choice panels, fit them with either sampler, compare
//! chains and run correctness checks.
//!
//! Exit status is 0 on success, 2 when a fit diverged (outputs are still
//! written) and 1 on any other failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "mmnl", version, about = "Bayesian multinomial and mixed logit samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset; writes dataset.csv, truth.json and meta.json.
    Gen {
        /// Built-in scenario (mnl-j3, mmnl-j2, mmnl-j3).
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<String>,
        /// Scenario specification as JSON.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Store the drawn individual coefficients in truth.json.
        #[arg(long)]
        include_beta: bool,
    },
    /// Run a sampler; writes chain.csv, report.json and, if the run
    /// diverged, divergence.json.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Independent chains, run concurrently; outputs get a `-<chain>` suffix.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        chains: u32,
    },
    /// Compare posterior means of two chains; writes compare.csv.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// JSON name pairs: `[["a", "b"], ...]` or `{"a": "b", ...}`.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "compare.csv")]
        out: PathBuf,
    },
    /// Joint-distribution test of a sampler on a toy panel; writes geweke.csv.
    Geweke {
        #[arg(long, value_enum)]
        sampler: SamplerArg,
        #[arg(long)]
        toy_spec: PathBuf,
        #[arg(long)]
        outer: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Order of the latent PG draws within a sweep (pg only).
        #[arg(long, value_enum, default_value_t = PhiArg::Fresh)]
        phi_schedule: PhiArg,
        #[arg(long, default_value = "geweke.csv")]
        out: PathBuf,
    },
    /// Statistical checks of the Pólya-Gamma generator; writes selftest.json.
    PgSelftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "selftest.json")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Mh,
    Pg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiArg {
    Fresh,
    Deferred,
}

/// How a command that did not error ended.
pub enum Status {
    Success,
    Diverged,
    ChecksFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { preset, spec, out, seed, include_beta } => {
            commands::gen(preset.as_deref(), spec.as_deref(), &out, seed, include_beta)
        }
        Command::Fit { config, chains } => commands::fit(&config, chains),
        Command::Compare { a, b, map, out } => commands::compare(&a, &b, &map, &out),
        Command::Geweke { sampler, toy_spec, outer, seed, phi_schedule, out } => {
            let sampler = match sampler {
                SamplerArg::Mh => mmnl::diagnostics::geweke::SamplerKind::Mh,
                SamplerArg::Pg => mmnl::diagnostics::geweke::SamplerKind::Pg,
            };
            let phi = match phi_schedule {
                PhiArg::Fresh => mmnl::pg::PhiSchedule::Fresh,
                PhiArg::Deferred => mmnl::pg::PhiSchedule::Deferred,
            };
            commands::geweke(sampler, &toy_spec, outer, seed, phi, &out)
        }
        Command::PgSelftest { seed, out } => commands::pg_selftest(seed, &out),
    };
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Diverged) => ExitCode::from(2),
        Ok(Status::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
