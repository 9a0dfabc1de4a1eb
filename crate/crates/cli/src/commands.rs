use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::thread;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::warn;
use serde::Deserialize;

use mmnl::diagnostics::geweke::{geweke_joint_test, GewekeConfig, SamplerKind, ToySpec};
use mmnl::diagnostics::{compare_chains, pg_selftest as run_selftest, SelfTestConfig};
use mmnl::io::{
    format_f64, load_chain, write_chain_csv, write_dataset_csv, DatasetMeta, RunConfigFile, RunReport, SamplerSection,
    TruthFile,
};
use mmnl::monitor::RunOutcome;
use mmnl::pg::PhiSchedule;
use mmnl::synth::{generate, preset, ScenarioSpec};

use crate::output::{suffixed, write_atomic, write_json};
use crate::Status;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn gen(
    preset_name: Option<&str>,
    spec_path: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    include_beta: bool,
) -> Result<Status> {
    let mut spec: ScenarioSpec = match (preset_name, spec_path) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => {
            serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing scenario {}", path.display()))?
        }
        _ => bail!("give exactly one of --preset and --spec"),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    let (data, truth) = generate(&spec)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_atomic(&out.join("dataset.csv"), |f| Ok(write_dataset_csv(&data, f)?))?;
    write_json(&out.join("truth.json"), &TruthFile::new(&truth, include_beta))?;
    write_json(&out.join("meta.json"), &DatasetMeta::new(&data, &spec, preset_name))?;
    println!(
        "wrote {} rows (N={}, T={}, J={}) to {}",
        data.n_decision_makers() * data.n_occasions() * data.n_alternatives(),
        data.n_decision_makers(),
        data.n_occasions(),
        data.n_alternatives(),
        out.display()
    );
    Ok(Status::Success)
}

/// Relative `dataset-path` and `output-dir` entries are resolved against the
/// directory holding the config file. Everything is validated and every
/// chain finishes before the first file is written.
pub fn fit(config_path: &Path, chains: u32) -> Result<Status> {
    let cfg = RunConfigFile::from_json(&read_text(config_path)?)
        .with_context(|| format!("invalid config {}", config_path.display()))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let data = cfg.dataset(base).context("loading dataset")?;
    let hyper = cfg.hyper_for(&data);
    hyper.validate(data.n_fixed(), data.n_random()).context("hyper-parameters do not fit the dataset")?;

    let first = match &cfg.sampler {
        SamplerSection::Mh(c) => c.chain,
        SamplerSection::Pg(c) => c.chain,
    };
    let sections: Vec<_> = (0..chains).map(|c| cfg.sampler.with_stream(cfg.sampler.seed(), first + c)).collect();
    let runs: Vec<Result<(RunOutcome, f64)>> = thread::scope(|scope| {
        let handles: Vec<_> = sections
            .iter()
            .map(|section| {
                let (data, hyper) = (&data, &hyper);
                scope.spawn(move || {
                    let start = Instant::now();
                    let outcome = section.run(data, hyper)?;
                    Ok((outcome, start.elapsed().as_secs_f64()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampler thread panicked")).collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let out_dir = base.join(&cfg.output_dir);
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut diverged = false;
    for ((outcome, elapsed), section) in runs.iter().zip(&sections) {
        let chain = outcome.chain();
        let suffix = (chains > 1).then_some(chain.meta.chain_index);
        let echo = serde_json::to_value(RunConfigFile { sampler: section.clone(), ..cfg.clone() })?;
        write_atomic(&suffixed(&out_dir, "chain", "csv", suffix), |f| Ok(write_chain_csv(chain, f)?))?;
        write_json(&suffixed(&out_dir, "report", "json", suffix), &RunReport::new(outcome, echo, *elapsed))?;
        let div_path = suffixed(&out_dir, "divergence", "json", suffix);
        match outcome.divergence() {
            Some(report) => {
                diverged = true;
                write_json(&div_path, report)?;
                println!(
                    "chain {}: diverged at iteration {} ({:?}); see {}",
                    chain.meta.chain_index,
                    report.iteration,
                    report.reason,
                    div_path.display()
                );
            }
            None => {
                // a stale file from an earlier run would contradict report.json
                if div_path.exists() {
                    fs::remove_file(&div_path)?;
                }
                println!("chain {}: {} draws stored in {:.1}s", chain.meta.chain_index, chain.len(), elapsed);
            }
        }
    }
    Ok(if diverged { Status::Diverged } else { Status::Success })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NameMap {
    Pairs(Vec<(String, String)>),
    Object(BTreeMap<String, String>),
}

pub fn compare(a: &Path, b: &Path, map_path: &Path, out: &Path) -> Result<Status> {
    let map: Vec<(String, String)> = match serde_json::from_str(&read_text(map_path)?)
        .with_context(|| format!("parsing name map {}", map_path.display()))?
    {
        NameMap::Pairs(p) => p,
        NameMap::Object(o) => o.into_iter().collect(),
    };
    let chain_a = load_chain(a).with_context(|| format!("reading {}", a.display()))?;
    let chain_b = load_chain(b).with_context(|| format!("reading {}", b.display()))?;
    let cmp = compare_chains(&chain_a, &chain_b, &map)?;
    write_atomic(out, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["name_a", "name_b", "mean_a", "mean_b", "mcse_a", "mcse_b", "z", "unmapped"])?;
        for (na, nb) in &map {
            match cmp.rows.iter().find(|r| &r.name_a == na && &r.name_b == nb) {
                Some(r) => w.write_record([
                    na.as_str(),
                    nb.as_str(),
                    &format_f64(r.mean_a),
                    &format_f64(r.mean_b),
                    &format_f64(r.mcse_a),
                    &format_f64(r.mcse_b),
                    &format_f64(r.z),
                    "false",
                ])?,
                None => w.write_record([na.as_str(), nb.as_str(), "", "", "", "", "", "true"])?,
            }
        }
        w.flush()?;
        Ok(())
    })?;
    if !cmp.unmapped.is_empty() {
        warn!("names not found in the chains: {}", cmp.unmapped.join(", "));
    }
    println!(
        "{} parameters compared, max |z| {:.2}, {} unmapped",
        cmp.rows.len(),
        cmp.max_abs_z(),
        map.len() - cmp.rows.len()
    );
    Ok(Status::Success)
}

pub fn geweke(
    sampler: SamplerKind,
    toy_path: &Path,
    outer: usize,
    seed: u64,
    phi_schedule: PhiSchedule,
    out: &Path,
) -> Result<Status> {
    let toy: ToySpec = serde_json::from_str(&read_text(toy_path)?)
        .with_context(|| format!("parsing toy spec {}", toy_path.display()))?;
    let cfg = GewekeConfig { phi_schedule, ..GewekeConfig::new(sampler, outer, seed) };
    let report = geweke_joint_test(&toy, &cfg)?;
    write_atomic(out, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["name", "mean_marginal", "mean_successive", "se_marginal", "se_successive", "z"])?;
        for r in &report.rows {
            w.write_record([
                r.name.as_str(),
                &format_f64(r.mean_marginal),
                &format_f64(r.mean_successive),
                &format_f64(r.se_marginal),
                &format_f64(r.se_successive),
                &format_f64(r.z),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!(
        "{} test functions, max |z| {:.2}: {}",
        report.rows.len(),
        report.max_abs_z(),
        if report.passed() { "pass" } else { "FAIL" }
    );
    Ok(if report.passed() { Status::Success } else { Status::ChecksFailed })
}

pub fn pg_selftest(seed: u64, out: &Path) -> Result<Status> {
    let start = Instant::now();
    let report = run_selftest(&SelfTestConfig { seed, ..SelfTestConfig::default() })?;
    write_json(out, &report)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        println!("FAIL {} {}: z {:.2} (limit {})", c.group, c.label, c.z, c.limit);
    }
    println!(
        "{}/{} checks passed in {:.1}s",
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(if report.passed { Status::Success } else { Status::ChecksFailed })
}
