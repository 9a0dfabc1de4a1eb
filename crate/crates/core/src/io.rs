//! File formats: dataset and chain CSV, run configuration and report JSON.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{summarize, Chain, ChainMeta, Monitors, Summary};
use crate::error::{Error, Result};
use crate::mh::MhConfig;
use crate::model::{ChoiceDataset, HyperParameters};
use crate::monitor::{DivergenceReport, RunOutcome};
use crate::pg::PgConfig;
use crate::synth::{generate, ScenarioSpec, TrueParams};

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_f64(s: &str, line: u64, column: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("line {line}, column {column}: cannot parse {s:?} as a number")))
}

fn parse_index(s: &str, line: u64, column: &str) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(Error::Format(format!("line {line}, column {column}: expected a 1-based index, got {s:?}"))),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let loc = e.position().map(|p| format!("line {}: ", p.line())).unwrap_or_default();
    Error::Format(format!("{loc}{e}"))
}

/// `n,t,alt,chosen,xf_1..xf_L,xr_1..xr_K`.
pub fn dataset_header(n_fixed: usize, n_random: usize) -> Vec<String> {
    let mut h: Vec<String> = ["n", "t", "alt", "chosen"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=n_fixed).map(|l| format!("xf_{l}")));
    h.extend((1..=n_random).map(|k| format!("xr_{k}")));
    h
}

/// One row per (n, t, alt), all indices 1-based, `chosen` in {0, 1}.
pub fn write_dataset_csv<W: Write>(data: &ChoiceDataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(dataset_header(data.n_fixed(), data.n_random())).map_err(csv_err)?;
    let mut rec = Vec::with_capacity(4 + data.n_fixed() + data.n_random());
    for n in 0..data.n_decision_makers() {
        for t in 0..data.n_occasions() {
            let y = data.choice(n, t);
            for j in 0..data.n_alternatives() {
                rec.clear();
                rec.push((n + 1).to_string());
                rec.push((t + 1).to_string());
                rec.push((j + 1).to_string());
                rec.push(u8::from(y == j).to_string());
                rec.extend(data.xf(n, t, j).iter().map(|&x| format_f64(x)));
                rec.extend(data.xr(n, t, j).iter().map(|&x| format_f64(x)));
                out.write_record(&rec).map_err(csv_err)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Parse a dataset CSV. Rows must be complete and ordered by (n, t, alt),
/// and every occasion must have exactly one chosen alternative.
pub fn read_dataset_csv<R: Read>(r: R) -> Result<ChoiceDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let n_fixed = header.iter().filter(|h| h.starts_with("xf_")).count();
    let n_random = header.iter().filter(|h| h.starts_with("xr_")).count();
    let expected = dataset_header(n_fixed, n_random);
    if header != expected {
        return Err(Error::Format(format!("line 1: header must be {:?}, got {header:?}", expected.join(","))));
    }
    let mut keys = Vec::new();
    let mut chosen = Vec::new();
    let mut xf = Vec::new();
    let mut xr = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let n = parse_index(&rec[0], line, "n")?;
        let t = parse_index(&rec[1], line, "t")?;
        let j = parse_index(&rec[2], line, "alt")?;
        let c = match rec[3].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Format(format!("line {line}, column chosen: expected 0 or 1, got {other:?}"))),
        };
        keys.push((n, t, j, line));
        chosen.push(c);
        for (i, h) in header.iter().enumerate().skip(4) {
            let v = parse_f64(&rec[i], line, h)?;
            if i < 4 + n_fixed {
                xf.push(v);
            } else {
                xr.push(v);
            }
        }
    }
    if keys.is_empty() {
        return Err(Error::Format("dataset has no rows".into()));
    }
    let n_dm = keys.iter().map(|k| k.0).max().unwrap_or(0);
    let n_occ = keys.iter().map(|k| k.1).max().unwrap_or(0);
    let n_alt = keys.iter().map(|k| k.2).max().unwrap_or(0);
    if keys.len() != n_dm * n_occ * n_alt {
        return Err(Error::Format(format!(
            "expected {n_dm}·{n_occ}·{n_alt} = {} rows, found {}",
            n_dm * n_occ * n_alt,
            keys.len()
        )));
    }
    let mut choices = Vec::with_capacity(n_dm * n_occ);
    for (r, &(n, t, j, line)) in keys.iter().enumerate() {
        let want = (r / (n_occ * n_alt) + 1, (r / n_alt) % n_occ + 1, r % n_alt + 1);
        if (n, t, j) != want {
            return Err(Error::Format(format!(
                "line {line}: expected row (n, t, alt) = {want:?}, found ({n}, {t}, {j})"
            )));
        }
        if j == n_alt {
            let block = &chosen[r + 1 - n_alt..=r];
            let picked: Vec<usize> = block.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect();
            if picked.len() != 1 {
                return Err(Error::Format(format!(
                    "line {line}: occasion (n={n}, t={t}) has {} chosen alternatives",
                    picked.len()
                )));
            }
            choices.push(picked[0]);
        }
    }
    ChoiceDataset::new(n_dm, n_occ, n_alt, n_fixed, n_random, xf, xr, choices)
}

/// `iter,<names>`, one row per stored draw, iterations 1-based.
pub fn write_chain_csv<W: Write>(chain: &Chain, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["iter".to_string()];
    header.extend(chain.names().iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    let mut rec = Vec::with_capacity(header.len());
    for (it, draw) in chain.iterations().iter().zip(chain.draws()) {
        rec.clear();
        rec.push((it + 1).to_string());
        rec.extend(draw.iter().map(|&x| format_f64(x)));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Read a chain CSV. The metadata of the returned chain is empty.
pub fn read_chain_csv<R: Read>(r: R) -> Result<Chain> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("iter") {
        return Err(Error::Format("line 1: first column must be `iter`".into()));
    }
    let meta = ChainMeta {
        sampler: String::new(),
        seed: 0,
        chain_index: 0,
        config: serde_json::Value::Null,
        dataset_digest: String::new(),
    };
    let mut chain = Chain::new(header[1..].to_vec(), meta)?;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let it = parse_index(&rec[0], line, "iter")?;
        let values =
            header[1..].iter().enumerate().map(|(i, h)| parse_f64(&rec[i + 1], line, h)).collect::<Result<Vec<_>>>()?;
        chain.push(it - 1, values).map_err(|e| Error::Format(format!("line {line}: {e}")))?;
    }
    Ok(chain)
}

pub fn save_dataset(data: &ChoiceDataset, path: &Path) -> Result<()> {
    write_dataset_csv(data, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: &Path) -> Result<ChoiceDataset> {
    read_dataset_csv(BufReader::new(File::open(path)?))
}

pub fn save_chain(chain: &Chain, path: &Path) -> Result<()> {
    write_chain_csv(chain, BufWriter::new(File::create(path)?))
}

pub fn load_chain(path: &Path) -> Result<Chain> {
    read_chain_csv(BufReader::new(File::open(path)?))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Contents of `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TruthFile {
    pub spec: ScenarioSpec,
    /// True values under the chain naming scheme.
    pub values: Vec<(String, f64)>,
    /// Individual coefficients, present when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<f64>>>,
}

impl TruthFile {
    pub fn new(truth: &TrueParams, include_beta: bool) -> Self {
        Self { spec: truth.spec.clone(), values: truth.named_values(), beta: include_beta.then(|| truth.beta.clone()) }
    }
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DatasetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    pub rows: usize,
    pub n: usize,
    pub t: usize,
    pub j: usize,
    pub l: usize,
    pub k: usize,
    pub dataset_digest: String,
    pub version: String,
}

impl DatasetMeta {
    pub fn new(data: &ChoiceDataset, spec: &ScenarioSpec, preset: Option<&str>) -> Self {
        Self {
            preset: preset.map(str::to_string),
            seed: spec.seed,
            rows: data.n_decision_makers() * data.n_occasions() * data.n_alternatives(),
            n: data.n_decision_makers(),
            t: data.n_occasions(),
            j: data.n_alternatives(),
            l: data.n_fixed(),
            k: data.n_random(),
            dataset_digest: crate::diagnostics::dataset_digest(data),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// The `sampler` section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerSection {
    Mh(MhConfig),
    Pg(PgConfig),
}

impl SamplerSection {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerSection::Mh(_) => "mh",
            SamplerSection::Pg(_) => "pg",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SamplerSection::Mh(c) => c.seed,
            SamplerSection::Pg(c) => c.seed,
        }
    }

    /// Copy with the seed and chain index replaced.
    pub fn with_stream(&self, seed: u64, chain: u32) -> Self {
        match self {
            SamplerSection::Mh(c) => SamplerSection::Mh(MhConfig { seed, chain, ..c.clone() }),
            SamplerSection::Pg(c) => SamplerSection::Pg(PgConfig { seed, chain, ..c.clone() }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerSection::Mh(c) => c.validate(),
            SamplerSection::Pg(c) => c.validate(),
        }
    }

    pub fn run(&self, data: &ChoiceDataset, hyper: &HyperParameters) -> Result<RunOutcome> {
        match self {
            SamplerSection::Mh(c) => crate::mh::run_mh(data, hyper, c),
            SamplerSection::Pg(c) => crate::pg::run_pg(data, hyper, c),
        }
    }
}

/// A `fit` run: the data source, priors, sampler and where to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<PathBuf>,
    /// Defaults to [`HyperParameters::weakly_informative`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<HyperParameters>,
    pub sampler: SamplerSection,
    pub output_dir: PathBuf,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        match (&self.scenario, &self.dataset_path) {
            (Some(s), None) => s.validate(),
            (None, Some(_)) => Ok(()),
            _ => Err(Error::InvalidInput("exactly one of `scenario` and `dataset-path` must be given".into())),
        }
    }

    /// Load or simulate the dataset. Relative dataset paths are resolved
    /// against `base`.
    pub fn dataset(&self, base: &Path) -> Result<ChoiceDataset> {
        match (&self.scenario, &self.dataset_path) {
            (Some(spec), None) => Ok(generate(spec)?.0),
            (None, Some(p)) => load_dataset(&base.join(p)),
            _ => Err(Error::InvalidInput("exactly one of `scenario` and `dataset-path` must be given".into())),
        }
    }

    pub fn hyper_for(&self, data: &ChoiceDataset) -> HyperParameters {
        self.hyper.clone().unwrap_or_else(|| HyperParameters::weakly_informative(data.n_fixed(), data.n_random()))
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunReport {
    pub sampler: String,
    pub seed: u64,
    pub chain_index: u32,
    pub dataset_digest: String,
    pub config: serde_json::Value,
    pub outcome: String,
    pub elapsed_seconds: f64,
    pub n_draws: usize,
    /// Absent when too few draws were stored to summarize.
    pub summary: Option<Summary>,
    pub divergence: Option<DivergenceReport>,
    pub monitors: Monitors,
}

impl RunReport {
    pub fn new(outcome: &RunOutcome, config: serde_json::Value, elapsed_seconds: f64) -> Self {
        let chain = outcome.chain();
        Self {
            sampler: chain.meta.sampler.clone(),
            seed: chain.meta.seed,
            chain_index: chain.meta.chain_index,
            dataset_digest: chain.meta.dataset_digest.clone(),
            config,
            outcome: if outcome.is_diverged() { "diverged" } else { "completed" }.into(),
            elapsed_seconds,
            n_draws: chain.len(),
            summary: summarize(chain).ok(),
            divergence: outcome.divergence().cloned(),
            monitors: chain.monitors.clone(),
        }
    }
}
