//! Batch runner: configuration, deterministic trial seeds, a parallel work
//! queue and atomic CSV + JSON output.
//!
//! Trial `i` of a run with master seed `m` uses `derive_seed(m, i)`, and
//! results are gathered in trial order, so the CSV body is a function of
//! the configuration alone.

mod config;
mod kinds;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use config::{
    list_experiments, CatalogEntry, ConfigError, ContinuityParams, DetourParams, ExperimentConfig, ExperimentKind,
    FieldCheckParams, FieldLaw, FluctuationParams, GridBlock, HomogErrorParams, Params, PercolationTailParams,
    RearrangeParams, ShapeParams, SkeletonGapParams, UnicoherenceParams,
};
pub use kinds::{direction_grid, same_cluster_pair};

use crate::seed::derive_seed;

/// Environment variable naming the output directory.
pub const OUT_ENV: &str = "GHOMOG_OUT";

pub fn output_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("ghomog-out"), PathBuf::from)
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("run failed: {0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 1 for configuration errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// One CSV record. Aggregate rows leave `trial` and `seed` empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub measurement: String,
    pub key: String,
    pub value: f64,
}

impl Row {
    pub fn trial(trial: usize, seed: u64, measurement: &str, key: &str, value: f64) -> Self {
        Row {
            trial: Some(trial),
            seed: Some(seed),
            measurement: measurement.into(),
            key: key.into(),
            value,
        }
    }

    pub fn aggregate(measurement: &str, key: &str, value: f64) -> Self {
        Row {
            trial: None,
            seed: None,
            measurement: measurement.into(),
            key: key.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(skip)]
    pub rows: Vec<Row>,
    /// Wall time of the trial when the harness ran it directly.
    pub elapsed_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub h: f64,
    pub dt: f64,
    pub stencil: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialError {
    pub trial: Option<usize>,
    pub seed: u64,
    pub error: String,
}

/// Contents of the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kind: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub trials_requested: usize,
    pub trials_completed: usize,
    /// Fewer trials completed than requested.
    pub partial: bool,
    pub budget_secs: Option<f64>,
    pub budget_exceeded: bool,
    pub elapsed_secs: f64,
    pub tolerances: Tolerances,
    pub csv: Option<String>,
    pub config: String,
    pub summary: Value,
    pub failures: Vec<TrialError>,
    pub records: Vec<RunRecord>,
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub rows: Vec<Row>,
}

impl RunOutput {
    pub fn csv(&self) -> Vec<u8> {
        csv_bytes(&self.rows)
    }
}

pub fn csv_bytes(rows: &[Row]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["trial", "seed", "measurement", "key", "value"]).expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Run trials `0..trials` in chunks, stopping between chunks once the
/// deadline has passed.
pub(crate) fn drive<F>(cfg: &ExperimentConfig, deadline: Option<Instant>, job: F) -> Vec<RunRecord>
where
    F: Fn(usize, u64) -> Result<Vec<Row>, String> + Sync,
{
    let chunk = (4 * rayon::current_num_threads()).max(16);
    let mut out = Vec::with_capacity(cfg.trials);
    let mut start = 0;
    while start < cfg.trials {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let end = (start + chunk).min(cfg.trials);
        let batch: Vec<RunRecord> = (start..end)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(cfg.seed, i as u64);
                let t0 = Instant::now();
                let res = job(i, seed);
                let elapsed_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
                match res {
                    Ok(rows) => RunRecord {
                        trial: i,
                        seed,
                        rows,
                        elapsed_ms,
                        error: None,
                    },
                    Err(e) => RunRecord {
                        trial: i,
                        seed,
                        rows: vec![Row::trial(i, seed, "failed", "", 1.0)],
                        elapsed_ms,
                        error: Some(e),
                    },
                }
            })
            .collect();
        out.extend(batch);
        start = end;
    }
    out
}

/// Run an experiment in memory on a pool of `cfg.workers` threads.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder.build().map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let t0 = Instant::now();
    let deadline = cfg.budget_secs.map(|b| t0 + std::time::Duration::from_secs_f64(b));
    let out = pool.install(|| kinds::execute(cfg, deadline))?;
    let elapsed = t0.elapsed().as_secs_f64();
    let mut rows: Vec<Row> = out.records.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    rows.extend(out.aggregate);
    let expected = match cfg.kind {
        ExperimentKind::SkeletonGap => 1,
        _ => cfg.trials,
    };
    let summary = RunSummary {
        kind: cfg.kind.name(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        workers: pool.current_num_threads(),
        trials_requested: expected,
        trials_completed: out.completed,
        partial: out.completed < expected,
        budget_secs: cfg.budget_secs,
        budget_exceeded: cfg.budget_secs.is_some_and(|b| elapsed > b),
        elapsed_secs: elapsed,
        tolerances: Tolerances {
            h: cfg.grid.h,
            dt: cfg.grid.dt,
            stencil: cfg.grid.stencil,
        },
        csv: None,
        config: cfg.to_toml(),
        summary: out.summary,
        failures: out
            .failures
            .into_iter()
            .map(|(trial, seed, error)| TrialError { trial, seed, error })
            .collect(),
        records: out.records,
    };
    Ok(RunOutput { summary, rows })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Run an experiment and write `<kind>-<hash>.csv`, then the matching
/// `.json` summary, into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, HarnessError> {
    let mut out = execute(cfg)?;
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let stem = format!("{}-{}", cfg.kind.name(), &out.summary.config_hash[..12]);
    let csv_name = format!("{stem}.csv");
    write_atomic(&dir.join(&csv_name), &out.csv())?;
    out.summary.csv = Some(csv_name);
    let json = serde_json::to_vec_pretty(&out.summary).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    write_atomic(&dir.join(format!("{stem}.json")), &json)?;
    Ok(out.summary)
}

/// Validation report: the normalized configuration on success.
pub fn validate(text: &str) -> Result<String, ConfigError> {
    ExperimentConfig::from_toml(text).map(|c| c.to_toml())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_check_passes() {
        let cfg = ExperimentConfig::from_toml("kind = \"field-check\"\ntrials = 2\n[field]\namplitude = 0.0\n").unwrap();
        let out = execute(&cfg).unwrap();
        assert_eq!(out.summary.summary["passed"], Value::Bool(true));
        assert_eq!(out.summary.summary["violations"], 0.0);
    }

    #[test]
    fn chunks_do_not_change_results() {
        let text = "kind = \"rearrange\"\ntrials = 40\nseed = 3\nworkers = 1\n";
        let a = execute(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
        let b = execute(&ExperimentConfig::from_toml(&text.replace("workers = 1", "workers = 2")).unwrap()).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.summary.summary["compliance"], 1.0);
    }

    #[test]
    fn exhausted_budget_is_flagged() {
        let cfg = ExperimentConfig::from_toml("kind = \"unicoherence\"\ntrials = 100000\nbudget_secs = 0.05\n").unwrap();
        let out = execute(&cfg).unwrap();
        assert!(out.summary.partial);
        assert!(out.summary.trials_completed < 100000);
    }
}
