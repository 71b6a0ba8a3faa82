//! Experiment registry and runner behind the `ergokit` binary.
//!
//! Each experiment reads its typed parameters from the configuration,
//! records named checks and CSV artifacts, and is deterministic given the
//! seed: parallel sweeps collect their results in index order.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use report::{Check, Recorder, RunReport};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "ERGOKIT_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("unknown experiment '{0}' (see `ergokit list`)")]
    UnknownExperiment(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: ergokit_core::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::UnknownExperiment(_) => 2,
            HarnessError::Numerical { .. } | HarnessError::Io { .. } => 1,
        }
    }
}

/// Attach context to a core error.
pub(crate) trait Context<T> {
    fn context(self, what: &str) -> Result<T, HarnessError>;
}

impl<T> Context<T> for ergokit_core::Result<T> {
    fn context(self, what: &str) -> Result<T, HarnessError> {
        self.map_err(|source| {
            // validation failures of user-supplied parameters are config errors
            if let ergokit_core::Error::Validation(msg) = &source {
                return HarnessError::Config(format!("{what}: {msg}"));
            }
            HarnessError::Numerical {
                context: what.to_string(),
                source,
            }
        })
    }
}

/// One registered experiment.
pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub(crate) validate: fn(&ExperimentConfig) -> Result<(), HarnessError>,
    pub(crate) run: fn(&ExperimentConfig, &mut Recorder) -> Result<(), HarnessError>,
}

/// All experiments in stable order.
pub fn list_experiments() -> &'static [Experiment] {
    experiments::REGISTRY
}

pub fn find_experiment(name: &str) -> Result<&'static Experiment, HarnessError> {
    list_experiments()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| HarnessError::UnknownExperiment(name.to_string()))
}

/// Checks the experiment name and decodes its parameters without running.
pub fn validate_config(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    (find_experiment(&cfg.experiment)?.validate)(cfg)
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HarnessError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

/// Runs the configured experiment and, when an output directory is given
/// (argument first, then the config's `output_dir`), writes the CSV
/// artifacts, `checks.csv` and `report.json` there.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunReport, HarnessError> {
    let exp = find_experiment(&cfg.experiment)?;
    (exp.validate)(cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;

    let start = Instant::now();
    let mut rec = Recorder::default();
    pool.install(|| (exp.run)(cfg, &mut rec))?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let dir = out_dir.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone());
    let mut report = RunReport {
        experiment: cfg.experiment.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        wall_time_s,
        passed: rec.checks.iter().all(|c| c.passed),
        checks: rec.checks.clone(),
        artifacts: Vec::new(),
    };
    if let Some(dir) = dir {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| HarnessError::Io { path, source }
        };
        report.artifacts = rec.write(&dir).map_err(io(&dir))?;
        let json = dir.join("report.json");
        report.artifacts.push(json.clone());
        let text = serde_json::to_string_pretty(&report).expect("report serialises");
        std::fs::write(&json, text + "\n").map_err(io(&json))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_stable_and_unique() {
        let names: Vec<_> = list_experiments().iter().map(|e| e.name).collect();
        assert_eq!(names.len(), 8);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
        assert!(list_experiments().iter().all(|e| !e.description.is_empty()));
    }

    #[test]
    fn unknown_experiment_is_usage_error() {
        let cfg = ExperimentConfig::new("no-such-thing", 1);
        let e = run_experiment(&cfg, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn every_default_config_validates() {
        for e in list_experiments() {
            validate_config(&ExperimentConfig::new(e.name, 0)).unwrap();
        }
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        for e in list_experiments() {
            let cfg = ExperimentConfig::new(e.name, 0).with_parameters(serde_json::json!({"bogus": 1}));
            assert!(matches!(validate_config(&cfg), Err(HarnessError::Config(_))), "{}", e.name);
        }
    }
}
