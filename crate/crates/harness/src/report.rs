//! Checks, artifacts and the run report.

use std::path::{Path, PathBuf};

use ergokit_core::io::Csv;
use ergokit_core::EstimateWithError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity the check thresholds.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Collects checks and CSV artifacts while an experiment runs.
#[derive(Debug, Default)]
pub struct Recorder {
    pub(crate) checks: Vec<Check>,
    pub(crate) artifacts: Vec<(String, Csv)>,
}

impl Recorder {
    /// `measured ≤ threshold`.
    pub fn at_most(&mut self, name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) {
        self.push(name, measured <= threshold, measured, threshold, detail);
    }

    /// `lo ≤ measured ≤ hi`; the recorded threshold is the nearer bound.
    pub fn within(&mut self, name: impl Into<String>, measured: f64, lo: f64, hi: f64, detail: impl Into<String>) {
        let passed = (lo..=hi).contains(&measured);
        let threshold = if (measured - lo).abs() < (measured - hi).abs() { lo } else { hi };
        let detail = format!("range [{lo}, {hi}]; {}", detail.into());
        self.push(name, passed, measured, threshold, detail);
    }

    /// `|z| ≤ k` for two estimates with combined standard error.
    pub fn agree(&mut self, name: impl Into<String>, a: &EstimateWithError, b: &EstimateWithError, k: f64) {
        let z = a.z_score(b);
        let detail = format!(
            "{} ± {} vs {} ± {}",
            a.mean, a.stderr, b.mean, b.stderr
        );
        self.push(name, z <= k, z, k, detail);
    }

    pub fn flag(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.push(name, passed, if passed { 1.0 } else { 0.0 }, 1.0, detail);
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, measured: f64, threshold: f64, detail: impl Into<String>) {
        let name = name.into();
        debug_assert!(self.checks.iter().all(|c| c.name != name), "duplicate check {name}");
        self.checks.push(Check {
            name,
            passed: passed && !measured.is_nan(),
            measured,
            threshold,
            detail: detail.into(),
        });
    }

    pub fn artifact(&mut self, file_name: &str, csv: Csv) {
        self.artifacts.push((file_name.to_string(), csv));
    }

    /// The check table as a CSV artifact.
    pub(crate) fn checks_csv(&self) -> Csv {
        let mut c = Csv::new(&["name", "passed", "measured", "threshold"]);
        for ch in &self.checks {
            c.row(&[ch.name.as_str().into(), ch.passed.into(), ch.measured.into(), ch.threshold.into()]);
        }
        c
    }

    pub(crate) fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for (name, csv) in self.artifacts.iter().map(|(n, c)| (n.as_str(), c)) {
            let p = dir.join(name);
            csv.write(&p)?;
            out.push(p);
        }
        let p = dir.join("checks.csv");
        self.checks_csv().write(&p)?;
        out.push(p);
        Ok(out)
    }
}
