use std::fs;
use std::path::Path;

use ergokit::{list_experiments, run_experiment, ExperimentConfig};
use serde_json::json;

fn small_rage(seed: u64) -> ExperimentConfig {
    ExperimentConfig::new("rage-decay", seed).with_parameters(json!({ "ns": [2, 10], "compact_max_n": 10 }))
}

fn csv_column(path: &Path, key_col: &str, key: &str, col: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').map(str::trim).collect();
    let k = header.iter().position(|h| *h == key_col).unwrap();
    let c = header.iter().position(|h| *h == col).unwrap();
    lines
        .map(|l| l.split(',').map(str::trim).collect::<Vec<_>>())
        .find(|f| f[k] == key)
        .map(|f| f[c].parse().unwrap())
        .unwrap()
}

#[test]
fn rage_decay_limit_for_ten_levels() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small_rage(7), Some(dir.path())).unwrap();
    assert!(report.passed);
    let limit = csv_column(&dir.path().join("cesaro.csv"), "n", "10", "limit");
    assert!((limit - 0.1).abs() <= 1e-12, "limit {limit}");
    assert!(report.check("cesaro_limit_n10").unwrap().passed);
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small_rage(11), Some(a.path())).unwrap();
    let rb = run_experiment(&small_rage(11), Some(b.path())).unwrap();
    assert_eq!(ra.config_hash, rb.config_hash);
    for file in ["cesaro.csv", "doubling.csv", "checks.csv"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn report_json_lists_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small_rage(3), Some(dir.path())).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let names: Vec<&str> = json["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), report.checks.len());
    let mut unique = names.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), names.len());
}

#[test]
fn registry_is_stable() {
    let names: Vec<_> = list_experiments().iter().map(|e| e.name).collect();
    assert_eq!(
        names,
        [
            "rage-decay",
            "chain-ergodic",
            "gibbs-gaussian",
            "kanai",
            "langevin-boltzmann",
            "spde-stationary",
            "galerkin-converge",
            "laplace-expansion"
        ]
    );
}

#[test]
fn kanai_defaults_pass() {
    let report = run_experiment(&ExperimentConfig::new("kanai", 1), None).unwrap();
    assert!(report.passed, "{:?}", report.failed().collect::<Vec<_>>());
    assert_eq!(report.checks.len(), 6);
}

#[test]
fn fuzz_config_seeds_decode() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fuzz/corpus/config");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let parsed = ExperimentConfig::from_json(&text);
        let name = path.file_name().unwrap().to_string_lossy();
        assert_eq!(parsed.is_ok(), name != "bad_version.json", "{name}");
    }
}
