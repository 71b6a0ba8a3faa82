use std::fs;
use std::process::Command;

fn ergokit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergokit"))
}

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn list_shows_eight_experiments() {
    let out = ergokit().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.trim().is_empty()).count(), 8, "{text}");
}

#[test]
fn unknown_experiment_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"experiment":"nope","seed":1}"#);
    let out = ergokit().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_seed_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"experiment":"kanai"}"#);
    let out = ergokit().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_are_usage_error() {
    let out = ergokit().args(["run", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_accepts_checked_in_configs() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = ergokit().args(["validate", "--config"]).arg(&path).output().unwrap();
            assert!(out.status.success(), "{}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, 8);
}

#[test]
fn run_writes_report_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version":1,"experiment":"rage-decay","seed":5,"parameters":{"ns":[2,10]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = ergokit()
        .args(["run", "--seed", "9", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .env("ERGOKIT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    assert!(out_dir.join("cesaro.csv").exists());
}

#[test]
fn bad_thread_cap_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"experiment":"kanai","seed":1}"#);
    let out = ergokit().args(["run", "--config"]).arg(&cfg).env("ERGOKIT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    // a one-step horizon cannot meet the 5% finite-time tolerance
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version":1,"experiment":"rage-decay","seed":5,"parameters":{"ns":[10],"horizon_gaps":0.01}}"#,
    );
    let out = ergokit().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}
