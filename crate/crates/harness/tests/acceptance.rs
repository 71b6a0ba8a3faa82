//! Runs every experiment at its default configuration twice and reports one
//! PASS/FAIL line per acceptance criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use ergokit::{list_experiments, run_experiment, Check, ExperimentConfig, RunReport};

const SEED: u64 = 20261018;
const SECONDS: Duration = Duration::from_secs(60);
const MINUTES: Duration = Duration::from_secs(15 * 60);

struct Criterion {
    id: u32,
    title: &'static str,
    experiment: &'static str,
    select: fn(&str) -> bool,
    budget: Duration,
}

fn rage(name: &str) -> bool {
    name.starts_with("cesaro_") || name.starts_with("compact_")
}

fn symplectic(name: &str) -> bool {
    matches!(name, "energy_drift_halving" | "reversibility" | "liouville_jacobian")
}

fn gaussian(name: &str) -> bool {
    name.starts_with("coercivity") || name.starts_with("covariance")
}

fn quartic(name: &str) -> bool {
    name.starts_with("quartic_")
}

fn all(_: &str) -> bool {
    true
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "RAGE decay law", experiment: "rage-decay", select: rage, budget: Duration::from_secs(10) },
    Criterion {
        id: 2,
        title: "mean-ergodic and semigroup limits",
        experiment: "rage-decay",
        select: |n| !rage(n),
        budget: Duration::from_secs(10),
    },
    Criterion {
        id: 3,
        title: "chain stationarity",
        experiment: "chain-ergodic",
        select: |n| n.starts_with("stationarity_"),
        budget: MINUTES,
    },
    Criterion { id: 4, title: "symplectic integrity", experiment: "chain-ergodic", select: symplectic, budget: SECONDS },
    Criterion { id: 5, title: "Kanai correspondence", experiment: "kanai", select: all, budget: SECONDS },
    Criterion { id: 6, title: "Gaussian measure exactness", experiment: "gibbs-gaussian", select: gaussian, budget: SECONDS },
    Criterion { id: 7, title: "quadrature oracle agreement", experiment: "gibbs-gaussian", select: quartic, budget: SECONDS },
    Criterion { id: 8, title: "Langevin Boltzmann law", experiment: "langevin-boltzmann", select: all, budget: MINUTES },
    Criterion { id: 9, title: "SPDE stationary law", experiment: "spde-stationary", select: all, budget: MINUTES },
    Criterion { id: 10, title: "Laplace expansion", experiment: "laplace-expansion", select: all, budget: MINUTES },
    Criterion {
        id: 11,
        title: "Galerkin convergence and bounds",
        experiment: "galerkin-converge",
        select: |n| n != "cross_solver_agreement",
        budget: MINUTES,
    },
    Criterion {
        id: 12,
        title: "cross-solver consistency",
        experiment: "galerkin-converge",
        select: |n| n == "cross_solver_agreement",
        budget: Duration::from_secs(300),
    },
];

/// Gibbs-measure invariants that belong to no numbered criterion.
fn supplementary(name: &str) -> bool {
    !gaussian(name) && !quartic(name)
}

struct Run {
    report: RunReport,
    dir: tempfile::TempDir,
}

fn run(name: &str) -> Run {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = ExperimentConfig::new(name, SEED);
    let report = run_experiment(&cfg, Some(dir.path())).unwrap_or_else(|e| panic!("{name}: {e}"));
    Run { report, dir }
}

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut count = 0;
    for entry in fs::read_dir(a).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let file = path.file_name().unwrap();
        // report.json carries wall time
        if file == "report.json" {
            continue;
        }
        let x = fs::read(&path).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(file)).map_err(|e| format!("{}: {e}", file.to_string_lossy()))?;
        if x != y {
            return Err(format!("{} differs", file.to_string_lossy()));
        }
        count += 1;
    }
    Ok(count)
}

fn line(passed: bool, label: &str, detail: &str) {
    println!("{}  {label:<48} {detail}", if passed { "PASS" } else { "FAIL" });
}

fn summarize(checks: &[&Check], wall: f64, budget: Duration) -> (bool, String) {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let in_time = wall < budget.as_secs_f64();
    let mut detail = format!("{}/{} checks, {wall:.1} s (limit {} s)", checks.len() - failed.len(), checks.len(), budget.as_secs());
    if !failed.is_empty() {
        detail.push_str(&format!("; failed: {}", failed.join(", ")));
    }
    (!checks.is_empty() && failed.is_empty() && in_time, detail)
}

fn main() {
    let mut first = BTreeMap::new();
    let mut second = BTreeMap::new();
    for e in list_experiments() {
        first.insert(e.name, run(e.name));
        second.insert(e.name, run(e.name));
    }

    let mut all_passed = true;
    for c in CRITERIA {
        let r = &first[c.experiment].report;
        let checks: Vec<&Check> = r.checks.iter().filter(|k| (c.select)(&k.name)).collect();
        let (ok, detail) = summarize(&checks, r.wall_time_s, c.budget);
        line(ok, &format!("criterion {:>2}: {}", c.id, c.title), &detail);
        all_passed &= ok;
    }

    let gibbs = &first["gibbs-gaussian"].report;
    let extra: Vec<&Check> = gibbs.checks.iter().filter(|k| supplementary(&k.name)).collect();
    let (ok, detail) = summarize(&extra, gibbs.wall_time_s, SECONDS);
    line(ok, "supplementary: Gibbs measure invariants", &detail);
    all_passed &= ok;

    let mut problems = Vec::new();
    let mut files = 0;
    for (name, a) in &first {
        match same_files(a.dir.path(), second[name].dir.path()) {
            Ok(n) => files += n,
            Err(e) => problems.push(format!("{name}: {e}")),
        }
        let b = &second[name].report;
        if a.report.checks.len() != b.checks.len() || a.report.config_hash != b.config_hash {
            problems.push(format!("{name}: reports differ"));
        }
    }
    let ok = problems.is_empty();
    let detail =
        if ok { format!("{files} artifacts byte-identical across two runs") } else { problems.join("; ") };
    line(ok, "criterion 13: determinism", &detail);
    all_passed &= ok;

    if !all_passed {
        std::process::exit(1);
    }
}
