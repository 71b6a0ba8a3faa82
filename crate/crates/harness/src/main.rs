use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergokit::{list_experiments, run_experiment, validate_config, ExperimentConfig, HarnessError};

#[derive(Debug, Parser)]
#[command(name = "ergokit", version, about = "Run and check ergodic-average experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory in the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::List => {
            let width = list_experiments().iter().map(|e| e.name.len()).max().unwrap_or(0);
            for e in list_experiments() {
                println!("{:width$}  {}", e.name, e.description);
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            validate_config(&cfg)?;
            println!("{}: ok ({})", config.display(), cfg.experiment);
            Ok(0)
        }
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_experiment(&cfg, out.as_deref())?;
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {:40} {:>14.6e}  (threshold {:e})  {}", c.name, c.measured, c.threshold, c.detail);
            }
            let failed = report.failed().count();
            println!(
                "{}: {} checks, {failed} failed, {:.1} s",
                report.experiment,
                report.checks.len(),
                report.wall_time_s
            );
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // --help and --version are not errors
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
