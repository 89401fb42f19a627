//! Thin command-line front end over the library harness.
//!
//! Exit codes: 0 on success, 1 on runtime or check failure, 2 on
//! configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use explore_budget::checks::CheckOutcome;
use explore_budget::config::RunConfig;
use explore_budget::harness::{
    cmd_ablate, cmd_check, cmd_run, cmd_sweep, cmd_verify, resolve_output_root, SweepSpec,
};
use explore_budget::Error;

#[derive(Parser)]
#[command(
    name = "explore-budget",
    version,
    about = "Quality-aware exploration budget allocation for cooperative multi-agent RL"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured environment for every seed.
    Run {
        /// Path to the run configuration (TOML).
        config: PathBuf,
        /// Override a config key, e.g. --set rcb.kappa=0.5 (repeatable).
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
        /// Output root; overrides $EXPLORE_BUDGET_OUT and config output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the base config once per value of one swept parameter.
    Sweep {
        config: PathBuf,
        /// Dotted config path to sweep, e.g. rsq.lambda.
        #[arg(long)]
        param: String,
        /// Comma-separated TOML literals, one run per value.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the fixed six-cell ablation matrix on the base config.
    Ablate {
        config: PathBuf,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerically verify the schedule convergence guarantees.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fast property checks (allocation, quality metric, distances).
    Check,
}

fn load_config(path: &PathBuf, overrides: &[String]) -> Result<RunConfig, Error> {
    let mut config = RunConfig::from_file(path)?;
    for assignment in overrides {
        config.apply_override(assignment)?;
    }
    Ok(config)
}

fn print_outcomes(outcomes: &[CheckOutcome]) -> bool {
    let mut all_passed = true;
    for outcome in outcomes {
        let status = if outcome.passed { "pass" } else { "FAIL" };
        println!("{status}  {:<26} {}", outcome.name, outcome.detail);
        all_passed &= outcome.passed;
    }
    all_passed
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, set, out } => {
            let config = load_config(&config, &set)?;
            let root = resolve_output_root(out.as_deref(), &config);
            let artifacts = cmd_run(&config, &root)?;
            for (seed, value) in &artifacts.per_seed {
                match value {
                    Some(v) => println!("seed {seed}: final return {v:.4}"),
                    None => println!("seed {seed}: no completed episodes"),
                }
            }
            println!(
                "{} seeds: mean {:.4} +/- {:.4}  ({})",
                artifacts.per_seed.len(),
                artifacts.mean,
                artifacts.std,
                artifacts.run_dir.display()
            );
            Ok(true)
        }
        Command::Sweep {
            config,
            param,
            values,
            set,
            out,
        } => {
            let config = load_config(&config, &set)?;
            let root = resolve_output_root(out.as_deref(), &config);
            let spec = SweepSpec {
                parameter: param,
                values,
            };
            let artifacts = cmd_sweep(&config, &spec, &root)?;
            println!("{:<14} {:>12} {:>12}", "value", "mean", "std");
            let mut ok = true;
            for cell in &artifacts.cells {
                match (cell.mean, cell.std, &cell.error) {
                    (Some(mean), Some(std), _) => {
                        println!("{:<14} {mean:>12.4} {std:>12.4}", cell.value)
                    }
                    (_, _, Some(error)) => {
                        ok = false;
                        println!("{:<14} failed: {error}", cell.value);
                    }
                    _ => unreachable!(),
                }
            }
            println!("sweep written to {}", artifacts.sweep_dir.display());
            Ok(ok)
        }
        Command::Ablate { config, set, out } => {
            let config = load_config(&config, &set)?;
            let root = resolve_output_root(out.as_deref(), &config);
            let artifacts = cmd_ablate(&config, &root)?;
            println!("{:<14} {:>12} {:>12}", "cell", "mean", "std");
            let mut ok = true;
            for cell in &artifacts.cells {
                match (cell.mean, cell.std, &cell.error) {
                    (Some(mean), Some(std), _) => {
                        println!("{:<14} {mean:>12.4} {std:>12.4}", cell.cell.name())
                    }
                    (_, _, Some(error)) => {
                        ok = false;
                        println!("{:<14} failed: {error}", cell.cell.name());
                    }
                    _ => unreachable!(),
                }
            }
            println!("ablation written to {}", artifacts.ablation_dir.display());
            Ok(ok)
        }
        Command::Verify { out } => {
            let root = out.unwrap_or_else(|| {
                std::env::var(explore_budget::harness::OUTPUT_ROOT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|_| PathBuf::from("runs"))
            });
            let outcomes = cmd_verify(&root)?;
            Ok(print_outcomes(&outcomes))
        }
        Command::Check => Ok(print_outcomes(&cmd_check())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
