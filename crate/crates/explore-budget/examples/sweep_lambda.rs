//! Sensitivity sweep over the modulation strength lambda (lambda = 0 is the
//! schedule-only configuration).
//!
//! ```bash
//! cargo run --example sweep_lambda
//! ```

use explore_budget::config::RunConfig;
use explore_budget::harness::{cmd_sweep, SweepSpec};

fn main() {
    let mut base = RunConfig::corridor_default();
    base.label = "lambda-demo".into();
    base.seeds = vec![0, 1, 2]; // short demonstration
    base.trainer.total_iterations = 300;

    let spec = SweepSpec {
        parameter: "rsq.lambda".into(),
        values: ["0", "0.5", "1", "2", "3"].map(String::from).to_vec(),
    };
    let out = std::env::temp_dir().join("explore-budget-sweep-demo");
    let artifacts = cmd_sweep(&base, &spec, &out).unwrap();

    println!("{:>8} {:>10} {:>10}", "lambda", "mean", "std");
    for cell in &artifacts.cells {
        println!(
            "{:>8} {:>10.3} {:>10.3}",
            cell.value,
            cell.mean.unwrap_or(f64::NAN),
            cell.std.unwrap_or(f64::NAN)
        );
    }
    println!("\nper-value run directories and sweep.csv: {}", artifacts.sweep_dir.display());
}
