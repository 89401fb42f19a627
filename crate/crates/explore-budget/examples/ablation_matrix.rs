//! The six-cell ablation matrix on the corridor: the full framework against
//! schedule-only, modulation-only, fixed-intensity, exact water filling, and
//! the uniform-noise intrinsic source.
//!
//! ```bash
//! cargo run --example ablation_matrix
//! ```

use explore_budget::config::RunConfig;
use explore_budget::harness::cmd_ablate;

fn main() {
    let mut base = RunConfig::corridor_default();
    base.label = "ablation-demo".into();
    base.seeds = vec![0, 1, 2]; // short demonstration; use 10 seeds for real comparisons

    let out = std::env::temp_dir().join("explore-budget-ablation-demo");
    let artifacts = cmd_ablate(&base, &out).unwrap();

    println!("{:<14} {:>10} {:>10}", "cell", "mean", "std");
    for cell in &artifacts.cells {
        println!(
            "{:<14} {:>10.3} {:>10.3}",
            cell.cell.name(),
            cell.mean.unwrap_or(f64::NAN),
            cell.std.unwrap_or(f64::NAN)
        );
    }
    println!("\nexpected directions: the full framework leads; dropping the modulation");
    println!("(rcb_only) or pinning the intensity (fixed_beta) collapses returns; exact");
    println!("water filling is noisier across seeds than the affine modulation; the");
    println!("uniform-noise source removes per-agent differentiation entirely.");
    println!("\ncell run directories and ablate.csv: {}", artifacts.ablation_dir.display());
}
