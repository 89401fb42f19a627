//! Run orchestration: the operations behind the CLI subcommands.
//!
//! Every run directory is self-describing: it contains the exact resolved
//! configuration that produced it, one record stream per seed, and a summary
//! CSV whose numbers are re-derivable from the streams. Sweeps and ablations
//! are sets of such runs plus an aggregate table; they continue past
//! individual cell failures and record them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checks::{fast_checks, lab_params, lab_responses, verify_checks, CheckOutcome};
use crate::config::RunConfig;
use crate::convergence::{find_fixed_point, simulate_schedule};
use crate::error::{Error, Result};
use crate::report::{final_return, mean_std, write_summary_csv, RecordWriter};
use crate::trainer::{AllocationMode, IntrinsicSource, IterationRecord, ScheduleMode, Trainer};

/// Environment variable naming the output root; the `--out` flag wins over
/// it, and it wins over `output_dir` in the config.
pub const OUTPUT_ROOT_ENV: &str = "EXPLORE_BUDGET_OUT";

/// Hard cap on sweep size.
pub const SWEEP_CAP: usize = 64;

/// Resolves the output root from flag, environment, config, then `./runs`.
pub fn resolve_output_root(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(path) = flag {
        return path.to_path_buf();
    }
    if let Ok(env_root) = std::env::var(OUTPUT_ROOT_ENV) {
        if !env_root.is_empty() {
            return PathBuf::from(env_root);
        }
    }
    if let Some(dir) = &config.output_dir {
        return PathBuf::from(dir);
    }
    PathBuf::from("runs")
}

/// Artifacts of one multi-seed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    /// `(seed, final return)` per seed; `None` when no episode completed.
    pub per_seed: Vec<(u64, Option<f64>)>,
    pub mean: f64,
    pub std: f64,
}

/// Executes every seed of the configuration and writes the run directory:
/// `config.toml`, `seed_<s>/records.jsonl`, and `summary.csv`. Records are
/// flushed as they are produced, so an aborted run keeps its partial streams.
pub fn cmd_run(config: &RunConfig, out_root: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    let run_dir = out_root.join(&config.label);
    fs::create_dir_all(&run_dir)?;
    fs::write(run_dir.join("config.toml"), config.to_toml_string())?;

    let mut per_seed = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let records = run_seed(config, seed, &run_dir)?;
        per_seed.push((seed, final_return(&records)));
    }
    write_summary_csv(run_dir.join("summary.csv"), &per_seed)?;

    let finals: Vec<f64> = per_seed.iter().filter_map(|(_, v)| *v).collect();
    let (mean, std) = mean_std(&finals);
    Ok(RunArtifacts {
        run_dir,
        per_seed,
        mean,
        std,
    })
}

fn run_seed(config: &RunConfig, seed: u64, run_dir: &Path) -> Result<Vec<IterationRecord>> {
    let seed_dir = run_dir.join(format!("seed_{seed}"));
    let mut writer = RecordWriter::create(seed_dir.join("records.jsonl"))?;
    let mut trajectories = if config.trainer.debug_trajectories {
        Some(std::io::BufWriter::new(fs::File::create(
            seed_dir.join("trajectories.jsonl"),
        )?))
    } else {
        None
    };
    let mut trainer = Trainer::new(config, seed)?;
    let mut records = Vec::with_capacity(config.trainer.total_iterations);
    for _ in 0..config.trainer.total_iterations {
        let (record, batch) = trainer.step_iteration_with_batch()?;
        writer.append(&record)?;
        if let Some(out) = trajectories.as_mut() {
            write_trajectories(out, record.iteration, &batch)?;
        }
        records.push(record);
    }
    if config.trainer.debug_trajectories {
        trainer.write_measures(&seed_dir.join("measures"))?;
    }
    Ok(records)
}

/// One line per environment step: iteration, env, step, per-agent local
/// states and actions, the shared reward, and the done flag.
fn write_trajectories(
    out: &mut impl std::io::Write,
    iteration: u64,
    batch: &crate::trainer::RolloutBatch,
) -> Result<()> {
    for env in 0..batch.n_envs {
        for step in 0..batch.n_steps {
            let i = env * batch.n_steps + step;
            let states: Vec<usize> = (0..batch.n_agents).map(|a| batch.states[a][i]).collect();
            let actions: Vec<usize> = (0..batch.n_agents).map(|a| batch.actions[a][i]).collect();
            let line = serde_json::json!({
                "iteration": iteration,
                "env": env,
                "step": step,
                "states": states,
                "actions": actions,
                "reward": batch.ext_rewards[i],
                "done": batch.dones[i],
            });
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A single-axis parameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Dotted config path, e.g. `rsq.lambda`.
    pub parameter: String,
    /// TOML-literal values, one run per value.
    pub values: Vec<String>,
}

/// One sweep cell's aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepArtifacts {
    pub sweep_dir: PathBuf,
    pub cells: Vec<SweepCell>,
}

fn sanitize_component(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Runs the base configuration once per sweep value, overriding the swept
/// parameter, and writes `sweep.csv` with one aggregate row per value.
/// Individual cell failures are recorded and do not stop the sweep.
pub fn cmd_sweep(base: &RunConfig, spec: &SweepSpec, out_root: &Path) -> Result<SweepArtifacts> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if spec.values.len() > SWEEP_CAP {
        return Err(Error::Config(format!(
            "sweep of {} values exceeds the cap of {SWEEP_CAP}",
            spec.values.len()
        )));
    }
    let sweep_dir = out_root.join(format!(
        "{}_sweep_{}",
        base.label,
        sanitize_component(&spec.parameter)
    ));
    fs::create_dir_all(&sweep_dir)?;

    let mut cells = Vec::with_capacity(spec.values.len());
    for value in &spec.values {
        let cell = (|| -> Result<RunArtifacts> {
            let mut config = base.clone();
            config.apply_override(&format!("{}={}", spec.parameter, value))?;
            config.label = sanitize_component(value);
            cmd_run(&config, &sweep_dir)
        })();
        match cell {
            Ok(artifacts) => cells.push(SweepCell {
                value: value.clone(),
                mean: Some(artifacts.mean),
                std: Some(artifacts.std),
                error: None,
            }),
            Err(e) => cells.push(SweepCell {
                value: value.clone(),
                mean: None,
                std: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let mut table = String::from("value,mean,std,error\n");
    for cell in &cells {
        table.push_str(&format!(
            "{},{},{},{}\n",
            cell.value,
            cell.mean.map_or(String::new(), |v| v.to_string()),
            cell.std.map_or(String::new(), |v| v.to_string()),
            cell.error.clone().unwrap_or_default()
        ));
    }
    fs::write(sweep_dir.join("sweep.csv"), table)?;
    Ok(SweepArtifacts { sweep_dir, cells })
}

/// The fixed ablation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationCell {
    /// The full framework as configured.
    Full,
    /// Global schedule only: `lambda = 0` pins every weight to 1.
    RcbOnly,
    /// Per-agent modulation only: intensity fixed at the ceiling.
    RsqOnly,
    /// Neither mechanism: fixed ceiling intensity, unit weights.
    FixedBeta,
    /// Exact water-filling allocation in place of the affine modulation.
    WaterFilling,
    /// Intrinsic source with no per-agent quality variation.
    UniformNoise,
}

impl AblationCell {
    pub const ALL: [AblationCell; 6] = [
        AblationCell::Full,
        AblationCell::RcbOnly,
        AblationCell::RsqOnly,
        AblationCell::FixedBeta,
        AblationCell::WaterFilling,
        AblationCell::UniformNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationCell::Full => "full",
            AblationCell::RcbOnly => "rcb_only",
            AblationCell::RsqOnly => "rsq_only",
            AblationCell::FixedBeta => "fixed_beta",
            AblationCell::WaterFilling => "water_filling",
            AblationCell::UniformNoise => "uniform_noise",
        }
    }

    /// Applies the cell's configuration delta to a copy of the base config.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut config = base.clone();
        config.label = self.name().to_string();
        match self {
            AblationCell::Full => {}
            AblationCell::RcbOnly => {
                config.rsq.lambda = 0.0;
            }
            AblationCell::RsqOnly => {
                config.trainer.schedule = ScheduleMode::Fixed;
                config.trainer.fixed_beta = config.rcb.beta_max;
            }
            AblationCell::FixedBeta => {
                config.trainer.schedule = ScheduleMode::Fixed;
                config.trainer.fixed_beta = config.rcb.beta_max;
                config.trainer.allocation = AllocationMode::None;
            }
            AblationCell::WaterFilling => {
                config.trainer.allocation = AllocationMode::WaterFilling;
            }
            AblationCell::UniformNoise => {
                config.trainer.intrinsic_source = IntrinsicSource::UniformNoise;
            }
        }
        config
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationCellResult {
    pub cell: AblationCell,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub per_seed: Vec<(u64, Option<f64>)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationArtifacts {
    pub ablation_dir: PathBuf,
    pub cells: Vec<AblationCellResult>,
}

/// Runs the six-cell ablation matrix on the base configuration and writes
/// `ablate.csv` (cell, mean, std). Quality-gap traces live in each cell's
/// record streams.
pub fn cmd_ablate(base: &RunConfig, out_root: &Path) -> Result<AblationArtifacts> {
    let ablation_dir = out_root.join(format!("{}_ablation", base.label));
    fs::create_dir_all(&ablation_dir)?;

    let mut cells = Vec::with_capacity(AblationCell::ALL.len());
    for cell in AblationCell::ALL {
        let config = cell.apply(base);
        match cmd_run(&config, &ablation_dir) {
            Ok(artifacts) => cells.push(AblationCellResult {
                cell,
                mean: Some(artifacts.mean),
                std: Some(artifacts.std),
                per_seed: artifacts.per_seed,
                error: None,
            }),
            Err(e) => cells.push(AblationCellResult {
                cell,
                mean: None,
                std: None,
                per_seed: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }

    let mut table = String::from("cell,mean,std,error\n");
    for result in &cells {
        table.push_str(&format!(
            "{},{},{},{}\n",
            result.cell.name(),
            result.mean.map_or(String::new(), |v| v.to_string()),
            result.std.map_or(String::new(), |v| v.to_string()),
            result.error.clone().unwrap_or_default()
        ));
    }
    fs::write(ablation_dir.join("ablate.csv"), table)?;
    Ok(AblationArtifacts { ablation_dir, cells })
}

/// Runs the schedule convergence suite, writes the raw lab trajectories and a
/// pass/fail table under `out_root/verify`, and returns the outcomes.
pub fn cmd_verify(out_root: &Path) -> Result<Vec<CheckOutcome>> {
    let verify_dir = out_root.join("verify");
    fs::create_dir_all(&verify_dir)?;

    // Raw noiseless trajectories for the nine lab fixtures.
    for (pi, params) in lab_params().iter().enumerate() {
        for (ri, response) in lab_responses().iter().enumerate() {
            let fp = find_fixed_point(response, params);
            let trajectory = simulate_schedule(response, params, None, 4000, 0);
            let mut text = String::from("iteration,r_ema,beta,r_star\n");
            for (k, (r, b)) in trajectory.r_ema.iter().zip(&trajectory.beta).enumerate() {
                text.push_str(&format!("{k},{r},{b},{}\n", fp.r_star));
            }
            fs::write(verify_dir.join(format!("trajectory_p{pi}_r{ri}.csv")), text)?;
        }
    }

    let outcomes = verify_checks();
    let mut table = String::from("check,status,detail\n");
    for outcome in &outcomes {
        table.push_str(&format!(
            "{},{},{}\n",
            outcome.name,
            if outcome.passed { "pass" } else { "FAIL" },
            outcome.detail.replace(',', ";")
        ));
    }
    fs::write(verify_dir.join("verify.csv"), table)?;
    Ok(outcomes)
}

/// Runs the fast property suite (no training, no files) and returns the
/// outcomes.
pub fn cmd_check() -> Vec<CheckOutcome> {
    fast_checks()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::read_records;

    fn tiny_config() -> RunConfig {
        let mut config = RunConfig::corridor_default();
        config.label = "tiny".into();
        config.seeds = vec![0, 1];
        config.trainer.n_envs = 2;
        config.trainer.n_steps = 8;
        config.trainer.total_iterations = 4;
        config.env.corridor.max_steps = 8;
        config
    }

    #[test]
    fn run_writes_complete_run_directory() {
        let out = tempfile::tempdir().unwrap();
        let artifacts = cmd_run(&tiny_config(), out.path()).unwrap();
        assert!(artifacts.run_dir.join("config.toml").exists());
        assert!(artifacts.run_dir.join("summary.csv").exists());
        for seed in [0u64, 1] {
            let records =
                read_records(artifacts.run_dir.join(format!("seed_{seed}/records.jsonl"))).unwrap();
            assert_eq!(records.len(), 4);
        }
        // The stored config reproduces the run.
        let stored = RunConfig::from_file(artifacts.run_dir.join("config.toml")).unwrap();
        assert_eq!(stored, tiny_config());
        // No debug artifacts unless asked for.
        assert!(!artifacts.run_dir.join("seed_0/trajectories.jsonl").exists());
    }

    #[test]
    fn debug_flag_dumps_trajectories_and_measures() {
        let out = tempfile::tempdir().unwrap();
        let mut config = tiny_config();
        config.trainer.debug_trajectories = true;
        config.seeds = vec![0];
        let artifacts = cmd_run(&config, out.path()).unwrap();
        let seed_dir = artifacts.run_dir.join("seed_0");
        let text = fs::read_to_string(seed_dir.join("trajectories.jsonl")).unwrap();
        // One line per env step per iteration.
        assert_eq!(
            text.lines().count(),
            config.trainer.n_envs * config.trainer.n_steps * config.trainer.total_iterations
        );
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["iteration"], 0);
        assert_eq!(first["states"].as_array().unwrap().len(), 4);
        // Measure dumps parse as matrices of the local-state size.
        let measure = fs::read_to_string(seed_dir.join("measures/measure_agent0.txt")).unwrap();
        assert!(measure.starts_with("77 77"));
        assert!(seed_dir.join("measures/transition_agent3.txt").exists());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let out_a = tempfile::tempdir().unwrap();
        let out_b = tempfile::tempdir().unwrap();
        cmd_run(&tiny_config(), out_a.path()).unwrap();
        cmd_run(&tiny_config(), out_b.path()).unwrap();
        for seed in [0u64, 1] {
            let rel = format!("tiny/seed_{seed}/records.jsonl");
            let a = fs::read(out_a.path().join(&rel)).unwrap();
            let b = fs::read(out_b.path().join(&rel)).unwrap();
            assert_eq!(a, b, "record streams differ for seed {seed}");
        }
    }

    #[test]
    fn sweep_runs_one_cell_per_value_and_survives_failures() {
        let out = tempfile::tempdir().unwrap();
        let spec = SweepSpec {
            parameter: "rsq.lambda".into(),
            values: vec!["0".into(), "1.5".into(), "-3".into()],
        };
        let artifacts = cmd_sweep(&tiny_config(), &spec, out.path()).unwrap();
        assert_eq!(artifacts.cells.len(), 3);
        assert!(artifacts.cells[0].error.is_none());
        assert!(artifacts.cells[1].error.is_none());
        // lambda = -3 fails validation; the sweep records it and continues.
        assert!(artifacts.cells[2].error.is_some());
        let table = fs::read_to_string(artifacts.sweep_dir.join("sweep.csv")).unwrap();
        assert_eq!(table.lines().count(), 4);
    }

    #[test]
    fn target_return_sweep_over_wide_range() {
        // A 20x range of the reference return produces one row per value.
        let out = tempfile::tempdir().unwrap();
        let spec = SweepSpec {
            parameter: "rcb.r_target".into(),
            values: ["0.5", "1", "2", "4", "6", "8", "10"].map(String::from).to_vec(),
        };
        let artifacts = cmd_sweep(&tiny_config(), &spec, out.path()).unwrap();
        assert_eq!(artifacts.cells.len(), 7);
        assert!(artifacts.cells.iter().all(|c| c.error.is_none()));
        let table = fs::read_to_string(artifacts.sweep_dir.join("sweep.csv")).unwrap();
        assert_eq!(table.lines().count(), 8, "header plus one row per value");
    }

    #[test]
    fn sweep_rejects_empty_values() {
        let out = tempfile::tempdir().unwrap();
        let spec = SweepSpec {
            parameter: "rsq.lambda".into(),
            values: vec![],
        };
        assert!(cmd_sweep(&tiny_config(), &spec, out.path()).is_err());
    }

    #[test]
    fn ablation_matrix_runs_all_cells() {
        let out = tempfile::tempdir().unwrap();
        let artifacts = cmd_ablate(&tiny_config(), out.path()).unwrap();
        assert_eq!(artifacts.cells.len(), 6);
        for cell in &artifacts.cells {
            assert!(cell.error.is_none(), "{:?}: {:?}", cell.cell, cell.error);
        }
        let table = fs::read_to_string(artifacts.ablation_dir.join("ablate.csv")).unwrap();
        for name in ["full", "rcb_only", "rsq_only", "fixed_beta", "water_filling", "uniform_noise"] {
            assert!(table.contains(name), "missing {name} in ablate.csv");
        }
    }

    #[test]
    fn ablation_cells_differ_only_in_their_knobs() {
        let base = tiny_config();
        let rcb_only = AblationCell::RcbOnly.apply(&base);
        assert_eq!(rcb_only.rsq.lambda, 0.0);
        assert_eq!(rcb_only.trainer.schedule, base.trainer.schedule);

        let fixed = AblationCell::FixedBeta.apply(&base);
        assert_eq!(fixed.trainer.schedule, ScheduleMode::Fixed);
        assert_eq!(fixed.trainer.fixed_beta, base.rcb.beta_max);
        assert_eq!(fixed.trainer.allocation, AllocationMode::None);

        let wf = AblationCell::WaterFilling.apply(&base);
        assert_eq!(wf.trainer.allocation, AllocationMode::WaterFilling);
        assert_eq!(wf.rsq.lambda, base.rsq.lambda);
    }

    #[test]
    fn output_root_resolution_order() {
        let mut config = tiny_config();
        config.output_dir = Some("from-config".into());
        let flag = PathBuf::from("from-flag");
        assert_eq!(resolve_output_root(Some(&flag), &config), flag);
        // Without the flag, the config value applies (the env var is not set
        // in tests to keep them hermetic).
        if std::env::var(OUTPUT_ROOT_ENV).is_err() {
            assert_eq!(
                resolve_output_root(None, &config),
                PathBuf::from("from-config")
            );
            config.output_dir = None;
            assert_eq!(resolve_output_root(None, &config), PathBuf::from("runs"));
        }
    }

    #[test]
    fn verify_writes_trajectories_and_table() {
        let out = tempfile::tempdir().unwrap();
        let outcomes = cmd_verify(out.path()).unwrap();
        assert_eq!(outcomes.len(), 2);
        assert!(outcomes.iter().all(|o| o.passed));
        let verify_dir = out.path().join("verify");
        assert!(verify_dir.join("verify.csv").exists());
        assert!(verify_dir.join("trajectory_p0_r0.csv").exists());
        assert!(verify_dir.join("trajectory_p2_r2.csv").exists());
    }
}
