//! Metrics emission: line-delimited iteration records and CSV summaries.
//!
//! Every number in a summary is re-derivable from the stored record streams;
//! summaries are conveniences, not the source of truth. Record streams are
//! byte-identical across reruns of the same config and seed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::trainer::IterationRecord;

/// Streaming JSONL writer for iteration records; one line per iteration,
/// flushed as written so aborted runs leave their partial streams behind.
pub struct RecordWriter {
    writer: BufWriter<File>,
    path: PathBuf,
}

impl RecordWriter {
    pub fn create<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(Self {
            writer: BufWriter::new(File::create(&path)?),
            path,
        })
    }

    pub fn append(&mut self, record: &IterationRecord) -> Result<()> {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(self.writer, "{line}")?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Reads a record stream back from disk.
pub fn read_records<P: AsRef<Path>>(path: P) -> Result<Vec<IterationRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let record: IterationRecord = serde_json::from_str(line)
            .map_err(|e| crate::error::Error::InvalidInput(format!("bad record line: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

/// Final return of one seed's run: the mean of `mean_team_return` over the
/// last tenth of the iterations (at least one), skipping iterations in which
/// no episode completed. `None` when no window iteration completed one.
pub fn final_return(records: &[IterationRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let window = (records.len() / 10).max(1);
    let tail = &records[records.len() - window..];
    let returns: Vec<f64> = tail.iter().filter_map(|r| r.mean_team_return).collect();
    if returns.is_empty() {
        None
    } else {
        Some(returns.iter().sum::<f64>() / returns.len() as f64)
    }
}

/// Sample mean and standard deviation; a single sample reports std 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Writes the per-seed summary CSV: one row per seed, then aggregate rows.
pub fn write_summary_csv<P: AsRef<Path>>(path: P, per_seed: &[(u64, Option<f64>)]) -> Result<()> {
    let mut out = String::from("seed,final_return\n");
    for (seed, value) in per_seed {
        match value {
            Some(v) => out.push_str(&format!("{seed},{v}\n")),
            None => out.push_str(&format!("{seed},\n")),
        }
    }
    let finals: Vec<f64> = per_seed.iter().filter_map(|(_, v)| *v).collect();
    let (mean, std) = mean_std(&finals);
    out.push_str(&format!("mean,{mean}\n"));
    out.push_str(&format!("std,{std}\n"));
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{AgentRecord, RECORD_SCHEMA_VERSION};

    fn record(iteration: u64, mean_return: Option<f64>) -> IterationRecord {
        IterationRecord {
            schema: RECORD_SCHEMA_VERSION,
            iteration,
            mean_team_return: mean_return,
            r_ema: 0.5,
            beta: 0.3,
            agents: vec![AgentRecord {
                mu: 0.1,
                sigma_sq: 0.9,
                rsq: 0.011,
                h: 0.1,
                mean_intrinsic: 0.2,
            }],
            quality_gap: 0.0,
            wall_clock_ms: 12.5,
        }
    }

    #[test]
    fn records_round_trip_without_wall_clock() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let mut writer = RecordWriter::create(&path).unwrap();
        writer.append(&record(0, Some(1.0))).unwrap();
        writer.append(&record(1, None)).unwrap();
        drop(writer);

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(
            !text.contains("wall_clock"),
            "wall clock must stay out of the serialized stream"
        );
        let records = read_records(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].mean_team_return, Some(1.0));
        assert_eq!(records[1].mean_team_return, None);
        assert_eq!(records[0].wall_clock_ms, 0.0, "skipped field deserializes to default");
    }

    #[test]
    fn final_return_uses_last_tenth() {
        let records: Vec<IterationRecord> =
            (0..100).map(|i| record(i, Some(i as f64))).collect();
        // Last 10 iterations: 90..=99.
        assert_eq!(final_return(&records), Some(94.5));
    }

    #[test]
    fn final_return_skips_absent_iterations() {
        let mut records: Vec<IterationRecord> =
            (0..20).map(|i| record(i, Some(i as f64))).collect();
        records[19].mean_team_return = None;
        assert_eq!(final_return(&records), Some(18.0));
        let empty: Vec<IterationRecord> = (0..20).map(|i| record(i, None)).collect();
        assert_eq!(final_return(&empty), None);
        assert_eq!(final_return(&[]), None);
    }

    #[test]
    fn summary_csv_contains_aggregates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        write_summary_csv(&path, &[(0, Some(1.0)), (1, Some(3.0)), (2, None)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("seed,final_return\n"));
        assert!(text.contains("0,1\n"));
        assert!(text.contains("2,\n"));
        assert!(text.contains("mean,2\n"));
        let (_, std) = mean_std(&[1.0, 3.0]);
        assert!(text.contains(&format!("std,{std}\n")));
    }
}
