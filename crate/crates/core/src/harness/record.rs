use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::FunctionId;
use crate::error::{Error, Result};
use crate::optimizer::{Algorithm, Preset, ResolvedConfig, StopReason};

pub const CSV_HEADER: &str = "evals,best_f,sigma,ms";
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub evals: u64,
    pub best_f: f64,
    pub sigma: f64,
    /// Wall-clock milliseconds since the run started; 0 when timing is off.
    pub ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub algorithm: Algorithm,
    pub preset: Preset,
    pub function: FunctionId,
    pub n: usize,
    pub seed: u64,
    pub rotation_seed: Option<u64>,
    pub budget: u64,
    pub target_f: f64,
    pub init_lower: f64,
    pub init_upper: f64,
    pub sigma0: f64,
    pub config: ResolvedConfig,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub metadata: RunMetadata,
    pub trajectory: Vec<TrajectoryRow>,
    pub stop: StopReason,
    pub evaluations: u64,
    /// Evaluation count at which the target was first reached.
    pub evaluations_to_target: Option<u64>,
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub restarts: u32,
    /// Ascending eigenvalues of `A·Aᵀ` at the end of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenspectrum: Option<Vec<f64>>,
}

impl RunRecord {
    pub fn reached_target(&self) -> bool {
        self.evaluations_to_target.is_some()
    }

    /// Trajectory as CSV. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.trajectory.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.trajectory {
            let _ = writeln!(out, "{},{:e},{:e},{}", r.evals, r.best_f, r.sigma, r.ms);
        }
        out
    }

    /// The record without its trajectory, as pretty JSON.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            metadata: &'a RunMetadata,
            stop: StopReason,
            evaluations: u64,
            evaluations_to_target: Option<u64>,
            best_f: f64,
            restarts: u32,
            trajectory_rows: usize,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            metadata: &self.metadata,
            stop: self.stop,
            evaluations: self.evaluations,
            evaluations_to_target: self.evaluations_to_target,
            best_f: self.best_f,
            restarts: self.restarts,
            trajectory_rows: self.trajectory.len(),
        })?)
    }
}

/// Parses a trajectory CSV back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidArgument(format!("trajectory header must be {CSV_HEADER:?}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::InvalidArgument(format!("malformed trajectory row {}: {line:?}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(TrajectoryRow {
                evals: f[0].parse().map_err(|_| bad())?,
                best_f: f[1].parse().map_err(|_| bad())?,
                sigma: f[2].parse().map_err(|_| bad())?,
                ms: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One eigenvalue per line.
pub fn eigenspectrum_csv(values: &[f64]) -> String {
    let mut out = String::from("eigenvalue\n");
    for v in values {
        let _ = writeln!(out, "{v:e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_exactly() {
        let rows = vec![
            TrajectoryRow {
                evals: 10,
                best_f: 0.1 + 0.2,
                sigma: 3.0,
                ms: 0,
            },
            TrajectoryRow {
                evals: 20,
                best_f: 1e-300,
                sigma: 1.234_567_890_123_456_7e-7,
                ms: 12,
            },
        ];
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for r in &rows {
            text.push_str(&format!("{},{:e},{:e},{}\n", r.evals, r.best_f, r.sigma, r.ms));
        }
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, rows);
        assert!(text.contains("1e-300"));
    }

    #[test]
    fn csv_rejects_foreign_header() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
        assert!(parse_csv("evals,best_f,sigma,ms\n1,2,3\n").is_err());
    }
}
