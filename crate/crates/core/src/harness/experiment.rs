use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkProblem, FunctionId, FunctionKind};
use crate::error::{Error, Result};
use crate::optimizer::{default_budget, optimize, AlgorithmSpec, RunSettings};

use super::record::{eigenspectrum_csv, write_file, RunRecord, SUMMARY_SCHEMA_VERSION};

/// One (algorithm, problem) combination run `runs` times with seeds
/// `base_seed + index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellSpec {
    pub algorithm: AlgorithmSpec,
    pub function: FunctionId,
    pub n: usize,
    /// `10⁴·n` when unset.
    pub budget: Option<u64>,
    pub target_f: Option<f64>,
    pub sigma0: Option<f64>,
    pub runs: usize,
    pub base_seed: u64,
    /// Rotated functions share one rotation per cell; defaults to `base_seed`.
    pub rotation_seed: Option<u64>,
    pub emit_eigenspectrum: bool,
}

impl Default for CellSpec {
    fn default() -> Self {
        Self {
            algorithm: AlgorithmSpec::default(),
            function: FunctionId::new(FunctionKind::Sphere, false),
            n: 10,
            budget: None,
            target_f: None,
            sigma0: None,
            runs: 1,
            base_seed: 1,
            rotation_seed: None,
            emit_eigenspectrum: false,
        }
    }
}

impl CellSpec {
    pub fn label(&self) -> String {
        format!("{}_{}_n{}", self.algorithm.algorithm, self.function, self.n)
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or_else(|| default_budget(self.n))
    }

    pub fn problem(&self) -> Result<BenchmarkProblem> {
        let rotation_seed = self
            .function
            .rotated
            .then(|| self.rotation_seed.unwrap_or(self.base_seed));
        let mut p = BenchmarkProblem::from_id(self.function, self.n, rotation_seed)?;
        if let Some(s) = self.sigma0 {
            p = p.with_sigma0(s)?;
        }
        if let Some(t) = self.target_f {
            p = p.with_target(t)?;
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be >= 1".into()));
        }
        self.problem()?;
        let cfg = self.algorithm.resolve(self.n)?;
        if self.budget() < cfg.lambda() as u64 {
            return Err(Error::InvalidArgument(format!(
                "budget {} is below one generation ({} evaluations)",
                self.budget(),
                cfg.lambda()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub cells: Vec<CellSpec>,
    /// Nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    pub record_timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub index: usize,
    pub seed: u64,
    pub record: Option<RunRecord>,
    pub error: Option<String>,
}

impl RunOutcome {
    /// Evaluations to target, or the budget for failed and censored runs.
    fn score(&self, budget: u64) -> (u64, bool) {
        match self.record.as_ref().and_then(|r| r.evaluations_to_target) {
            Some(e) => (e, false),
            None => (budget, true),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub schema_version: u32,
    pub label: String,
    pub cell: CellSpec,
    pub runs: usize,
    pub successes: usize,
    pub failures: usize,
    pub success_rate: f64,
    /// Lower median of evaluations-to-target; unsuccessful runs count as the budget.
    pub median_evaluations: u64,
    /// The median falls on an unsuccessful run.
    pub censored: bool,
    pub per_run: Vec<RunSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub evaluations: Option<u64>,
    pub evaluations_to_target: Option<u64>,
    pub best_f: Option<f64>,
    pub stop: Option<crate::optimizer::StopReason>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub summary: CellSummary,
    pub outcomes: Vec<RunOutcome>,
}

/// Lower median (the `⌈k/2⌉`-th order statistic) with censoring.
pub fn summarize(cell: &CellSpec, outcomes: &[RunOutcome]) -> CellSummary {
    let budget = cell.budget();
    let mut scores: Vec<(u64, bool)> = outcomes.iter().map(|o| o.score(budget)).collect();
    scores.sort();
    let (median, censored) = scores
        .get(scores.len().saturating_sub(1) / 2)
        .copied()
        .unwrap_or((budget, true));
    let successes = scores.iter().filter(|s| !s.1).count();
    CellSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        label: cell.label(),
        cell: cell.clone(),
        runs: outcomes.len(),
        successes,
        failures: outcomes.iter().filter(|o| o.error.is_some()).count(),
        success_rate: successes as f64 / outcomes.len().max(1) as f64,
        median_evaluations: median,
        censored,
        per_run: outcomes
            .iter()
            .map(|o| RunSummary {
                index: o.index,
                seed: o.seed,
                evaluations: o.record.as_ref().map(|r| r.evaluations),
                evaluations_to_target: o.record.as_ref().and_then(|r| r.evaluations_to_target),
                best_f: o.record.as_ref().map(|r| r.best_f),
                stop: o.record.as_ref().map(|r| r.stop),
                error: o.error.clone(),
            })
            .collect(),
    }
}

fn ensure_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn cell_dir(root: &Path, index: usize, cell: &CellSpec) -> PathBuf {
    root.join(format!("cell{index:02}_{}", cell.label()))
}

/// Runs every cell. Runs within a cell execute in parallel; a failing run is
/// recorded in the summary and does not stop the batch.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellReport>> {
    if spec.cells.is_empty() {
        return Err(Error::InvalidArgument("experiment has no cells".into()));
    }
    for cell in &spec.cells {
        cell.validate()?;
    }
    if let Some(dir) = &spec.out_dir {
        ensure_writable(dir)?;
    }

    let mut reports = Vec::with_capacity(spec.cells.len());
    for (ci, cell) in spec.cells.iter().enumerate() {
        let problem = cell.problem()?;
        let config = cell.algorithm.resolve(cell.n)?;
        let outcomes: Vec<RunOutcome> = (0..cell.runs)
            .into_par_iter()
            .map(|index| {
                let seed = cell.base_seed.wrapping_add(index as u64);
                let settings = RunSettings {
                    seed,
                    budget: Some(cell.budget()),
                    target_f: None,
                    record_timing: spec.record_timing,
                    emit_eigenspectrum: cell.emit_eigenspectrum,
                };
                match optimize(&problem, &config, &settings) {
                    Ok(record) => RunOutcome {
                        index,
                        seed,
                        record: Some(record),
                        error: None,
                    },
                    Err(e) => RunOutcome {
                        index,
                        seed,
                        record: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();
        let summary = summarize(cell, &outcomes);

        if let Some(root) = &spec.out_dir {
            let dir = cell_dir(root, ci, cell);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for o in &outcomes {
                let Some(r) = &o.record else { continue };
                write_file(&dir.join(format!("run{:03}.csv", o.index)), &r.to_csv())?;
                write_file(&dir.join(format!("run{:03}.json", o.index)), &r.summary_json()?)?;
                if let Some(ev) = &r.eigenspectrum {
                    let path = dir.join(format!("run{:03}_eigenspectrum.csv", o.index));
                    write_file(&path, &eigenspectrum_csv(ev))?;
                }
            }
            write_file(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
        }
        reports.push(CellReport { summary, outcomes });
    }
    Ok(reports)
}
