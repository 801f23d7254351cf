use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::BenchmarkProblem;
use crate::error::{Error, Result};
use crate::harness::record::{RunMetadata, RunRecord, TrajectoryRow};
use crate::rng::RandomSource;

use super::{AskTell, Population, Preset, ResolvedConfig, CHOLESKY_DIM_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Target,
    Budget,
    Stagnation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub seed: u64,
    /// Evaluation cap; `10⁴·n` when unset.
    pub budget: Option<u64>,
    /// Overrides the problem's target.
    pub target_f: Option<f64>,
    /// When off, the `ms` column is 0 and trajectories are reproducible byte for byte.
    pub record_timing: bool,
    pub emit_eigenspectrum: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            budget: None,
            target_f: None,
            record_timing: true,
            emit_eigenspectrum: false,
        }
    }
}

/// Generations logged unconditionally before geometric thinning starts.
const DENSE_LOG_GENERATIONS: u64 = 100;
const LOG_SPACING: f64 = 1.05;
const RELATIVE_IMPROVEMENT: f64 = 1e-12;
const SIGMA_FLOOR: f64 = 1e-20;
/// Rotated evaluations cost O(n²); above this dimension they run in parallel.
const PARALLEL_EVAL_DIM: usize = 256;

pub fn default_budget(n: usize) -> u64 {
    10_000 * n as u64
}

/// Generations without relative improvement after which a run has stagnated.
pub fn stagnation_window(n: usize, lambda: usize) -> u64 {
    (10.0 * (n as f64 / lambda as f64 + 10.0)).ceil() as u64
}

fn evaluate_population(problem: &BenchmarkProblem, pop: &Population) -> Result<Vec<f64>> {
    if problem.rotation().is_some() && problem.dim() >= PARALLEL_EVAL_DIM {
        pop.candidates.par_iter().map(|c| problem.evaluate(&c.x)).collect()
    } else {
        pop.xs().map(|x| problem.evaluate(x)).collect()
    }
}

/// Ascending eigenvalues of `A·Aᵀ` for a row-major `n×n` factor.
pub fn eigenspectrum(factor: &[f64], n: usize) -> Result<Vec<f64>> {
    if n > CHOLESKY_DIM_CAP {
        return Err(Error::Capacity {
            what: "eigenspectrum dimension",
            requested: n,
            cap: CHOLESKY_DIM_CAP,
        });
    }
    if factor.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "factor has {} entries, expected {}",
            factor.len(),
            n * n
        )));
    }
    let a = DMatrix::from_row_slice(n, n, factor);
    let c = &a * a.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

struct Trace {
    rows: Vec<TrajectoryRow>,
    generations: u64,
    next_log: f64,
    start: Instant,
    timing: bool,
}

impl Trace {
    fn row(&self, evals: u64, best_f: f64, sigma: f64) -> TrajectoryRow {
        let ms = if self.timing {
            self.start.elapsed().as_millis() as u64
        } else {
            0
        };
        TrajectoryRow {
            evals,
            best_f,
            sigma,
            ms,
        }
    }

    fn after_generation(&mut self, evals: u64, best_f: f64, sigma: f64) {
        self.generations += 1;
        if self.generations <= DENSE_LOG_GENERATIONS || evals as f64 >= self.next_log {
            self.rows.push(self.row(evals, best_f, sigma));
            self.next_log = evals as f64 * LOG_SPACING;
        }
    }

    fn finish(&mut self, evals: u64, best_f: f64, sigma: f64) {
        if self.rows.last().is_none_or(|r| r.evals != evals) {
            self.rows.push(self.row(evals, best_f, sigma));
        }
    }
}

/// Runs `config` on `problem` until the target, the budget, or stagnation.
///
/// Restart `r` draws its initial mean uniformly from the init box with
/// sub-stream `2r` of the seed and drives the optimizer with sub-stream
/// `2r + 1`. Without restarts, stagnation ends the run.
pub fn optimize(
    problem: &BenchmarkProblem,
    config: &ResolvedConfig,
    settings: &RunSettings,
) -> Result<RunRecord> {
    let n = problem.dim();
    if config.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "config is for dimension {}, problem has {n}",
            config.dim()
        )));
    }
    let lambda = config.lambda();
    let budget = settings.budget.unwrap_or_else(|| default_budget(n));
    if budget < lambda as u64 {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} is below one generation ({lambda} evaluations)"
        )));
    }
    let target = settings.target_f.unwrap_or(problem.target_f);
    if !(target > 0.0) {
        return Err(Error::InvalidArgument(format!("target must be positive, got {target}")));
    }
    if settings.emit_eigenspectrum && n > CHOLESKY_DIM_CAP {
        return Err(Error::Capacity {
            what: "eigenspectrum dimension",
            requested: n,
            cap: CHOLESKY_DIM_CAP,
        });
    }

    let root = RandomSource::new(settings.seed);
    let window = stagnation_window(n, lambda);
    let mut trace = Trace {
        rows: Vec::new(),
        generations: 0,
        next_log: 0.0,
        start: Instant::now(),
        timing: settings.record_timing,
    };
    let mut evaluations = 0u64;
    let mut best_f = f64::INFINITY;
    let mut best_x = Vec::new();
    let mut restarts = 0u32;
    let mut hit = None;

    let (stop, opt) = 'runs: loop {
        let mut init = root.substream(2 * restarts as u64);
        let mean: Vec<f64> = (0..n)
            .map(|_| init.uniform(problem.init_lower, problem.init_upper))
            .collect();
        let mut opt = config.build(mean, problem.sigma0, root.substream(2 * restarts as u64 + 1))?;
        let mut anchor = f64::INFINITY;
        let mut since_improvement = 0u64;
        loop {
            let fitness = evaluate_population(problem, opt.ask())?;
            opt.tell(&fitness)?;
            evaluations += lambda as u64;
            let gen_best = opt.best().expect("best after tell");
            if gen_best.f < best_f {
                best_f = gen_best.f;
                best_x.clone_from(&gen_best.x);
            }
            trace.after_generation(evaluations, best_f, opt.sigma());

            if best_f <= target {
                hit = Some(evaluations);
                break 'runs (StopReason::Target, opt);
            }
            if evaluations + lambda as u64 > budget {
                break 'runs (StopReason::Budget, opt);
            }
            let local = opt.best().expect("best after tell").f;
            if anchor.is_infinite() || local < anchor - RELATIVE_IMPROVEMENT * anchor.abs() {
                anchor = local;
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            if since_improvement >= window || opt.sigma() < SIGMA_FLOOR * problem.sigma0 {
                if config.restarts() {
                    restarts += 1;
                    continue 'runs;
                }
                break 'runs (StopReason::Stagnation, opt);
            }
        }
    };
    trace.finish(evaluations, best_f, opt.sigma());

    let eigen = if settings.emit_eigenspectrum {
        Some(eigenspectrum(&opt.dense_factor(), n)?)
    } else {
        None
    };
    Ok(RunRecord {
        metadata: metadata(problem, config, settings.seed, budget, target),
        trajectory: trace.rows,
        stop,
        evaluations,
        evaluations_to_target: hit,
        best_f,
        best_x,
        restarts,
        eigenspectrum: eigen,
    })
}

fn metadata(
    problem: &BenchmarkProblem,
    config: &ResolvedConfig,
    seed: u64,
    budget: u64,
    target_f: f64,
) -> RunMetadata {
    let preset = match config {
        ResolvedConfig::Lmcma(c) => c.preset,
        ResolvedConfig::Cholcma(_) => Preset::Default,
    };
    RunMetadata {
        algorithm: config.algorithm(),
        preset,
        function: problem.id(),
        n: problem.dim(),
        seed,
        rotation_seed: problem.rotation_seed(),
        budget,
        target_f,
        init_lower: problem.init_lower,
        init_upper: problem.init_upper,
        sigma0: problem.sigma0,
        config: config.clone(),
        version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
    }
}
