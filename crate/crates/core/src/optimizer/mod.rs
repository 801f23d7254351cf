//! Ask/tell optimizers: the limited-memory engine, the dense baseline, and
//! the run loop that drives either against a benchmark problem.

mod cholesky;
pub mod config;
mod lmcma;
mod population;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

pub use cholesky::CholeskyCma;
pub use config::{
    default_population, recombination_weights, variance_effective_mass, CholeskyConfig,
    ConfigOverrides, MemorySize, OptimizerConfig, Preset, CHOLESKY_DIM_CAP,
};
pub use lmcma::LmCma;
pub use population::{AskTell, BestSoFar, Candidate, Population, PreImage};
pub use run::{default_budget, eigenspectrum, optimize, stagnation_window, RunSettings, StopReason};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Lmcma,
    Cholcma,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Lmcma => "lmcma",
            Algorithm::Cholcma => "cholcma",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lmcma" => Ok(Algorithm::Lmcma),
            "cholcma" => Ok(Algorithm::Cholcma),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected lmcma or cholcma)"
            ))),
        }
    }
}

/// Algorithm choice plus its tuning, before the dimension is known.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    pub preset: Preset,
    pub overrides: ConfigOverrides,
}

/// Fully resolved hyper-parameters for either engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ResolvedConfig {
    Lmcma(OptimizerConfig),
    Cholcma(CholeskyConfig),
}

impl AlgorithmSpec {
    pub fn resolve(&self, n: usize) -> Result<ResolvedConfig> {
        match self.algorithm {
            Algorithm::Lmcma => {
                OptimizerConfig::resolve(n, self.preset, &self.overrides).map(ResolvedConfig::Lmcma)
            }
            Algorithm::Cholcma => {
                let o = &self.overrides;
                // the baseline has fixed constants; only λ is tunable
                let unsupported = o.m.is_some()
                    || o.c_sigma.is_some()
                    || o.z_star.is_some()
                    || o.c_c.is_some()
                    || o.c1.is_some()
                    || o.d_sigma.is_some()
                    || o.n_steps.is_some()
                    || o.period.is_some()
                    || o.m_sigma.is_some();
                if unsupported || self.preset != Preset::Default {
                    return Err(Error::InvalidArgument(
                        "cholcma accepts only a lambda override and the default preset".into(),
                    ));
                }
                let lambda = o.lambda.unwrap_or_else(|| default_population(n));
                CholeskyConfig::with_lambda(n, lambda).map(ResolvedConfig::Cholcma)
            }
        }
    }
}

impl ResolvedConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ResolvedConfig::Lmcma(_) => Algorithm::Lmcma,
            ResolvedConfig::Cholcma(_) => Algorithm::Cholcma,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ResolvedConfig::Lmcma(c) => c.n,
            ResolvedConfig::Cholcma(c) => c.n,
        }
    }

    pub fn lambda(&self) -> usize {
        match self {
            ResolvedConfig::Lmcma(c) => c.lambda,
            ResolvedConfig::Cholcma(c) => c.lambda,
        }
    }

    pub fn restarts(&self) -> bool {
        matches!(self, ResolvedConfig::Lmcma(c) if c.restarts)
    }

    pub fn build(&self, mean: Vec<f64>, sigma: f64, rng: RandomSource) -> Result<AnyOptimizer> {
        Ok(match self {
            ResolvedConfig::Lmcma(c) => AnyOptimizer::Lmcma(LmCma::new(c.clone(), mean, sigma, rng)?),
            ResolvedConfig::Cholcma(c) => {
                AnyOptimizer::Cholcma(CholeskyCma::new(c.clone(), mean, sigma, rng)?)
            }
        })
    }
}

/// Either engine behind one ask/tell surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnyOptimizer {
    Lmcma(LmCma),
    Cholcma(CholeskyCma),
}

impl AnyOptimizer {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AnyOptimizer::Lmcma(_) => Algorithm::Lmcma,
            AnyOptimizer::Cholcma(_) => Algorithm::Cholcma,
        }
    }

    fn inner(&self) -> &dyn AskTell {
        match self {
            AnyOptimizer::Lmcma(o) => o,
            AnyOptimizer::Cholcma(o) => o,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn AskTell {
        match self {
            AnyOptimizer::Lmcma(o) => o,
            AnyOptimizer::Cholcma(o) => o,
        }
    }

    /// Row-major dense sampling factor.
    pub fn dense_factor(&self) -> Vec<f64> {
        match self {
            AnyOptimizer::Lmcma(o) => o.store().dense_factor(),
            AnyOptimizer::Cholcma(o) => o.factor().to_vec(),
        }
    }
}

impl AskTell for AnyOptimizer {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn lambda(&self) -> usize {
        self.inner().lambda()
    }
    fn ask(&mut self) -> &Population {
        self.inner_mut().ask()
    }
    fn tell(&mut self, fitness: &[f64]) -> Result<()> {
        self.inner_mut().tell(fitness)
    }
    fn mean(&self) -> &[f64] {
        self.inner().mean()
    }
    fn sigma(&self) -> f64 {
        self.inner().sigma()
    }
    fn generation(&self) -> u64 {
        self.inner().generation()
    }
    fn evaluations(&self) -> u64 {
        self.inner().evaluations()
    }
    fn best(&self) -> Option<&BestSoFar> {
        self.inner().best()
    }
    fn pending(&self) -> Option<&Population> {
        self.inner().pending()
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized optimizer state; restoring it continues the run bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub optimizer: AnyOptimizer,
}

impl Checkpoint {
    pub fn new(optimizer: AnyOptimizer) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            optimizer,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(s)?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                cp.version
            )));
        }
        Ok(cp)
    }
}
