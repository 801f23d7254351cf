//! Limited-memory CMA-ES.
//!
//! The search distribution's Cholesky factor is never stored. It is
//! reconstructed on demand from a small set of direction vectors, so that a
//! sample costs `O(m·n)` time and the optimizer needs `O(m·n)` memory.
//!
//! ```
//! use lmcma_core::bench::{BenchmarkProblem, FunctionKind};
//! use lmcma_core::optimizer::{optimize, AlgorithmSpec, RunSettings, StopReason};
//!
//! let problem = BenchmarkProblem::new(FunctionKind::Sphere, 8).unwrap();
//! let config = AlgorithmSpec::default().resolve(8).unwrap();
//! let record = optimize(&problem, &config, &RunSettings::default()).unwrap();
//! assert_eq!(record.stop, StopReason::Target);
//! ```

pub mod bench;
pub mod error;
pub mod harness;
pub mod lmfactor;
pub mod optimizer;
pub mod psr;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use optimizer::{AskTell, LmCma};
pub use rng::RandomSource;
