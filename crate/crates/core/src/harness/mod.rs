//! Repeated seeded runs, trajectory/summary emission and memory accounting.

pub mod experiment;
pub mod memory;
pub mod record;
pub mod settings;

pub use experiment::{run_experiment, summarize, CellReport, CellSpec, CellSummary, ExperimentSpec, RunOutcome};
pub use memory::memory_slots;
pub use record::{parse_csv, RunMetadata, RunRecord, TrajectoryRow, CSV_HEADER};
pub use settings::{parse_config, RunRequest};
