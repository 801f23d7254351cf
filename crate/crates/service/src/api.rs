//! Request and response bodies shared by the server and its clients.

use serde::{Deserialize, Serialize};

use lmcma_core::bench::FunctionId;
use lmcma_core::harness::CellSummary;
use lmcma_core::optimizer::{Algorithm, AlgorithmSpec, BestSoFar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub function: FunctionId,
    pub x: Vec<f64>,
    /// Required for rotated functions.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorySlotsRequest {
    pub algorithm: Algorithm,
    pub n: u64,
    #[serde(default)]
    pub m: u64,
    #[serde(default)]
    pub lambda: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorySlotsResponse {
    pub slots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub algorithm: AlgorithmSpec,
    pub mean: Vec<f64>,
    pub sigma: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub status: SessionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub algorithm: Algorithm,
    pub n: usize,
    pub lambda: usize,
    pub generation: u64,
    pub evaluations: u64,
    pub sigma: f64,
    pub mean: Vec<f64>,
    pub best: Option<BestSoFar>,
    pub pending: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TellRequest {
    pub fitness: Vec<f64>,
}

/// Single seeded run of one algorithm on one benchmark function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    #[serde(default)]
    pub algorithm: AlgorithmSpec,
    pub function: FunctionId,
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub target_f: Option<f64>,
    #[serde(default)]
    pub sigma0: Option<f64>,
    #[serde(default)]
    pub rotation_seed: Option<u64>,
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub emit_eigenspectrum: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResponse {
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    /// `invalid_argument`, `capacity`, `not_found`, `io` or `internal`.
    pub kind: String,
    pub message: String,
}
