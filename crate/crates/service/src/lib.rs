//! HTTP/JSON front end for the optimizer.
//!
//! Ask/tell sessions keep optimizer state on the server between requests, so
//! a client only ships candidates and fitness values. Whole runs and
//! experiment batches execute on the blocking pool.
//!
//! | method | path | body → response |
//! |---|---|---|
//! | GET | `/health` | → `Health` |
//! | POST | `/v1/evaluate` | `EvaluateRequest` → `EvaluateResponse` |
//! | POST | `/v1/memory-slots` | `MemorySlotsRequest` → `MemorySlotsResponse` |
//! | POST | `/v1/sessions` | `CreateSession` → `SessionCreated` |
//! | GET/DELETE | `/v1/sessions/{id}` | → `SessionStatus` / 204 |
//! | POST | `/v1/sessions/{id}/ask` | → `Population` |
//! | POST | `/v1/sessions/{id}/tell` | `TellRequest` → `SessionStatus` |
//! | GET | `/v1/sessions/{id}/checkpoint` | → `Checkpoint` |
//! | POST | `/v1/sessions/restore` | `Checkpoint` → `SessionCreated` |
//! | POST | `/v1/optimize` | `OptimizeRequest` → `RunRecord` |
//! | POST | `/v1/experiments` | `ExperimentSpec` → `ExperimentResponse` |
//!
//! Errors come back as `ErrorBody` with a 4xx/5xx status.

pub mod api;
#[cfg(feature = "server")]
mod server;

#[cfg(feature = "server")]
pub use server::{router, router_with_state, serve, ApiError, AppState, MAX_SESSIONS, MAX_SESSION_DIM};
