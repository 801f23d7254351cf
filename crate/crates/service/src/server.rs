use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;

use lmcma_core::bench::BenchmarkProblem;
use lmcma_core::harness::{memory_slots, run_experiment, ExperimentSpec, RunRecord};
use lmcma_core::optimizer::{optimize, AnyOptimizer, AskTell, Checkpoint, Population, RunSettings};
use lmcma_core::{Error, RandomSource};

use crate::api::*;

/// Live sessions beyond this are refused.
pub const MAX_SESSIONS: usize = 1024;
/// Sessions hold `O(m·n)` state and `O(λ·n)` candidates.
pub const MAX_SESSION_DIM: usize = 1_000_000;
const BODY_LIMIT: usize = 512 * 1024 * 1024;

type Session = Arc<Mutex<AnyOptimizer>>;

#[derive(Default)]
struct Sessions {
    next_id: AtomicU64,
    map: Mutex<HashMap<String, Session>>,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Sessions>,
}

/// Error with an HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            kind: "not_found",
            message: format!("no session {id:?}"),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "internal",
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::InvalidArgument(_) | Error::Serde(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            Error::Capacity { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "capacity"),
            Error::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            Error::DegenerateVector { .. } | Error::Internal(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        Self {
            status,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            kind: "invalid_argument",
            message: r.body_text(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(kind = self.kind, "{}", self.message);
        }
        let body = ErrorBody {
            error: ErrorDetail {
                kind: self.kind.to_string(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub fn router() -> Router {
    router_with_state(AppState::default())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/memory-slots", post(slots))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/restore", post(restore_session))
        .route("/v1/sessions/{id}", get(session_status).delete(delete_session))
        .route("/v1/sessions/{id}/ask", post(ask))
        .route("/v1/sessions/{id}/tell", post(tell))
        .route("/v1/sessions/{id}/checkpoint", get(checkpoint))
        .route("/v1/optimize", post(run_optimize))
        .route("/v1/experiments", post(experiments))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Binds `addr` and serves until the process exits. Returns the bound address
/// through `on_bound` before accepting connections.
pub async fn serve(addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router()).await
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn evaluate(body: Result<Json<EvaluateRequest>, JsonRejection>) -> ApiResult<EvaluateResponse> {
    let Json(req) = body?;
    blocking(move || {
        let p = BenchmarkProblem::from_id(req.function, req.x.len(), req.rotation_seed)?;
        Ok(EvaluateResponse { f: p.evaluate(&req.x)? })
    })
    .await
    .map(Json)
}

async fn slots(body: Result<Json<MemorySlotsRequest>, JsonRejection>) -> ApiResult<MemorySlotsResponse> {
    let Json(r) = body?;
    Ok(Json(MemorySlotsResponse {
        slots: memory_slots(r.algorithm, r.n, r.m, r.lambda),
    }))
}

fn status_of(opt: &AnyOptimizer) -> SessionStatus {
    SessionStatus {
        algorithm: opt.algorithm(),
        n: opt.dim(),
        lambda: opt.lambda(),
        generation: opt.generation(),
        evaluations: opt.evaluations(),
        sigma: opt.sigma(),
        mean: opt.mean().to_vec(),
        best: opt.best().cloned(),
        pending: opt.pending().is_some(),
    }
}

fn insert(state: &AppState, opt: AnyOptimizer) -> Result<SessionCreated, ApiError> {
    let status = status_of(&opt);
    let mut map = state.sessions.map.lock().expect("session map poisoned");
    if map.len() >= MAX_SESSIONS {
        return Err(Error::Capacity {
            what: "live sessions",
            requested: map.len() + 1,
            cap: MAX_SESSIONS,
        }
        .into());
    }
    let id = format!("s{}", state.sessions.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    map.insert(id.clone(), Arc::new(Mutex::new(opt)));
    tracing::info!(%id, n = status.n, algorithm = %status.algorithm, "session created");
    Ok(SessionCreated { id, status })
}

fn lookup(state: &AppState, id: &str) -> Result<Session, ApiError> {
    let map = state.sessions.map.lock().expect("session map poisoned");
    map.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
}

fn check_dim(n: usize) -> Result<(), ApiError> {
    if n > MAX_SESSION_DIM {
        return Err(Error::Capacity {
            what: "session dimension",
            requested: n,
            cap: MAX_SESSION_DIM,
        }
        .into());
    }
    Ok(())
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<SessionCreated> {
    let Json(req) = body?;
    check_dim(req.mean.len())?;
    blocking(move || {
        let cfg = req.algorithm.resolve(req.mean.len())?;
        let opt = cfg.build(req.mean, req.sigma, RandomSource::new(req.seed))?;
        insert(&state, opt)
    })
    .await
    .map(Json)
}

async fn restore_session(
    State(state): State<AppState>,
    raw: String,
) -> ApiResult<SessionCreated> {
    blocking(move || {
        let cp = Checkpoint::from_json(&raw)?;
        check_dim(cp.optimizer.dim())?;
        insert(&state, cp.optimizer)
    })
    .await
    .map(Json)
}

async fn session_status(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionStatus> {
    let s = lookup(&state, &id)?;
    let opt = s.lock().expect("session poisoned");
    Ok(Json(status_of(&opt)))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let removed = state.sessions.map.lock().expect("session map poisoned").remove(&id);
    match removed {
        Some(_) => {
            tracing::info!(%id, "session deleted");
            Ok(StatusCode::NO_CONTENT)
        }
        None => Err(ApiError::not_found(&id)),
    }
}

async fn ask(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Population> {
    let s = lookup(&state, &id)?;
    blocking(move || Ok(s.lock().expect("session poisoned").ask().clone()))
        .await
        .map(Json)
}

async fn tell(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<TellRequest>, JsonRejection>,
) -> ApiResult<SessionStatus> {
    let Json(req) = body?;
    let s = lookup(&state, &id)?;
    blocking(move || {
        let mut opt = s.lock().expect("session poisoned");
        opt.tell(&req.fitness)?;
        Ok(status_of(&opt))
    })
    .await
    .map(Json)
}

async fn checkpoint(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Checkpoint> {
    let s = lookup(&state, &id)?;
    let opt = s.lock().expect("session poisoned").clone();
    Ok(Json(Checkpoint::new(opt)))
}

async fn run_optimize(body: Result<Json<OptimizeRequest>, JsonRejection>) -> ApiResult<RunRecord> {
    let Json(req) = body?;
    blocking(move || {
        let rotation_seed = req.function.rotated.then(|| req.rotation_seed.unwrap_or(req.seed));
        let mut problem = BenchmarkProblem::from_id(req.function, req.n, rotation_seed)?;
        if let Some(s) = req.sigma0 {
            problem = problem.with_sigma0(s)?;
        }
        let cfg = req.algorithm.resolve(req.n)?;
        let settings = RunSettings {
            seed: req.seed,
            budget: req.budget,
            target_f: req.target_f,
            record_timing: req.record_timing,
            emit_eigenspectrum: req.emit_eigenspectrum,
        };
        Ok(optimize(&problem, &cfg, &settings)?)
    })
    .await
    .map(Json)
}

async fn experiments(body: Result<Json<ExperimentSpec>, JsonRejection>) -> ApiResult<ExperimentResponse> {
    let Json(spec) = body?;
    tracing::info!(cells = spec.cells.len(), out = ?spec.out_dir, "experiment started");
    blocking(move || {
        let reports = run_experiment(&spec)?;
        Ok(ExperimentResponse {
            cells: reports.into_iter().map(|r| r.summary).collect(),
        })
    })
    .await
    .map(Json)
}
