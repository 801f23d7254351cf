//! Thin async client for the optimizer service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), lmcma_client::ClientError> {
//! use lmcma_client::Client;
//! use lmcma_service::api::{CreateSession, TellRequest};
//!
//! let client = Client::new("http://127.0.0.1:8080");
//! let session = client
//!     .create_session(&CreateSession {
//!         algorithm: Default::default(),
//!         mean: vec![1.0; 10],
//!         sigma: 0.5,
//!         seed: 7,
//!     })
//!     .await?;
//! let pop = client.ask(&session.id).await?;
//! let fitness = pop.xs().map(|x| x.iter().map(|v| v * v).sum()).collect();
//! client.tell(&session.id, &TellRequest { fitness }).await?;
//! # Ok(())
//! # }
//! ```

use serde::de::DeserializeOwned;
use serde::Serialize;

use lmcma_core::harness::{ExperimentSpec, RunRecord};
use lmcma_core::optimizer::{Checkpoint, Population};
use lmcma_service::api::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error body.
    #[error("{kind} ({status}): {message}")]
    Api {
        status: u16,
        kind: String,
        message: String,
    },
    #[error("malformed response: {0}")]
    Decode(String),
}

impl ClientError {
    /// The request itself was rejected (bad arguments, capacity, unknown session).
    pub fn is_client_error(&self) -> bool {
        matches!(self, ClientError::Api { status, .. } if (400..500).contains(status))
    }
}

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_http(base_url, reqwest::Client::new())
    }

    pub fn with_http(base_url: impl Into<String>, http: reqwest::Client) -> Self {
        let base = base_url.into().trim_end_matches('/').to_string();
        Self { base, http }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let body = Self::success_text(resp).await?;
        serde_json::from_str(&body).map_err(|e| ClientError::Decode(e.to_string()))
    }

    /// Body of a successful response; error bodies become `ClientError::Api`.
    async fn success_text(resp: reqwest::Response) -> Result<String, ClientError> {
        let status = resp.status();
        let body = resp.text().await?;
        if status.is_success() {
            return Ok(body);
        }
        match serde_json::from_str::<ErrorBody>(&body) {
            Ok(e) => Err(ClientError::Api {
                status: status.as_u16(),
                kind: e.error.kind,
                message: e.error.message,
            }),
            Err(_) => Err(ClientError::Api {
                status: status.as_u16(),
                kind: "http".into(),
                message: body,
            }),
        }
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send().await?).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    pub async fn evaluate(&self, req: &EvaluateRequest) -> Result<f64, ClientError> {
        let r: EvaluateResponse = self.post("/v1/evaluate", req).await?;
        Ok(r.f)
    }

    pub async fn memory_slots(&self, req: &MemorySlotsRequest) -> Result<u64, ClientError> {
        let r: MemorySlotsResponse = self.post("/v1/memory-slots", req).await?;
        Ok(r.slots)
    }

    pub async fn create_session(&self, req: &CreateSession) -> Result<SessionCreated, ClientError> {
        self.post("/v1/sessions", req).await
    }

    pub async fn ask(&self, id: &str) -> Result<Population, ClientError> {
        self.post(&format!("/v1/sessions/{id}/ask"), &()).await
    }

    pub async fn tell(&self, id: &str, req: &TellRequest) -> Result<SessionStatus, ClientError> {
        self.post(&format!("/v1/sessions/{id}/tell"), req).await
    }

    pub async fn status(&self, id: &str) -> Result<SessionStatus, ClientError> {
        self.get(&format!("/v1/sessions/{id}")).await
    }

    pub async fn checkpoint(&self, id: &str) -> Result<Checkpoint, ClientError> {
        let resp = self
            .http
            .get(format!("{}/v1/sessions/{id}/checkpoint", self.base))
            .send()
            .await?;
        let text = Self::success_text(resp).await?;
        Checkpoint::from_json(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub async fn restore(&self, checkpoint: &Checkpoint) -> Result<SessionCreated, ClientError> {
        let body = checkpoint.to_json().map_err(|e| ClientError::Decode(e.to_string()))?;
        let resp = self
            .http
            .post(format!("{}/v1/sessions/restore", self.base))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn delete_session(&self, id: &str) -> Result<(), ClientError> {
        let resp = self
            .http
            .delete(format!("{}/v1/sessions/{id}", self.base))
            .send()
            .await?;
        Self::success_text(resp).await.map(|_| ())
    }

    pub async fn optimize(&self, req: &OptimizeRequest) -> Result<RunRecord, ClientError> {
        self.post("/v1/optimize", req).await
    }

    pub async fn run_experiment(&self, spec: &ExperimentSpec) -> Result<ExperimentResponse, ClientError> {
        self.post("/v1/experiments", spec).await
    }
}
