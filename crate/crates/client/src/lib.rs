//! Thin async client for the affecton HTTP service.
//!
//! Request and response bodies are the shared types from
//! [`affecton_core::api`] and [`affecton_core::rating`].

use affecton_core::api::{
    ChatReply, ChatRequest, ChatSession, ErrorBody, GenerateRequest, GenerateResponse, Health, MapRequest, MapResponse,
    RatingNext, SessionCreated,
};
use affecton_core::decoder::StepTrace;
use affecton_core::rating::{RatingRecord, RatingReport, RatingSubmission};
use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with a non-success status.
    #[error("{status}: {message}")]
    Api { status: StatusCode, message: String },
    #[error("bad response body: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
            ClientError::Decode(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client::with_http(base, reqwest::Client::new())
    }

    pub fn with_http(base: impl Into<String>, http: reqwest::Client) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Client { base, http }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}/api{path}", self.base))
    }

    async fn send(&self, req: RequestBuilder) -> Result<reqwest::Response> {
        let res = req.send().await?;
        let status = res.status();
        if status.is_success() {
            return Ok(res);
        }
        let text = res.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|b| b.error)
            .unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let bytes = self.send(req).await?.bytes().await?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        self.json(self.request(Method::POST, path).json(body)).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.json(self.request(Method::GET, path)).await
    }

    pub async fn health(&self) -> Result<Health> {
        self.get("/health").await
    }

    pub async fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse> {
        self.post("/generate", req).await
    }

    pub async fn map(&self, req: &MapRequest) -> Result<MapResponse> {
        self.post("/map", req).await
    }

    pub async fn create_session(&self) -> Result<SessionCreated> {
        self.json(self.request(Method::POST, "/chat/sessions")).await
    }

    pub async fn session(&self, id: &str) -> Result<ChatSession> {
        self.get(&format!("/chat/sessions/{id}")).await
    }

    pub async fn chat(&self, session_id: &str, req: &ChatRequest) -> Result<ChatReply> {
        self.post(&format!("/chat/sessions/{session_id}/messages"), req).await
    }

    /// Fetches a stored decoding trace, one step per NDJSON line.
    pub async fn trace(&self, trace_id: &str) -> Result<Vec<StepTrace>> {
        let text = self
            .send(self.request(Method::GET, &format!("/traces/{trace_id}")))
            .await?
            .text()
            .await?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| ClientError::Decode(e.to_string())))
            .collect()
    }

    pub async fn next_rating(&self, rater_id: &str) -> Result<RatingNext> {
        self.json(self.request(Method::GET, "/rating/next").query(&[("rater", rater_id)]))
            .await
    }

    pub async fn submit_rating(&self, sub: &RatingSubmission) -> Result<RatingRecord> {
        self.post("/rating", sub).await
    }

    pub async fn export_ratings(&self) -> Result<RatingReport> {
        self.get("/rating/export").await
    }
}
