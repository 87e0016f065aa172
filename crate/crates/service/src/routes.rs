use std::sync::Arc;

use affecton_core::api::{
    ChatMessage, ChatReply, ChatRequest, ChatSession, ErrorBody, GenerateRequest, GenerateResponse, Health, MapRequest,
    MapResponse, RatingNext, SessionCreated, Speaker,
};
use affecton_core::corpus::DialogPair;
use affecton_core::decoder::DecodeMode;
use affecton_core::pipeline::{default_workers, summarize, Engine};
use affecton_core::rating::{RatingError, RatingRecord, RatingReport, RatingSubmission};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use crate::state::{now_millis, AppState, ChatEvent, ServiceConfig, TraceRecord};
use crate::store::Kind;

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(e: impl ToString) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.to_string())
    }

    fn internal(e: impl ToString) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl From<RatingError> for ApiError {
    fn from(e: RatingError) -> Self {
        let status = match e {
            RatingError::Duplicate { .. } => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn engine(state: &AppState) -> ApiResult<Arc<Engine>> {
    state
        .engine
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no model loaded"))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn health(State(state): State<Shared>) -> Json<Health> {
    let rating_items = match &state.ratings {
        Some(book) => book.lock().await.items().len(),
        None => 0,
    };
    Json(Health {
        model_loaded: state.engine.is_some(),
        rating_items,
    })
}

async fn generate(
    State(state): State<Shared>,
    body: Result<Json<GenerateRequest>, JsonRejection>,
) -> ApiResult<Json<GenerateResponse>> {
    let Json(req) = body?;
    let config = req
        .steering
        .config(DecodeMode::FreeRunning)
        .map_err(ApiError::bad_request)?;
    let engine = engine(&state)?;
    let generation = blocking(move || engine.generate(&req.source, &config).map_err(ApiError::bad_request)).await?;
    Ok(Json(GenerateResponse {
        response: generation.text,
        tokens: generation.tokens,
        config,
        trace: req.trace.then_some(generation.traces),
    }))
}

async fn map_corpus(
    State(state): State<Shared>,
    body: Result<Json<MapRequest>, JsonRejection>,
) -> ApiResult<Json<MapResponse>> {
    let Json(req) = body?;
    let config = req
        .steering
        .config(DecodeMode::TeacherForced)
        .map_err(ApiError::bad_request)?;
    let engine = engine(&state)?;
    let pairs: Vec<DialogPair> = req.pairs.iter().map(DialogPair::from).collect();
    let mapped = blocking(move || {
        engine
            .map_corpus(&pairs, &config, req.trace, default_workers())
            .map_err(ApiError::bad_request)
    })
    .await?;
    let summary = summarize(&mapped, 2);
    Ok(Json(MapResponse { mapped, summary }))
}

async fn create_session(State(state): State<Shared>) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let session = ChatSession {
        session_id: uuid::Uuid::new_v4().to_string(),
        created_at: now_millis(),
        history: Vec::new(),
    };
    state
        .store
        .append(
            Kind::Chat,
            &ChatEvent::Created {
                session_id: session.session_id.clone(),
                created_at: session.created_at,
            },
        )
        .map_err(ApiError::internal)?;
    let id = session.session_id.clone();
    state
        .sessions
        .write()
        .await
        .insert(id.clone(), Arc::new(tokio::sync::Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id })))
}

async fn session_handle(state: &AppState, id: &str) -> ApiResult<crate::state::SessionHandle> {
    state
        .sessions
        .read()
        .await
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id}")))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<ChatSession>> {
    let handle = session_handle(&state, &id).await?;
    let session = handle.lock().await.clone();
    Ok(Json(session))
}

async fn post_message(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<ChatRequest>, JsonRejection>,
) -> ApiResult<Json<ChatReply>> {
    let handle = session_handle(&state, &id).await?;
    let Json(req) = body?;
    let config = req
        .steering
        .config(DecodeMode::FreeRunning)
        .map_err(ApiError::bad_request)?;
    let engine = engine(&state)?;

    // Holding the session lock serializes turns within one session.
    let mut session = handle.lock().await;
    let text = req.text.clone();
    let generation = blocking(move || engine.generate(&text, &config).map_err(ApiError::bad_request)).await?;
    let trace_id = uuid::Uuid::new_v4().to_string();
    let user = ChatMessage {
        speaker: Speaker::User,
        text: req.text,
        config,
        trace_id: None,
        timestamp: now_millis(),
    };
    let agent = ChatMessage {
        speaker: Speaker::Agent,
        text: generation.text.clone(),
        config,
        trace_id: Some(trace_id.clone()),
        timestamp: now_millis(),
    };
    let store = &state.store;
    store
        .append(
            Kind::Traces,
            &TraceRecord {
                trace_id: trace_id.clone(),
                steps: generation.traces.clone(),
            },
        )
        .map_err(ApiError::internal)?;
    for message in [&user, &agent] {
        store
            .append(
                Kind::Chat,
                &ChatEvent::Message {
                    session_id: id.clone(),
                    message: message.clone(),
                },
            )
            .map_err(ApiError::internal)?;
    }
    session.history.push(user);
    session.history.push(agent);
    state
        .traces
        .write()
        .await
        .insert(trace_id.clone(), Arc::new(generation.traces.clone()));
    Ok(Json(ChatReply {
        reply: generation.text,
        trace_id,
        trace: generation.traces,
        config,
    }))
}

async fn get_trace(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let steps = state
        .traces
        .read()
        .await
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown trace {id}")))?;
    let mut body = String::new();
    for step in steps.iter() {
        body.push_str(&serde_json::to_string(step).map_err(ApiError::internal)?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

fn ratings(state: &AppState) -> ApiResult<&tokio::sync::Mutex<affecton_core::rating::RatingBook>> {
    state
        .ratings
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no rating items loaded"))
}

#[derive(Debug, Deserialize)]
struct RaterQuery {
    #[serde(default)]
    rater: String,
}

async fn rating_next(State(state): State<Shared>, Query(q): Query<RaterQuery>) -> ApiResult<Json<RatingNext>> {
    let prompt = ratings(&state)?.lock().await.next_prompt(&q.rater)?;
    Ok(Json(RatingNext {
        rater_id: q.rater,
        done: prompt.is_none(),
        prompt,
    }))
}

async fn rating_submit(
    State(state): State<Shared>,
    body: Result<Json<RatingSubmission>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<RatingRecord>)> {
    let Json(sub) = body?;
    let mut book = ratings(&state)?.lock().await;
    let record = book.check(&sub, now_millis())?;
    state.store.append(Kind::Ratings, &record).map_err(ApiError::internal)?;
    book.insert(record.clone())?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn rating_export(State(state): State<Shared>) -> ApiResult<Json<RatingReport>> {
    let book = ratings(&state)?.lock().await;
    Ok(Json(book.report(state.golden_threshold)))
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if origins.is_empty() {
        return layer.allow_origin(Any);
    }
    let list: Vec<HeaderValue> = origins.iter().filter_map(|o| o.parse().ok()).collect();
    layer.allow_origin(AllowOrigin::list(list))
}

pub fn router(state: Arc<AppState>, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/generate", post(generate))
        .route("/map", post(map_corpus))
        .route("/chat/sessions", post(create_session))
        .route("/chat/sessions/{id}", get(get_session))
        .route("/chat/sessions/{id}/messages", post(post_message))
        .route("/traces/{id}", get(get_trace))
        .route("/rating/next", get(rating_next))
        .route("/rating", post(rating_submit))
        .route("/rating/export", get(rating_export));
    let mut app = Router::new().nest("/api", api).with_state(state);
    if let Some(dir) = &config.ui_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.layer(cors(&config.cors_origins)).layer(TraceLayer::new_for_http())
}
