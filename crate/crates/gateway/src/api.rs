//! HTTP JSON API over a shared engine and a session store.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use taskbot::dialogue::{
    valid_session_id, DialogueError, DialogueState, ScreenPayload, SeekFragment, Session, SessionStore,
};
use taskbot::engine::{EngineError, TurnDebug, TurnInput};
use taskbot::video::{seek_payload, ChannelRanks, VideoError};
use taskbot::DefaultEngine;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("session {0} is processing another turn")]
    SessionBusy(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} already exists")]
    SessionExists(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("store: {0}")]
    Store(#[from] DialogueError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("worker failed: {0}")]
    Worker(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::SessionBusy(_) | ApiError::SessionExists(_) => StatusCode::CONFLICT,
            ApiError::SessionNotFound(_) | ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) | ApiError::Store(DialogueError::InvalidSessionId(_)) => StatusCode::BAD_REQUEST,
            ApiError::Store(_) | ApiError::Engine(_) | ApiError::Worker(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::SessionBusy(_) => "session_busy",
            ApiError::SessionNotFound(_) => "session_not_found",
            ApiError::SessionExists(_) => "session_exists",
            ApiError::BadRequest(_) | ApiError::Store(DialogueError::InvalidSessionId(_)) => "bad_request",
            ApiError::NotFound(_) => "not_found",
            ApiError::Store(_) => "store_error",
            ApiError::Engine(_) => "engine_error",
            ApiError::Worker(_) => "worker_error",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.code(), "message": self.to_string() }))).into_response()
    }
}

/// Engine, store and the set of sessions with a turn in flight.
pub struct AppState {
    pub engine: Arc<DefaultEngine>,
    pub store: Arc<dyn SessionStore>,
    busy: Mutex<HashSet<String>>,
    next_id: AtomicU64,
}

/// Held while a session has a turn in flight; releases the session on drop.
pub struct SessionGuard {
    state: Arc<AppState>,
    id: String,
}

impl Drop for SessionGuard {
    fn drop(&mut self) {
        self.state.busy.lock().remove(&self.id);
    }
}

impl AppState {
    pub fn new(engine: Arc<DefaultEngine>, store: Arc<dyn SessionStore>) -> Arc<Self> {
        Arc::new(Self { engine, store, busy: Mutex::new(HashSet::new()), next_id: AtomicU64::new(0) })
    }

    /// Claims `id` for one turn. Fails fast instead of queueing.
    pub fn lock_session(self: &Arc<Self>, id: &str) -> Result<SessionGuard, ApiError> {
        if !self.busy.lock().insert(id.to_string()) {
            return Err(ApiError::SessionBusy(id.to_string()));
        }
        Ok(SessionGuard { state: Arc::clone(self), id: id.to_string() })
    }

    fn fresh_id(&self) -> String {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or_default();
        format!("s-{nanos:x}-{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/turn", post(turn))
        .route("/search", get(search))
        .route("/videos/{id}/query", post(video_query))
        .with_state(state)
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "tasks": state.engine.catalog().len(),
        "videos": state.engine.video().map(|v| v.video_ids().count()).unwrap_or(0),
    }))
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateSession {
    pub session_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub state: DialogueState,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?
    };
    let id = req.session_id.unwrap_or_else(|| state.fresh_id());
    if !valid_session_id(&id) {
        return Err(ApiError::BadRequest(format!("invalid session id {id:?}")));
    }
    let _guard = state.lock_session(&id)?;
    let st = Arc::clone(&state);
    let created = blocking(move || {
        if st.store.get(&id)?.is_some() {
            return Err(ApiError::SessionExists(id));
        }
        let session = Session::new(id.clone());
        st.store.put(&session)?;
        Ok(SessionCreated { session_id: id, state: session.state() })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    let st = Arc::clone(&state);
    let session = blocking(move || st.store.get(&id)?.ok_or(ApiError::SessionNotFound(id))).await?;
    Ok(Json(session))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Voice,
    Tap,
}

/// Either an utterance or a tap target. Neither means an empty utterance,
/// which opens a fresh session with the greeting.
#[derive(Debug, Default, Deserialize)]
pub struct TurnRequest {
    pub utterance: Option<String>,
    pub tap_target: Option<String>,
    pub modality: Option<Modality>,
    #[serde(default)]
    pub debug: bool,
}

impl TurnRequest {
    pub fn input(&self) -> Result<TurnInput, ApiError> {
        match (&self.utterance, &self.tap_target, self.modality) {
            (Some(_), Some(_), _) => Err(ApiError::BadRequest("send either utterance or tap_target".into())),
            (Some(_), None, Some(Modality::Tap)) => Err(ApiError::BadRequest("tap turns need tap_target".into())),
            (None, Some(_), Some(Modality::Voice)) => Err(ApiError::BadRequest("voice turns need utterance".into())),
            (None, Some(t), _) => Ok(TurnInput::Tap(t.clone())),
            (u, None, _) => Ok(TurnInput::Utterance(u.clone().unwrap_or_default())),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TurnResponse {
    pub session_id: String,
    pub text: String,
    pub state: DialogueState,
    pub screen: ScreenPayload,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub debug: Option<TurnDebug>,
}

async fn turn(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TurnRequest>,
) -> Result<Json<TurnResponse>, ApiError> {
    let input = req.input()?;
    let guard = state.lock_session(&id)?;
    let st = Arc::clone(&state);
    let resp = blocking(move || {
        let _guard = guard;
        let mut session = st.store.get(&id)?.ok_or_else(|| ApiError::SessionNotFound(id.clone()))?;
        let out = st.engine.handle_turn(&mut session, &input)?;
        st.store.put(&session)?;
        Ok(TurnResponse {
            session_id: id,
            text: out.text,
            state: out.state,
            screen: out.screen,
            debug: req.debug.then_some(out.debug),
        })
    })
    .await?;
    Ok(Json(resp))
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub q: String,
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    pub title: String,
    pub score: f64,
}

async fn search(
    State(state): State<Arc<AppState>>,
    Query(p): Query<SearchParams>,
) -> Result<Json<serde_json::Value>, ApiError> {
    if p.q.trim().is_empty() {
        return Err(ApiError::BadRequest("q must not be empty".into()));
    }
    let k = p.k.unwrap_or(state.engine.config().search_k).clamp(1, 50);
    let st = Arc::clone(&state);
    let (terms, hits) = blocking(move || {
        let catalog = st.engine.catalog();
        let outcome = catalog.search(&p.q, k);
        let hits: Vec<SearchHit> = outcome
            .ranked
            .entries()
            .iter()
            .map(|e| SearchHit {
                title: catalog.tasks().find(|t| t.id == e.id).map(|t| t.title.clone()).unwrap_or_default(),
                id: e.id.clone(),
                score: e.score,
            })
            .collect();
        Ok((outcome.terms, hits))
    })
    .await?;
    Ok(Json(json!({ "terms": terms, "results": hits })))
}

#[derive(Debug, Deserialize)]
pub struct VideoQuery {
    pub q: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MomentResponse {
    pub video_id: String,
    pub timestamp_s: f64,
    pub caption: String,
    pub fused_score: f64,
    pub channel_ranks: ChannelRanks,
    pub seek: SeekFragment,
}

async fn video_query(
    State(state): State<Arc<AppState>>,
    Path(video_id): Path<String>,
    Json(body): Json<VideoQuery>,
) -> Result<Json<MomentResponse>, ApiError> {
    let st = Arc::clone(&state);
    let resp = blocking(move || {
        let index = st.engine.video().ok_or_else(|| ApiError::NotFound("no video index loaded".into()))?;
        let m = index.query_moment(&video_id, &body.q, None).map_err(|e| match e {
            VideoError::UnknownVideo(_) | VideoError::NoMatch => ApiError::NotFound(e.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        })?;
        Ok(MomentResponse {
            seek: seek_payload(&m),
            video_id,
            timestamp_s: m.timestamp_s,
            caption: m.frame.caption,
            fused_score: m.fused_score,
            channel_ranks: m.channel_ranks,
        })
    })
    .await?;
    Ok(Json(resp))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Worker(e.to_string()))?
}
