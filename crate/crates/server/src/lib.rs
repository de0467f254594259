//! HTTP session service: a human plays the learner while the teacher plans
//! against its belief about them.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/health` | | `{"status":"ok","api_version":1}` |
//! | POST | `/v1/sessions` | [`CreateSession`] | 201, [`SessionView`] |
//! | GET | `/v1/sessions/{id}` | | [`SessionView`] |
//! | POST | `/v1/sessions/{id}/respond` | [`RespondRequest`] | [`SessionView`] |
//! | POST | `/v1/sessions/{id}/end` | | [`EndReport`] |
//! | GET | `/v1/sessions/{id}/episode.csv` | | `text/csv` |
//!
//! Errors are `{"error":{"code":..,"message":..}}` with 404 for unknown
//! sessions, 409 for stale, duplicate or late responses and 422 for invalid
//! configurations.

mod error;
mod session;
mod tutor;

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Deserializer, Serialize};
use tokio::sync::Mutex;

use enlighten_core::config::RunConfig;

pub use error::ApiError;
pub use session::{
    manipulation_estimate, replay, BeliefView, CreateSession, EndReport, Entry, SessionSpec, SessionView, StepView,
    SuggestionView, TerminalView, VariableView, API_VERSION,
};
pub use tutor::{tutor_payload, Heatmap, TutorPayload, TUTOR_TEXT};

/// Body of `POST /v1/sessions/{id}/respond`; `response` is a boolean or 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RespondRequest {
    pub step: usize,
    #[serde(deserialize_with = "bool_or_bit")]
    pub response: bool,
}

fn bool_or_bit<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Bool(bool),
        Int(u8),
    }
    match Raw::deserialize(d)? {
        Raw::Bool(b) => Ok(b),
        Raw::Int(0) => Ok(false),
        Raw::Int(1) => Ok(true),
        Raw::Int(n) => Err(serde::de::Error::custom(format!("response must be 0 or 1, got {n}"))),
    }
}

type Shared = Arc<Mutex<Entry>>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    defaults: RunConfig,
    log_dir: Option<PathBuf>,
    max_sessions: usize,
    sessions: RwLock<HashMap<String, Shared>>,
}

impl AppState {
    pub fn new(defaults: RunConfig) -> Self {
        let log_dir = defaults.server.log_dir.clone();
        let max_sessions = defaults.server.max_sessions;
        Self { inner: Arc::new(Inner { defaults, log_dir, max_sessions, sessions: RwLock::new(HashMap::new()) }) }
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        let map = self.inner.sessions.read().expect("session registry poisoned");
        map.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().expect("session registry poisoned").len()
    }

    fn persist(&self, entry: &mut Entry) {
        if let Some(dir) = &self.inner.log_dir {
            if let Err(e) = entry.persist(dir) {
                tracing::warn!(session = %entry.id, error = %e, "failed to write session log");
            }
        }
    }

    /// Writes logs of every session not yet persisted in its final state.
    pub async fn flush_logs(&self) {
        let all: Vec<Shared> = self.inner.sessions.read().expect("session registry poisoned").values().cloned().collect();
        for s in all {
            let mut e = s.lock().await;
            if !e.persisted {
                self.persist(&mut e);
            }
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_state))
        .route("/v1/sessions/{id}/respond", post(post_response))
        .route("/v1/sessions/{id}/end", post(end_session))
        .route("/v1/sessions/{id}/episode.csv", get(episode_csv))
        .with_state(state)
}

async fn health() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok", "api_version": API_VERSION }))
}

/// Runs planner work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))
}

async fn create_session(
    State(state): State<AppState>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    if state.session_count() >= state.inner.max_sessions {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "capacity", "too many open sessions"));
    }
    let spec = SessionSpec::resolve(&req, &state.inner.defaults);
    let id = uuid::Uuid::new_v4().simple().to_string();
    let mut entry = blocking(move || Entry::new(id, spec)).await??;
    if entry.session.terminal().is_some() {
        state.persist(&mut entry);
    }
    let view = entry.view();
    tracing::info!(session = %entry.id, teacher = %entry.spec.teacher, "session created");
    state
        .inner
        .sessions
        .write()
        .expect("session registry poisoned")
        .insert(entry.id.clone(), Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let s = state.get(&id)?;
    let e = s.lock().await;
    Ok(Json(e.view()))
}

async fn post_response(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RespondRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let s = state.get(&id)?;
    let mut guard = s.clone().lock_owned().await;
    let (guard_back, result) = blocking(move || {
        let r = guard.respond(req.step, req.response);
        (guard, r)
    })
    .await?;
    let mut e = guard_back;
    result?;
    if e.session.terminal().is_some() {
        state.persist(&mut e);
    }
    Ok(Json(e.view()))
}

async fn end_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<EndReport>, ApiError> {
    let s = state.get(&id)?;
    let mut e = s.lock().await;
    e.close();
    if !e.persisted {
        state.persist(&mut e);
    }
    Ok(Json(EndReport { session: e.view(), terminal: e.terminal_view(), csv: e.csv() }))
}

async fn episode_csv(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let s = state.get(&id)?;
    let e = s.lock().await;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], e.csv()))
}

/// Serves until `shutdown` resolves, then flushes session logs.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(state.clone());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    state.flush_logs().await;
    Ok(())
}
