//! HTTP session API.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::Result;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, FixedOffset, Utc};
use hragent_core::backends::remote::{RemoteBackend, RemoteConfig};
use hragent_core::engine::{
    AgentAction, Backends, ConfirmDecision, Engine, EngineConfig, EngineError, HandlerRegistry, SessionSnapshot,
};
use hragent_core::normalize::ReferenceContext;
use hragent_core::schema::{DialogueState, TaskSchema, TerminationReason, Transcript};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{info, warn};

use crate::config::ServiceConfig;
use crate::store::{EventKind, SessionEvent, SessionStore};

/// Baseline backends, with selection, extraction and completion sent to the
/// remote host when one is configured.
pub fn build_backends(cfg: &ServiceConfig) -> Backends {
    let mut backends = Backends::baseline();
    if let Some(url) = &cfg.backend_url {
        let mut rc = RemoteConfig::new(url.clone());
        rc.timeout_ms = cfg.backend_timeout_ms;
        let remote = Arc::new(RemoteBackend::new(rc));
        backends.selector = remote.clone();
        backends.extractor = remote.clone();
        backends.completer = Some(remote);
    }
    backends
}

struct SessionMeta {
    created_at: DateTime<Utc>,
    last_active_at: DateTime<Utc>,
    /// Held across the engine call and the persistence write, so events land
    /// in the order the turns were processed.
    lock: Arc<Mutex<()>>,
}

pub struct AppState {
    engine: Engine,
    schemas: BTreeMap<String, TaskSchema>,
    engine_config: EngineConfig,
    store: Option<SessionStore>,
    meta: Mutex<HashMap<String, SessionMeta>>,
    idle_timeout: Duration,
}

impl AppState {
    /// Builds the service and replays any persisted sessions.
    pub fn new(cfg: &ServiceConfig, schemas: BTreeMap<String, TaskSchema>) -> Result<Arc<Self>> {
        let engine = Engine::new(build_backends(cfg), HandlerRegistry::with_stubs(cfg.audit_dir.clone()));
        let store = cfg.persistence_dir.as_deref().map(SessionStore::open).transpose()?;
        let state = Self {
            engine,
            schemas,
            engine_config: cfg.engine.clone(),
            store,
            meta: Mutex::new(HashMap::new()),
            idle_timeout: Duration::from_secs(cfg.idle_timeout_secs),
        };
        if let Some(store) = &state.store {
            let events = store.load_live()?;
            info!(sessions = events.len(), "replayed persisted sessions");
            for ev in events {
                state.meta.lock().expect("meta").insert(
                    ev.snapshot.session_id.clone(),
                    SessionMeta {
                        created_at: ev.snapshot.started_at,
                        last_active_at: ev.at,
                        lock: Arc::new(Mutex::new(())),
                    },
                );
                state.engine.restore(ev.snapshot);
            }
        }
        Ok(Arc::new(state))
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    fn persist(&self, kind: EventKind, snapshot: SessionSnapshot) {
        if let Some(store) = &self.store {
            let id = snapshot.session_id.clone();
            if let Err(e) = store.append(&SessionEvent { kind, at: Utc::now(), snapshot }) {
                warn!(session = %id, error = %e, "failed to persist session event");
            }
        }
    }

    fn session_lock(&self, id: &str) -> Option<Arc<Mutex<()>>> {
        let mut meta = self.meta.lock().expect("meta");
        let m = meta.get_mut(id)?;
        m.last_active_at = Utc::now();
        Some(m.lock.clone())
    }

    /// Drops sessions idle for longer than the configured timeout.
    pub fn expire_idle(&self, now: DateTime<Utc>) -> Vec<String> {
        let expired: Vec<String> = {
            let meta = self.meta.lock().expect("meta");
            meta.iter()
                .filter(|(_, m)| (now - m.last_active_at).to_std().is_ok_and(|d| d > self.idle_timeout))
                .map(|(id, _)| id.clone())
                .collect()
        };
        for id in &expired {
            if let Ok(snap) = self.engine.snapshot(id) {
                self.persist(EventKind::Expired, snap);
            }
            self.engine.remove(id);
            self.meta.lock().expect("meta").remove(id);
            info!(session = %id, "session expired");
        }
        expired
    }

    /// Turn `f` on session `id`, serialized with other calls on it, then persisted.
    fn with_session<F>(&self, id: &str, kind: EventKind, f: F) -> Result<AgentAction, ApiError>
    where
        F: FnOnce(&Engine) -> Result<AgentAction, EngineError>,
    {
        let lock = self.session_lock(id).ok_or_else(|| ApiError::from(EngineError::UnknownSession(id.into())))?;
        let _guard = lock.lock().expect("session lock");
        let action = f(&self.engine)?;
        if let Ok(snap) = self.engine.snapshot(id) {
            self.persist(kind, snap);
        }
        info!(
            session = %id,
            kind = ?action.kind,
            total_ms = action.timing.total_ms,
            backend_ms = action.timing.backend_ms,
            "turn handled"
        );
        Ok(action)
    }
}

#[derive(Debug)]
pub enum ApiError {
    Engine(EngineError),
    UnknownSchema { id: String, known: Vec<String> },
    Unprocessable(String),
    Internal(String),
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError::Engine(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::UnknownSchema { id, known } => (
                StatusCode::NOT_FOUND,
                json!({"error": format!("unknown schema `{id}`"), "schemas": known}),
            ),
            ApiError::Unprocessable(msg) => (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": msg})),
            ApiError::Internal(msg) => (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": msg})),
            ApiError::Engine(e) => {
                let msg = e.to_string();
                match e {
                    EngineError::UnknownSession(_) => (StatusCode::NOT_FOUND, json!({"error": msg})),
                    EngineError::Terminated { reason, wiki_url } => (
                        StatusCode::CONFLICT,
                        json!({"error": msg, "terminated": true, "reason": reason, "wiki_url": wiki_url}),
                    ),
                    EngineError::AlreadyDispatched | EngineError::WrongPhase { .. } => {
                        (StatusCode::CONFLICT, json!({"error": msg}))
                    }
                    EngineError::EmptyMessage | EngineError::UnknownSlot(_) => {
                        (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": msg}))
                    }
                    _ => (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": msg})),
                }
            }
        };
        (status, Json(body)).into_response()
    }
}

/// Response body shared by every endpoint that yields an agent action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub session_id: String,
    pub action: ActionBody,
    pub state: DialogueState,
    pub terminated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<TerminationReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiki_url: Option<String>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBody {
    pub kind: hragent_core::engine::ActionKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Vec<hragent_core::engine::SummaryLine>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipt: Option<hragent_core::engine::DispatchReceipt>,
}

impl ActionResponse {
    fn new(session_id: &str, a: AgentAction) -> Self {
        Self {
            session_id: session_id.to_string(),
            terminated: a.reason.is_some(),
            reason: a.reason,
            wiki_url: a.wiki_url,
            latency_ms: a.timing.total_ms,
            state: a.state_snapshot,
            action: ActionBody {
                kind: a.kind,
                text: a.text,
                slot_id: a.slot_id,
                summary: a.summary,
                receipt: a.receipt,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub schema_id: String,
    pub state: DialogueState,
    pub transcript: Transcript,
    pub created_at: DateTime<Utc>,
    pub last_active_at: DateTime<Utc>,
}

#[derive(Deserialize)]
struct CreateBody {
    schema_id: String,
    /// Defaults to the host clock.
    #[serde(default)]
    reference_datetime: Option<DateTime<FixedOffset>>,
}

#[derive(Deserialize)]
struct MessageBody {
    #[serde(default)]
    text: String,
}

#[derive(Deserialize)]
struct ConfirmBody {
    decision: String,
    #[serde(default)]
    corrections: Vec<String>,
}

fn parse_body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::Unprocessable("request body is empty".into()));
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::Unprocessable(format!("invalid request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn list_schemas(State(app): State<Arc<AppState>>) -> Json<Value> {
    let schemas: Vec<Value> = app
        .schemas
        .values()
        .map(|s| json!({"id": s.id, "domain": s.domain, "dispatch_target": s.dispatch_target, "slots": s.slots.len()}))
        .collect();
    Json(json!({ "schemas": schemas }))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<ActionResponse>), ApiError> {
    let body: CreateBody = parse_body(&body)?;
    let schema = app.schemas.get(&body.schema_id).cloned().ok_or_else(|| ApiError::UnknownSchema {
        id: body.schema_id.clone(),
        known: app.schemas.keys().cloned().collect(),
    })?;
    let ctx = body.reference_datetime.map_or_else(ReferenceContext::host_now, ReferenceContext::new);
    let resp = blocking(move || {
        let schema_id = schema.id.clone();
        let (id, action) = app.engine.start_session(schema, app.engine_config.clone(), ctx)?;
        let now = Utc::now();
        app.meta.lock().expect("meta").insert(
            id.clone(),
            SessionMeta {
                created_at: now,
                last_active_at: now,
                lock: Arc::new(Mutex::new(())),
            },
        );
        if let Ok(snap) = app.engine.snapshot(&id) {
            app.persist(EventKind::Created, snap);
        }
        info!(session = %id, schema = %schema_id, "session created");
        Ok(ActionResponse::new(&id, action))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(resp)))
}

async fn post_message(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActionResponse>, ApiError> {
    let body: MessageBody = parse_body(&body)?;
    if body.text.trim().is_empty() {
        return Err(ApiError::Unprocessable("message text is empty".into()));
    }
    blocking(move || {
        let action = app.with_session(&id, EventKind::Message, |e| e.handle_user_turn(&id, &body.text))?;
        Ok(Json(ActionResponse::new(&id, action)))
    })
    .await
}

async fn confirm(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActionResponse>, ApiError> {
    let body: ConfirmBody = parse_body(&body)?;
    let decision = match body.decision.as_str() {
        "affirm" | "yes" | "confirm" => ConfirmDecision::Affirm,
        "correct" | "edit" => ConfirmDecision::Correct { slots: body.corrections },
        other => return Err(ApiError::Unprocessable(format!("unknown decision `{other}`"))),
    };
    blocking(move || {
        let action = app.with_session(&id, EventKind::Confirm, |e| e.confirm(&id, decision))?;
        Ok(Json(ActionResponse::new(&id, action)))
    })
    .await
}

async fn get_state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionRecord>, ApiError> {
    let snap = app.engine.snapshot(&id)?;
    let (created_at, last_active_at) = {
        let meta = app.meta.lock().expect("meta");
        meta.get(&id)
            .map(|m| (m.created_at, m.last_active_at))
            .unwrap_or((snap.started_at, snap.started_at))
    };
    Ok(Json(SessionRecord {
        session_id: id,
        schema_id: snap.schema.id,
        state: snap.state,
        transcript: snap.transcript,
        created_at,
        last_active_at,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/schemas", get(list_schemas))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/messages", post(post_message))
        .route("/v1/sessions/{id}/confirm", post(confirm))
        .route("/v1/sessions/{id}/state", get(get_state))
        .with_state(state)
}

/// Serves on an already-bound listener until `shutdown` resolves.
pub async fn serve_with<F>(listener: tokio::net::TcpListener, state: Arc<AppState>, shutdown: F) -> Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    let sweeper = {
        let state = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(30));
            loop {
                tick.tick().await;
                state.expire_idle(Utc::now());
            }
        })
    };
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
    sweeper.abort();
    Ok(result?)
}
