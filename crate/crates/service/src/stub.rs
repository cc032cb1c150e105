//! Stand-in for the remote model host, speaking the same wire protocol.
//! Answers come from the baseline backends; faults can be injected for tests.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use anyhow::Result;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use chrono::NaiveDate;
use hragent_core::backends::{BaselineExtractor, BaselineSelector, Candidate, SelectionRequest, SelectorConfig};
use hragent_core::datagen::{format_scenario, FEW_SHOTS};
use hragent_core::normalize::{normalize_for_slot, ReferenceContext};
use hragent_core::schema::{SlotDef, ValueKind};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::background::BackgroundServer;

pub const MODEL_ID: &str = "stub-baseline";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Bodies that are not the expected JSON.
    Malformed,
    /// Extraction answers that do not occur in the utterance.
    NonExtractive,
    /// Empty answers and completions.
    Empty,
    Status500,
}

#[derive(Debug, Default)]
pub struct StubControl {
    delay_ms: AtomicU64,
    fault: Mutex<Fault>,
    calls: AtomicU64,
}

impl StubControl {
    pub fn set_delay_ms(&self, ms: u64) {
        self.delay_ms.store(ms, Ordering::SeqCst);
    }

    pub fn set_fault(&self, fault: Fault) {
        *self.fault.lock().expect("fault") = fault;
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn fault(&self) -> Fault {
        *self.fault.lock().expect("fault")
    }
}

#[derive(Deserialize)]
struct WireCandidate {
    label: String,
    question: String,
}

#[derive(Deserialize)]
struct SelectBody {
    utterance: String,
    candidates: Vec<WireCandidate>,
}

#[derive(Deserialize)]
struct ExtractBody {
    question: String,
    utterance: String,
}

#[derive(Deserialize)]
struct CompleteBody {
    slot_kind: ValueKind,
    raw: String,
    reference_date: NaiveDate,
}

/// Zip codes the stub can resolve; a real host would use a geocoder.
const ZIP_CITIES: &[(&str, &str)] = &[("98121", "Seattle WA"), ("10001", "New York NY"), ("94105", "San Francisco CA")];

async fn pre(ctl: &StubControl) -> Option<Response> {
    ctl.calls.fetch_add(1, Ordering::SeqCst);
    let delay = ctl.delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }
    match ctl.fault() {
        Fault::Status500 => Some((StatusCode::INTERNAL_SERVER_ERROR, "injected failure").into_response()),
        Fault::Malformed => Some((StatusCode::OK, "{\"answer\": [unterminated").into_response()),
        _ => None,
    }
}

fn reply(started: Instant, mut body: Value) -> Response {
    body["model_id"] = json!(MODEL_ID);
    body["elapsed_ms"] = json!(started.elapsed().as_secs_f64() * 1000.0);
    Json(body).into_response()
}

async fn select(State(ctl): State<Arc<StubControl>>, Json(body): Json<SelectBody>) -> Response {
    let started = Instant::now();
    if let Some(r) = pre(&ctl).await {
        return r;
    }
    let candidates = body
        .candidates
        .into_iter()
        .filter_map(|c| {
            let label = c.label.chars().next()?;
            Some(Candidate {
                label,
                slot_id: label.to_string(),
                question: c.question,
            })
        })
        .collect();
    let req = SelectionRequest {
        utterance: body.utterance,
        candidates,
        focus: None,
    };
    if req.validate().is_err() {
        return (StatusCode::UNPROCESSABLE_ENTITY, "bad candidates").into_response();
    }
    let selected: Vec<String> = if ctl.fault() == Fault::Empty {
        Vec::new()
    } else {
        BaselineSelector::new(SelectorConfig::default())
            .select_labels(&req)
            .into_iter()
            .map(String::from)
            .collect()
    };
    reply(started, json!({ "selected": selected }))
}

async fn extract(State(ctl): State<Arc<StubControl>>, Json(body): Json<ExtractBody>) -> Response {
    let started = Instant::now();
    if let Some(r) = pre(&ctl).await {
        return r;
    }
    let answer = match ctl.fault() {
        Fault::Empty => String::new(),
        Fault::NonExtractive => "an answer the user never said".to_string(),
        _ => BaselineExtractor
            .extract_span(&body.question, &body.utterance)
            .map(|s| s.text)
            .unwrap_or_default(),
    };
    reply(started, json!({ "answer": format!("<answer>{answer}") }))
}

async fn complete(State(ctl): State<Arc<StubControl>>, Json(body): Json<CompleteBody>) -> Response {
    let started = Instant::now();
    if let Some(r) = pre(&ctl).await {
        return r;
    }
    if ctl.fault() == Fault::Empty {
        return reply(started, json!({ "value": "" }));
    }
    let raw = body.raw.trim();
    if let Some((_, city)) = ZIP_CITIES.iter().find(|(zip, _)| *zip == raw) {
        return reply(started, json!({ "value": city }));
    }
    let slot = SlotDef {
        id: "value".into(),
        name: "value".into(),
        question: String::new(),
        value_kind: body.slot_kind,
        required: true,
        category_options: None,
    };
    let value = normalize_for_slot(&slot, raw, &ReferenceContext::from_date(body.reference_date, 0));
    reply(started, json!({ "value": value.canonical }))
}

async fn generate(State(ctl): State<Arc<StubControl>>) -> Response {
    let started = Instant::now();
    if let Some(r) = pre(&ctl).await {
        return r;
    }
    let text: Vec<String> = FEW_SHOTS.iter().map(|f| format_scenario(&f.scenario())).collect();
    reply(started, json!({ "text": text.join("\n") }))
}

pub fn router(ctl: Arc<StubControl>) -> Router {
    Router::new()
        .route("/v1/select", post(select))
        .route("/v1/extract", post(extract))
        .route("/v1/complete", post(complete))
        .route("/v1/generate", post(generate))
        .with_state(ctl)
}

/// A stub on an ephemeral port, for tests and blocking callers.
pub struct StubServer {
    pub control: Arc<StubControl>,
    server: BackgroundServer,
}

impl StubServer {
    pub fn spawn() -> Result<Self> {
        let control = Arc::new(StubControl::default());
        let server = BackgroundServer::start(router(control.clone()))?;
        Ok(Self { control, server })
    }

    pub fn url(&self) -> String {
        self.server.url()
    }
}
