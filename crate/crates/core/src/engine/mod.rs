//! The per-session turn loop: selection, extraction, guardrails, next
//! question, confirmation and dispatch.

mod dispatch;
mod guardrails;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::text::content_keys;
use crate::backends::{
    BaselineExtractor, BaselineSelector, EntityExtractor, EntitySelector, ExtractionRequest, LexiconSentiment,
    QuestionRewriter, SelectionRequest, SentimentScorer, TemplateRewriter, ValueCompleter,
};
use crate::normalize::{normalize_for_slot, Confidence, ReferenceContext};
use crate::schema::{DialogueState, Phase, SlotValue, Speaker, StateError, TaskSchema, TerminationReason, Transcript};

pub use dispatch::{
    DispatchError, DispatchReceipt, DispatchRequest, FactCheck, HandlerRegistry, StubHandler, TableCheck, TaskHandler,
    DEFAULT_PROVIDERS, STUB_TARGETS,
};
pub use guardrails::{check_guardrails, clarify_text, is_abort, is_affirmative, sentiment_scheduled};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Clarifications allowed per slot; one more terminates the session.
    pub clarify_limit: u32,
    pub sentiment_period: u32,
    pub sentiment_threshold: f64,
    pub empathy_enabled: bool,
    /// Domain -> help page shown on termination. The key `default` is the fallback.
    pub wiki_links: BTreeMap<String, String>,
    pub response_budget_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            clarify_limit: 3,
            sentiment_period: 4,
            sentiment_threshold: 0.5,
            empathy_enabled: true,
            wiki_links: BTreeMap::from([("default".to_string(), "https://wiki.example.internal/hr/help".to_string())]),
            response_budget_ms: 2000,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.clarify_limit < 1 {
            return Err(EngineError::InvalidConfig("clarify_limit must be at least 1".into()));
        }
        if self.sentiment_period < 1 {
            return Err(EngineError::InvalidConfig("sentiment_period must be at least 1".into()));
        }
        if !(self.sentiment_threshold > 0.0 && self.sentiment_threshold < 1.0) {
            return Err(EngineError::InvalidConfig("sentiment_threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn wiki_url(&self, domain: &str) -> Option<&str> {
        self.wiki_links
            .get(domain)
            .or_else(|| self.wiki_links.get("default"))
            .map(String::as_str)
    }
}

#[derive(Clone)]
pub struct Backends {
    pub selector: Arc<dyn EntitySelector>,
    pub extractor: Arc<dyn EntityExtractor>,
    pub sentiment: Arc<dyn SentimentScorer>,
    pub rewriter: Arc<dyn QuestionRewriter>,
    /// `None` keeps completion local (the normalizer).
    pub completer: Option<Arc<dyn ValueCompleter>>,
}

impl Backends {
    pub fn baseline() -> Self {
        Self {
            selector: Arc::new(BaselineSelector::default()),
            extractor: Arc::new(BaselineExtractor),
            sentiment: Arc::new(LexiconSentiment),
            rewriter: Arc::new(TemplateRewriter::default()),
            completer: None,
        }
    }
}

impl Default for Backends {
    fn default() -> Self {
        Self::baseline()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Ask,
    Clarify,
    ConfirmSummary,
    Dispatched,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub slot_id: String,
    pub name: String,
    pub raw: String,
    /// `None` when the value could not be normalized and is kept raw.
    pub normalized: Option<String>,
    pub inferred: bool,
}

impl SummaryLine {
    pub fn render(&self) -> String {
        match &self.normalized {
            Some(n) if *n == self.raw => format!("{}: {}", self.name, self.raw),
            Some(n) if self.inferred => format!("{}: {} → {} (please check)", self.name, self.raw, n),
            Some(n) => format!("{}: {} → {}", self.name, self.raw, n),
            None => format!("{}: {} (not normalized)", self.name, self.raw),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnTiming {
    pub total_ms: f64,
    pub backend_ms: f64,
}

impl TurnTiming {
    /// Time spent in the engine itself.
    pub fn overhead_ms(&self) -> f64 {
        (self.total_ms - self.backend_ms).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    pub kind: ActionKind,
    pub text: String,
    /// The slot asked about (ask / clarify).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Vec<SummaryLine>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipt: Option<DispatchReceipt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<TerminationReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiki_url: Option<String>,
    pub state_snapshot: DialogueState,
    #[serde(default)]
    pub timing: TurnTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum ConfirmDecision {
    Affirm,
    /// Slot ids or names the user wants to change.
    Correct { slots: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session terminated ({reason})")]
    Terminated { reason: TerminationReason, wiki_url: Option<String> },
    #[error("session already dispatched")]
    AlreadyDispatched,
    #[error("operation requires phase {expected:?}, session is {actual:?}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("empty message")]
    EmptyMessage,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
}

/// Everything needed to resume a session; what the service persists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub schema: TaskSchema,
    pub config: EngineConfig,
    pub context: ReferenceContext,
    pub state: DialogueState,
    pub transcript: Transcript,
    pub last_asked: Option<String>,
    pub receipt: Option<DispatchReceipt>,
    pub started_at: DateTime<Utc>,
}

struct Session {
    snap: SessionSnapshot,
}

struct TurnClock {
    started: Instant,
    backend_ms: f64,
}

impl TurnClock {
    fn start() -> Self {
        Self {
            started: Instant::now(),
            backend_ms: 0.0,
        }
    }

    fn time<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.backend_ms += t.elapsed().as_secs_f64() * 1000.0;
        out
    }

    fn timing(&self) -> TurnTiming {
        TurnTiming {
            total_ms: self.started.elapsed().as_secs_f64() * 1000.0,
            backend_ms: self.backend_ms,
        }
    }
}

impl Session {
    fn now_ms(&self) -> u64 {
        (Utc::now() - self.snap.started_at).num_milliseconds().max(0) as u64
    }

    fn push_user(&mut self, text: &str) -> usize {
        let ts = self.now_ms();
        self.snap.transcript.push(Speaker::User, text, ts, None)
    }

    fn action(&mut self, kind: ActionKind, text: String, clock: &TurnClock) -> AgentAction {
        let timing = clock.timing();
        let ts = self.now_ms();
        self.snap.transcript.push(Speaker::Agent, text.clone(), ts, Some(timing.total_ms));
        AgentAction {
            kind,
            text,
            slot_id: None,
            summary: None,
            receipt: None,
            reason: None,
            wiki_url: None,
            state_snapshot: self.snap.state.clone(),
            timing,
        }
    }

    fn ensure_open(&self) -> Result<(), EngineError> {
        match self.snap.state.phase {
            Phase::Terminated => Err(EngineError::Terminated {
                reason: self.snap.state.termination_reason.unwrap_or(TerminationReason::UserAbort),
                wiki_url: self.snap.config.wiki_url(&self.snap.schema.domain).map(str::to_string),
            }),
            Phase::Dispatched => Err(EngineError::AlreadyDispatched),
            _ => Ok(()),
        }
    }

    fn terminate(&mut self, reason: TerminationReason, clock: &TurnClock) -> AgentAction {
        self.snap.state.terminate(reason);
        self.snap.last_asked = None;
        let wiki = self.snap.config.wiki_url(&self.snap.schema.domain).map(str::to_string);
        let why = match reason {
            TerminationReason::RepeatLimit => "I wasn't able to get the details I need",
            TerminationReason::SentimentLimit => "It sounds like this conversation isn't going well",
            TerminationReason::UserAbort => "Okay, I've cancelled this request",
        };
        let text = match &wiki {
            Some(url) => format!("{why}. You can find help for this task here: {url}"),
            None => format!("{why}."),
        };
        let mut action = self.action(ActionKind::Terminated, text, clock);
        action.reason = Some(reason);
        action.wiki_url = wiki;
        action
    }

    fn ask(&mut self, backends: &Backends, slot_id: &str, situation: &str, prefix: Option<&str>, clock: &mut TurnClock) -> AgentAction {
        let question = self.snap.schema.slot(slot_id).map(|s| s.question.clone()).unwrap_or_default();
        let body = if self.snap.config.empathy_enabled {
            clock.time(|| backends.rewriter.rewrite(&question, situation))
        } else {
            question
        };
        let text = match prefix {
            Some(p) => format!("{p} {body}"),
            None => body,
        };
        self.snap.last_asked = Some(slot_id.to_string());
        let mut action = self.action(ActionKind::Ask, text, clock);
        action.slot_id = Some(slot_id.to_string());
        action
    }

    fn clarify(&mut self, slot_id: &str, clock: &TurnClock) -> AgentAction {
        let question = self.snap.schema.slot(slot_id).map(|s| s.question.clone()).unwrap_or_default();
        self.snap.last_asked = Some(slot_id.to_string());
        let mut action = self.action(ActionKind::Clarify, clarify_text(&question), clock);
        action.slot_id = Some(slot_id.to_string());
        action
    }

    /// Normalizes every filled value and moves to confirming.
    fn summarize(&mut self, backends: &Backends, clock: &mut TurnClock) -> AgentAction {
        let ctx = self.snap.context;
        let mut lines = Vec::new();
        for slot in &self.snap.schema.slots {
            let Some(value) = self.snap.state.filled.get_mut(&slot.id) else {
                continue;
            };
            let local = normalize_for_slot(slot, &value.raw_span, &ctx);
            let (normalized, inferred) = match &backends.completer {
                Some(c) => match clock.time(|| c.complete(slot, &value.raw_span, &ctx)) {
                    Ok(v) if !v.trim().is_empty() => (Some(v), false),
                    _ => (None, false),
                },
                None if local.is_resolved() => (Some(local.canonical), local.confidence == Confidence::Inferred),
                None => (None, false),
            };
            value.normalized = normalized.clone();
            value.confirmed = false;
            lines.push(SummaryLine {
                slot_id: slot.id.clone(),
                name: slot.name.clone(),
                raw: value.raw_span.clone(),
                normalized,
                inferred,
            });
        }
        self.snap.state.phase = Phase::Confirming;
        self.snap.last_asked = None;
        let mut text = String::from("Here is what I have:");
        for line in &lines {
            text.push_str("\n- ");
            text.push_str(&line.render());
        }
        text.push_str("\nIs this correct? Reply yes to confirm, or tell me what to change.");
        let mut action = self.action(ActionKind::ConfirmSummary, text, clock);
        action.summary = Some(lines);
        action
    }

    fn next_step(&mut self, backends: &Backends, situation: &str, clock: &mut TurnClock) -> AgentAction {
        let next = self.snap.state.pending_required(&self.snap.schema).next().map(str::to_string);
        match next {
            Some(id) => self.ask(backends, &id, situation, None, clock),
            None => self.summarize(backends, clock),
        }
    }

    fn scheduled_sentiment(&self, backends: &Backends, utterance: &str, clock: &mut TurnClock) -> Option<TerminationReason> {
        let sentiment = if sentiment_scheduled(self.snap.state.user_turn_count, &self.snap.config) {
            Some(clock.time(|| backends.sentiment.score(utterance)))
        } else {
            None
        };
        check_guardrails(&self.snap.state, &self.snap.config, sentiment)
    }

    fn collecting_turn(&mut self, backends: &Backends, utterance: &str, turn: usize, clock: &mut TurnClock) -> AgentAction {
        let schema = &self.snap.schema;
        let candidates: Vec<(String, String)> = self
            .snap
            .state
            .pending
            .iter()
            .filter_map(|id| schema.slot(id).map(|s| (s.id.clone(), s.question.clone())))
            .collect();

        let mut selected: Vec<String> = Vec::new();
        if let Ok(mut req) = SelectionRequest::new(utterance, candidates) {
            if let Some(focus) = &self.snap.last_asked {
                req = req.with_focus(focus);
            }
            if let Ok(result) = clock.time(|| backends.selector.select(&req)) {
                selected = req
                    .candidates
                    .iter()
                    .filter(|c| result.selected.contains(&c.label))
                    .map(|c| c.slot_id.clone())
                    .collect();
            }
        }

        let mut failed: Vec<String> = Vec::new();
        let mut filled_any = false;
        for slot_id in &selected {
            let question = self.snap.schema.slot(slot_id).map(|s| s.question.clone()).unwrap_or_default();
            let req = ExtractionRequest::new(question, utterance);
            let span = match clock.time(|| backends.extractor.extract(&req)) {
                Ok(result) => result.span.filter(|s| s.is_valid_in(utterance)),
                Err(_) => None,
            };
            let Some(span) = span else {
                failed.push(slot_id.clone());
                continue;
            };
            // First write wins: the same text cannot fill two slots.
            if self.snap.state.filled.values().any(|v| v.raw_span == span.text) {
                continue;
            }
            if let Ok(next) = self.snap.state.apply_fill(SlotValue::new(slot_id.clone(), span.text, turn)) {
                self.snap.state = next;
                filled_any = true;
            }
        }

        let clarify_target = failed.first().cloned().or_else(|| {
            if filled_any {
                None
            } else {
                self.snap
                    .last_asked
                    .clone()
                    .filter(|id| self.snap.state.pending.contains(id))
                    .or_else(|| self.snap.state.pending_required(&self.snap.schema).next().map(str::to_string))
            }
        });
        if let Some(id) = &clarify_target {
            *self.snap.state.clarify_count.entry(id.clone()).or_insert(0) += 1;
        }

        if let Some(reason) = self.scheduled_sentiment(backends, utterance, clock) {
            return self.terminate(reason, clock);
        }
        match clarify_target {
            Some(id) => self.clarify(&id, clock),
            None => self.next_step(backends, utterance, clock),
        }
    }

    /// Slots a correction utterance refers to, in schema order.
    fn correction_targets(&self, backends: &Backends, utterance: &str, clock: &mut TurnClock) -> Vec<String> {
        let schema = &self.snap.schema;
        let filled: Vec<(String, String)> = schema
            .slots
            .iter()
            .filter(|s| self.snap.state.filled.contains_key(&s.id))
            .map(|s| (s.id.clone(), s.question.clone()))
            .collect();
        let words = content_keys(utterance);
        let by_name: Vec<String> = schema
            .slots
            .iter()
            .filter(|s| self.snap.state.filled.contains_key(&s.id))
            .filter(|s| s.name_words().iter().any(|w| words.contains(w) && !crate::backends::text::is_stopword(w)))
            .map(|s| s.id.clone())
            .collect();
        if !by_name.is_empty() {
            return by_name;
        }
        let Ok(req) = SelectionRequest::new(utterance, filled) else {
            return Vec::new();
        };
        match clock.time(|| backends.selector.select(&req)) {
            Ok(result) => req
                .candidates
                .iter()
                .filter(|c| result.selected.contains(&c.label))
                .map(|c| c.slot_id.clone())
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    fn reopen_and_ask(
        &mut self,
        backends: &Backends,
        slots: &[String],
        situation: &str,
        prefix: Option<&str>,
        clock: &mut TurnClock,
    ) -> Result<AgentAction, EngineError> {
        let mut state = self.snap.state.clone();
        for id in slots {
            state = state.reopen(&self.snap.schema, id)?;
        }
        for v in state.filled.values_mut() {
            v.normalized = None;
        }
        state.phase = Phase::Collecting;
        self.snap.state = state;
        Ok(self.ask(backends, &slots[0], situation, prefix, clock))
    }

    fn dispatch(&mut self, registry: &HandlerRegistry, backends: &Backends, clock: &mut TurnClock) -> Result<AgentAction, EngineError> {
        for v in self.snap.state.filled.values_mut() {
            v.confirmed = true;
        }
        let req = DispatchRequest::from_confirmed(&self.snap.schema, &self.snap.state, self.snap.session_id.clone())?;
        match clock.time(|| registry.dispatch(&req)) {
            Ok(receipt) => {
                self.snap.state.phase = Phase::Dispatched;
                self.snap.receipt = Some(receipt.clone());
                let text = format!(
                    "Done. Your request has been sent ({}, reference {}).",
                    receipt.handler_id,
                    &receipt.payload_hash[..12]
                );
                let mut action = self.action(ActionKind::Dispatched, text, clock);
                action.receipt = Some(receipt);
                Ok(action)
            }
            Err(DispatchError::FactCheck { slot_name, message }) => {
                let slot = self
                    .snap
                    .schema
                    .slots
                    .iter()
                    .find(|s| s.name == slot_name || s.id == slot_name)
                    .map(|s| s.id.clone())
                    .ok_or_else(|| EngineError::UnknownSlot(slot_name.clone()))?;
                let situation = self.snap.schema.domain.clone();
                self.reopen_and_ask(backends, &[slot], &situation, Some(&message), clock)
            }
            Err(e) => {
                for v in self.snap.state.filled.values_mut() {
                    v.confirmed = false;
                }
                Err(e.into())
            }
        }
    }

    fn resolve_slot(&self, name_or_id: &str) -> Option<String> {
        self.snap
            .schema
            .slots
            .iter()
            .find(|s| s.id == name_or_id || s.name == name_or_id)
            .map(|s| s.id.clone())
    }
}

/// Holds sessions and routes turns to them. Turns on one session are
/// serialized; distinct sessions run in parallel.
pub struct Engine {
    backends: Backends,
    handlers: HandlerRegistry,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
}

impl Engine {
    pub fn new(backends: Backends, handlers: HandlerRegistry) -> Self {
        Self {
            backends,
            handlers,
            sessions: RwLock::new(HashMap::new()),
            counter: AtomicU64::new(0),
        }
    }

    /// Baseline backends and in-memory stub handlers.
    pub fn baseline() -> Self {
        Self::new(Backends::baseline(), HandlerRegistry::with_stubs(None))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, EngineError> {
        self.sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownSession(id.to_string()))
    }

    fn fresh_id(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        format!("{:08x}{:04x}", rand::random::<u32>(), n & 0xffff)
    }

    pub fn start_session(
        &self,
        schema: TaskSchema,
        config: EngineConfig,
        context: ReferenceContext,
    ) -> Result<(String, AgentAction), EngineError> {
        let id = self.fresh_id();
        let action = self.start_session_with_id(&id, schema, config, context)?;
        Ok((id, action))
    }

    pub fn start_session_with_id(
        &self,
        session_id: &str,
        schema: TaskSchema,
        config: EngineConfig,
        context: ReferenceContext,
    ) -> Result<AgentAction, EngineError> {
        schema.validate().map_err(|e| EngineError::InvalidSchema(e.to_string()))?;
        config.validate()?;
        let mut clock = TurnClock::start();
        let state = DialogueState::new(&schema);
        let transcript = Transcript::new(schema.id.clone());
        let mut session = Session {
            snap: SessionSnapshot {
                session_id: session_id.to_string(),
                schema,
                config,
                context,
                state,
                transcript,
                last_asked: None,
                receipt: None,
                started_at: Utc::now(),
            },
        };
        let first = session
            .snap
            .state
            .pending_required(&session.snap.schema)
            .next()
            .map(str::to_string)
            .expect("validated schema has a required slot");
        let situation = session.snap.schema.domain.clone();
        let action = session.ask(&self.backends, &first, &situation, None, &mut clock);
        self.sessions
            .write()
            .expect("session map")
            .insert(session_id.to_string(), Arc::new(Mutex::new(session)));
        Ok(action)
    }

    pub fn handle_user_turn(&self, session_id: &str, utterance: &str) -> Result<AgentAction, EngineError> {
        if utterance.trim().is_empty() {
            return Err(EngineError::EmptyMessage);
        }
        let handle = self.session(session_id)?;
        let mut session = handle.lock().expect("session lock");
        session.ensure_open()?;
        let mut clock = TurnClock::start();
        let turn = session.push_user(utterance);
        session.snap.state.user_turn_count += 1;
        if is_abort(utterance) {
            return Ok(session.terminate(TerminationReason::UserAbort, &clock));
        }
        match session.snap.state.phase {
            Phase::Collecting => Ok(session.collecting_turn(&self.backends, utterance, turn, &mut clock)),
            Phase::Confirming => {
                if let Some(reason) = session.scheduled_sentiment(&self.backends, utterance, &mut clock) {
                    return Ok(session.terminate(reason, &clock));
                }
                if is_affirmative(utterance) {
                    return session.dispatch(&self.handlers, &self.backends, &mut clock);
                }
                let targets = session.correction_targets(&self.backends, utterance, &mut clock);
                if targets.is_empty() {
                    Ok(session.summarize(&self.backends, &mut clock))
                } else {
                    session.reopen_and_ask(&self.backends, &targets[..1], utterance, None, &mut clock)
                }
            }
            _ => unreachable!("ensure_open rejects closed phases"),
        }
    }

    /// Structured confirmation, for clients with a confirm button.
    pub fn confirm(&self, session_id: &str, decision: ConfirmDecision) -> Result<AgentAction, EngineError> {
        let handle = self.session(session_id)?;
        let mut session = handle.lock().expect("session lock");
        session.ensure_open()?;
        if session.snap.state.phase != Phase::Confirming {
            return Err(EngineError::WrongPhase {
                expected: Phase::Confirming,
                actual: session.snap.state.phase,
            });
        }
        let mut clock = TurnClock::start();
        match decision {
            ConfirmDecision::Affirm => {
                session.push_user("yes");
                session.snap.state.user_turn_count += 1;
                session.dispatch(&self.handlers, &self.backends, &mut clock)
            }
            ConfirmDecision::Correct { slots } => {
                let ids = slots
                    .iter()
                    .map(|s| session.resolve_slot(s).ok_or_else(|| EngineError::UnknownSlot(s.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                if ids.is_empty() {
                    return Err(EngineError::UnknownSlot(String::new()));
                }
                let text = format!("change {}", slots.join(", "));
                session.push_user(&text);
                session.snap.state.user_turn_count += 1;
                let situation = session.snap.schema.domain.clone();
                session.reopen_and_ask(&self.backends, &ids, &situation, None, &mut clock)
            }
        }
    }

    pub fn snapshot(&self, session_id: &str) -> Result<SessionSnapshot, EngineError> {
        let handle = self.session(session_id)?;
        let session = handle.lock().expect("session lock");
        Ok(session.snap.clone())
    }

    /// Reinstalls a session from a snapshot (e.g. after a restart).
    pub fn restore(&self, snapshot: SessionSnapshot) {
        let id = snapshot.session_id.clone();
        self.sessions
            .write()
            .expect("session map")
            .insert(id, Arc::new(Mutex::new(Session { snap: snapshot })));
    }

    pub fn remove(&self, session_id: &str) -> bool {
        self.sessions.write().expect("session map").remove(session_id).is_some()
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().expect("session map").keys().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;
    use chrono::NaiveDate;

    fn time_off() -> TaskSchema {
        parse_schema(include_str!("../../../../schemas/time_off.json")).unwrap()
    }

    fn ctx() -> ReferenceContext {
        ReferenceContext::from_date(NaiveDate::from_ymd_opt(2023, 10, 13).unwrap(), 0)
    }

    fn plain() -> EngineConfig {
        EngineConfig {
            empathy_enabled: false,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn first_ask_is_first_required_slot() {
        let engine = Engine::baseline();
        let (_, action) = engine.start_session(time_off(), plain(), ctx()).unwrap();
        assert_eq!(action.kind, ActionKind::Ask);
        assert_eq!(action.text, "When is the requested time off?");
        let (_, action) = engine.start_session(time_off(), EngineConfig::default(), ctx()).unwrap();
        assert!(action.text.ends_with("When is the requested time off?"));
        assert!(action.text.len() > "When is the requested time off?".len());
    }

    #[test]
    fn full_dialogue_to_dispatch() {
        let engine = Engine::baseline();
        let (id, _) = engine.start_session(time_off(), plain(), ctx()).unwrap();
        let a = engine.handle_user_turn(&id, "I am taking next Thursday off as a vacation day.").unwrap();
        assert_eq!(a.kind, ActionKind::Ask);
        assert_eq!(a.slot_id.as_deref(), Some("employeeName"));
        let a = engine.handle_user_turn(&id, "My name is Dana Smith").unwrap();
        assert_eq!(a.kind, ActionKind::ConfirmSummary, "{}", a.text);
        assert!(a.text.contains("timeOffStartDate: next Thursday → 2023-10-19"), "{}", a.text);
        let a = engine.handle_user_turn(&id, "yes").unwrap();
        assert_eq!(a.kind, ActionKind::Dispatched);
        assert_eq!(a.receipt.unwrap().handler_id, "request_time_off");
        assert!(matches!(engine.handle_user_turn(&id, "hello"), Err(EngineError::AlreadyDispatched)));
    }

    #[test]
    fn non_answer_clarifies_current_slot() {
        let engine = Engine::baseline();
        let (id, _) = engine.start_session(time_off(), plain(), ctx()).unwrap();
        let a = engine.handle_user_turn(&id, "hmm okay").unwrap();
        assert_eq!(a.kind, ActionKind::Clarify);
        assert_eq!(a.text, "Could you tell me when is the requested time off?");
        assert_eq!(a.state_snapshot.clarify_count["timeOffStartDate"], 1);
    }

    #[test]
    fn correction_reopens_slot() {
        let engine = Engine::baseline();
        let (id, _) = engine.start_session(time_off(), plain(), ctx()).unwrap();
        engine.handle_user_turn(&id, "I am taking next Thursday off as a vacation day.").unwrap();
        engine.handle_user_turn(&id, "My name is Dana Smith").unwrap();
        let a = engine.handle_user_turn(&id, "no, the start date is wrong").unwrap();
        assert_eq!(a.kind, ActionKind::Ask);
        assert_eq!(a.slot_id.as_deref(), Some("timeOffStartDate"));
        assert_eq!(a.state_snapshot.phase, Phase::Collecting);
        assert!(a.state_snapshot.filled.values().all(|v| !v.confirmed && v.normalized.is_none()));
    }

    #[test]
    fn confirm_in_wrong_phase() {
        let engine = Engine::baseline();
        let (id, _) = engine.start_session(time_off(), plain(), ctx()).unwrap();
        assert!(matches!(
            engine.confirm(&id, ConfirmDecision::Affirm),
            Err(EngineError::WrongPhase { .. })
        ));
        assert!(matches!(engine.handle_user_turn("nope", "hi"), Err(EngineError::UnknownSession(_))));
        assert!(matches!(engine.handle_user_turn(&id, "  "), Err(EngineError::EmptyMessage)));
    }

    #[test]
    fn abort_terminates_with_wiki() {
        let engine = Engine::baseline();
        let (id, _) = engine.start_session(time_off(), plain(), ctx()).unwrap();
        let a = engine.handle_user_turn(&id, "cancel").unwrap();
        assert_eq!(a.kind, ActionKind::Terminated);
        assert_eq!(a.reason, Some(TerminationReason::UserAbort));
        assert!(a.wiki_url.is_some());
        assert!(matches!(engine.handle_user_turn(&id, "hi"), Err(EngineError::Terminated { .. })));
    }

    #[test]
    fn medical_claim_unknown_provider_is_reasked() {
        let schema = parse_schema(include_str!("../../../../schemas/medical_claim.json")).unwrap();
        let engine = Engine::baseline();
        let (id, first) = engine.start_session(schema, EngineConfig::default(), ctx()).unwrap();
        assert!(first.text.starts_with("I understand that medical emergencies can be stressful."), "{}", first.text);
        let engine_ref = &engine;
        let mut action = first;
        let answers = [
            "I slipped on ice and broke my wrist",
            "It happened yesterday",
            "I went to Acme Bone Shop",
            "The claim is $250.00",
        ];
        for a in answers {
            action = engine_ref.handle_user_turn(&id, a).unwrap();
        }
        assert_eq!(action.kind, ActionKind::ConfirmSummary, "{}", action.text);
        let a = engine.confirm(&id, ConfirmDecision::Affirm).unwrap();
        assert_eq!(a.kind, ActionKind::Ask);
        assert_eq!(a.slot_id.as_deref(), Some("provider"));
        assert!(a.text.contains("couldn't find"), "{}", a.text);
    }
}
