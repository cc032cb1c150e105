//! Task schemas, dialogue state and transcripts.
//!
//! Everything here is a plain value. State transitions such as
//! [`DialogueState::apply_fill`] return a new state and leave the input
//! untouched, so states can be shared across threads freely.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The shape of value a slot expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    FreeText,
    Date,
    Time,
    Money,
    Location,
    Category,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::FreeText => "free_text",
            ValueKind::Date => "date",
            ValueKind::Time => "time",
            ValueKind::Money => "money",
            ValueKind::Location => "location",
            ValueKind::Category => "category",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One field the dialogue has to collect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDef {
    pub id: String,
    pub name: String,
    /// Natural-language question used both for selection and extraction.
    pub question: String,
    pub value_kind: ValueKind,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_options: Option<Vec<String>>,
}

impl SlotDef {
    /// Slot name split into lowercase words (`timeOffStartDate` -> `time off start date`).
    pub fn name_words(&self) -> Vec<String> {
        let mut words = Vec::new();
        let mut current = String::new();
        for ch in self.name.chars() {
            if ch == '_' || ch == '-' || ch.is_whitespace() {
                if !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
                continue;
            }
            if ch.is_uppercase() && !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            current.extend(ch.to_lowercase());
        }
        if !current.is_empty() {
            words.push(current);
        }
        words
    }
}

/// A task's slot inventory plus the handler that consumes the collected values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSchema {
    pub id: String,
    pub domain: String,
    pub dispatch_target: String,
    /// Ordered; the order is the default asking order.
    pub slots: Vec<SlotDef>,
}

impl TaskSchema {
    pub fn slot(&self, id: &str) -> Option<&SlotDef> {
        self.slots.iter().find(|s| s.id == id)
    }

    pub fn slot_index(&self, id: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.id == id)
    }

    pub fn required_ids(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().filter(|s| s.required).map(|s| s.id.as_str())
    }

    /// Checks every structural invariant; `parse_schema` calls this after decoding.
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.id.trim().is_empty() {
            return Err(SchemaError::MissingField { field: "id".into() });
        }
        if self.slots.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut seen = HashSet::new();
        for (index, slot) in self.slots.iter().enumerate() {
            let location = format!("slots[{index}]");
            if slot.id.trim().is_empty() {
                return Err(SchemaError::InvalidSlot {
                    location,
                    message: "slot id is empty".into(),
                });
            }
            if !seen.insert(slot.id.as_str()) {
                return Err(SchemaError::DuplicateSlotId {
                    id: slot.id.clone(),
                    location,
                });
            }
            if slot.question.trim().is_empty() {
                return Err(SchemaError::InvalidSlot {
                    location,
                    message: format!("slot `{}` has an empty question", slot.id),
                });
            }
            let has_options = slot
                .category_options
                .as_ref()
                .is_some_and(|opts| !opts.is_empty());
            match (slot.value_kind == ValueKind::Category, has_options) {
                (true, false) => {
                    return Err(SchemaError::CategoryWithoutOptions {
                        id: slot.id.clone(),
                        location,
                    })
                }
                (false, true) | (false, false) if slot.category_options.is_some() => {
                    return Err(SchemaError::OptionsOnNonCategory {
                        id: slot.id.clone(),
                        location,
                    })
                }
                _ => {}
            }
        }
        if !self.slots.iter().any(|s| s.required) {
            return Err(SchemaError::NoRequiredSlot);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("malformed schema document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema field `{field}` is missing or empty")]
    MissingField { field: String },
    #[error("empty schema: at least one slot is required")]
    Empty,
    #[error("duplicate slot id `{id}` at {location}")]
    DuplicateSlotId { id: String, location: String },
    #[error("category slot `{id}` at {location} has no category_options")]
    CategoryWithoutOptions { id: String, location: String },
    #[error("slot `{id}` at {location} lists category_options but is not a category slot")]
    OptionsOnNonCategory { id: String, location: String },
    #[error("invalid slot at {location}: {message}")]
    InvalidSlot { location: String, message: String },
    #[error("schema has no required slot")]
    NoRequiredSlot,
}

/// Parses and validates a schema document (UTF-8 JSON).
pub fn parse_schema(doc: &str) -> Result<TaskSchema, SchemaError> {
    let schema: TaskSchema = serde_json::from_str(doc).map_err(|e| SchemaError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    schema.validate()?;
    Ok(schema)
}

pub fn serialize_schema(schema: &TaskSchema) -> String {
    serde_json::to_string_pretty(schema).expect("schema serialization is infallible")
}

/// A value captured for a slot. `raw_span` is always a verbatim piece of a user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotValue {
    pub slot_id: String,
    pub raw_span: String,
    #[serde(default)]
    pub normalized: Option<String>,
    /// Index into the transcript's turn list.
    pub source_turn: usize,
    #[serde(default)]
    pub confirmed: bool,
}

impl SlotValue {
    pub fn new(slot_id: impl Into<String>, raw_span: impl Into<String>, source_turn: usize) -> Self {
        Self {
            slot_id: slot_id.into(),
            raw_span: raw_span.into(),
            normalized: None,
            source_turn,
            confirmed: false,
        }
    }

    /// The value handed to downstream handlers.
    pub fn effective(&self) -> &str {
        self.normalized.as_deref().unwrap_or(&self.raw_span)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Collecting,
    Confirming,
    Dispatched,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    RepeatLimit,
    SentimentLimit,
    UserAbort,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::RepeatLimit => "repeat_limit",
            TerminationReason::SentimentLimit => "sentiment_limit",
            TerminationReason::UserAbort => "user_abort",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("slot `{0}` is not part of the schema")]
    UnknownSlot(String),
    #[error("slot `{0}` is already filled")]
    AlreadyFilled(String),
    #[error("slot `{0}` is not filled")]
    NotFilled(String),
}

/// Per-session memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueState {
    pub schema_id: String,
    pub filled: BTreeMap<String, SlotValue>,
    /// Unfilled slots in asking order.
    pub pending: Vec<String>,
    pub clarify_count: BTreeMap<String, u32>,
    pub user_turn_count: u32,
    pub phase: Phase,
    #[serde(default)]
    pub termination_reason: Option<TerminationReason>,
}

impl DialogueState {
    pub fn new(schema: &TaskSchema) -> Self {
        Self {
            schema_id: schema.id.clone(),
            filled: BTreeMap::new(),
            pending: schema.slots.iter().map(|s| s.id.clone()).collect(),
            clarify_count: schema.slots.iter().map(|s| (s.id.clone(), 0)).collect(),
            user_turn_count: 0,
            phase: Phase::Collecting,
            termination_reason: None,
        }
    }

    /// Moves `value.slot_id` from pending to filled and resets its clarify counter.
    pub fn apply_fill(&self, value: SlotValue) -> Result<DialogueState, StateError> {
        let id = value.slot_id.clone();
        if self.filled.contains_key(&id) {
            return Err(StateError::AlreadyFilled(id));
        }
        let Some(pos) = self.pending.iter().position(|p| *p == id) else {
            return Err(StateError::UnknownSlot(id));
        };
        let mut next = self.clone();
        next.pending.remove(pos);
        next.clarify_count.insert(id.clone(), 0);
        next.filled.insert(id, value);
        Ok(next)
    }

    /// Moves a filled slot back to pending, restoring schema order.
    pub fn reopen(&self, schema: &TaskSchema, slot_id: &str) -> Result<DialogueState, StateError> {
        if schema.slot(slot_id).is_none() {
            return Err(StateError::UnknownSlot(slot_id.to_string()));
        }
        if !self.filled.contains_key(slot_id) {
            return Err(StateError::NotFilled(slot_id.to_string()));
        }
        let mut next = self.clone();
        next.filled.remove(slot_id);
        next.pending.push(slot_id.to_string());
        next.pending
            .sort_by_key(|id| schema.slot_index(id).unwrap_or(usize::MAX));
        for value in next.filled.values_mut() {
            value.confirmed = false;
        }
        Ok(next)
    }

    pub fn pending_required<'a>(&'a self, schema: &'a TaskSchema) -> impl Iterator<Item = &'a str> + 'a {
        self.pending
            .iter()
            .map(String::as_str)
            .filter(|id| schema.slot(id).is_some_and(|s| s.required))
    }

    pub fn required_complete(&self, schema: &TaskSchema) -> bool {
        self.pending_required(schema).next().is_none()
    }

    pub fn terminate(&mut self, reason: TerminationReason) {
        self.phase = Phase::Terminated;
        self.termination_reason = Some(reason);
    }

    /// Checks the structural invariants against `schema`.
    pub fn check_invariants(&self, schema: &TaskSchema) -> Result<(), String> {
        for id in &self.pending {
            if self.filled.contains_key(id) {
                return Err(format!("slot `{id}` is both filled and pending"));
            }
        }
        if self.filled.len() + self.pending.len() != schema.slots.len() {
            return Err(format!(
                "filled ({}) + pending ({}) != schema slots ({})",
                self.filled.len(),
                self.pending.len(),
                schema.slots.len()
            ));
        }
        if (self.phase == Phase::Terminated) != self.termination_reason.is_some() {
            return Err("phase/termination_reason mismatch".into());
        }
        if let Some((id, n)) = self.clarify_count.iter().find(|(_, n)| **n > 4) {
            return Err(format!("clarify_count[{id}] = {n} exceeds 4"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    /// Milliseconds since session start.
    pub timestamp: u64,
    /// Agent turns only: time spent producing this turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_id: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_states: Option<Vec<BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_state: Option<DialogueState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("malformed transcript: {0}")]
    Malformed(String),
    #[error("turn indices must strictly increase (turn {0})")]
    NonIncreasingIndex(usize),
    #[error("negative latency on turn {0}")]
    NegativeLatency(usize),
    #[error("gold_states has {found} entries but there are {expected} user turns")]
    GoldCountMismatch { expected: usize, found: usize },
    #[error("slot `{slot}` cites turn {turn}, but its span is not a substring of that user turn")]
    NotExtractive { slot: String, turn: usize },
}

impl Transcript {
    pub fn new(schema_id: impl Into<String>) -> Self {
        Self {
            schema_id: schema_id.into(),
            turns: Vec::new(),
            gold_states: None,
            final_state: None,
        }
    }

    pub fn push(&mut self, speaker: Speaker, text: impl Into<String>, timestamp: u64, latency_ms: Option<f64>) -> usize {
        let index = self.turns.last().map_or(0, |t| t.index + 1);
        self.turns.push(Turn {
            index,
            speaker,
            text: text.into(),
            timestamp,
            latency_ms,
        });
        index
    }

    pub fn turn(&self, index: usize) -> Option<&Turn> {
        self.turns.iter().find(|t| t.index == index)
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::User)
    }

    /// `true` when `value.raw_span` occurs verbatim in the user turn it cites.
    pub fn is_extractive(&self, value: &SlotValue) -> bool {
        self.turn(value.source_turn)
            .is_some_and(|t| t.speaker == Speaker::User && t.text.contains(&value.raw_span))
    }

    pub fn validate(&self) -> Result<(), TranscriptError> {
        for pair in self.turns.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(TranscriptError::NonIncreasingIndex(pair[1].index));
            }
        }
        if let Some(t) = self.turns.iter().find(|t| t.latency_ms.is_some_and(|l| l < 0.0)) {
            return Err(TranscriptError::NegativeLatency(t.index));
        }
        if let Some(gold) = &self.gold_states {
            let expected = self.user_turns().count();
            if gold.len() != expected {
                return Err(TranscriptError::GoldCountMismatch {
                    expected,
                    found: gold.len(),
                });
            }
        }
        if let Some(state) = &self.final_state {
            for value in state.filled.values() {
                if !self.is_extractive(value) {
                    return Err(TranscriptError::NotExtractive {
                        slot: value.slot_id.clone(),
                        turn: value.source_turn,
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn parse_transcript(doc: &str) -> Result<Transcript, TranscriptError> {
    let transcript: Transcript =
        serde_json::from_str(doc).map_err(|e| TranscriptError::Malformed(e.to_string()))?;
    transcript.validate()?;
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIME_OFF_DATES: &str = r#"{
        "id": "time_off_dates",
        "domain": "request leaves",
        "dispatch_target": "request_time_off",
        "slots": [
            {"id": "timeOffStartDate", "name": "timeOffStartDate", "question": "When does the time off start?", "value_kind": "date", "required": true},
            {"id": "timeOffEndDate", "name": "timeOffEndDate", "question": "When does the time off end?", "value_kind": "date", "required": true},
            {"id": "reason", "name": "reason", "question": "What is the reason for the time off?", "value_kind": "free_text", "required": true},
            {"id": "name", "name": "name", "question": "What is your name?", "value_kind": "free_text", "required": true}
        ]
    }"#;

    fn schema() -> TaskSchema {
        parse_schema(TIME_OFF_DATES).unwrap()
    }

    #[test]
    fn parses_four_slot_time_off_schema() {
        let s = schema();
        assert_eq!(s.slots.len(), 4);
        let ids: Vec<_> = s.slots.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["timeOffStartDate", "timeOffEndDate", "reason", "name"]);
    }

    #[test]
    fn empty_schema_is_rejected() {
        let doc = r#"{"id":"x","domain":"d","dispatch_target":"t","slots":[]}"#;
        assert_eq!(parse_schema(doc), Err(SchemaError::Empty));
        assert!(SchemaError::Empty.to_string().contains("empty schema"));
    }

    #[test]
    fn duplicate_id_names_the_id() {
        let doc = r#"{"id":"x","domain":"d","dispatch_target":"t","slots":[
            {"id":"reason","name":"reason","question":"Why?","value_kind":"free_text","required":true},
            {"id":"reason","name":"reason2","question":"Why again?","value_kind":"free_text","required":true}]}"#;
        let err = parse_schema(doc).unwrap_err();
        assert_eq!(
            err,
            SchemaError::DuplicateSlotId {
                id: "reason".into(),
                location: "slots[1]".into()
            }
        );
        assert!(err.to_string().contains("`reason`"));
    }

    #[test]
    fn category_rules() {
        let no_opts = r#"{"id":"x","domain":"d","dispatch_target":"t","slots":[
            {"id":"kind","name":"kind","question":"Which kind?","value_kind":"category","required":true}]}"#;
        assert!(matches!(
            parse_schema(no_opts),
            Err(SchemaError::CategoryWithoutOptions { .. })
        ));
        let empty_opts = no_opts.replace(r#""required":true"#, r#""required":true,"category_options":[]"#);
        assert!(matches!(
            parse_schema(&empty_opts),
            Err(SchemaError::CategoryWithoutOptions { .. })
        ));
        let stray = r#"{"id":"x","domain":"d","dispatch_target":"t","slots":[
            {"id":"kind","name":"kind","question":"Which?","value_kind":"free_text","required":true,"category_options":["a"]}]}"#;
        assert!(matches!(
            parse_schema(stray),
            Err(SchemaError::OptionsOnNonCategory { .. })
        ));
    }

    #[test]
    fn malformed_document_reports_location() {
        let err = parse_schema("{\n  \"id\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            SchemaError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_question_and_no_required() {
        let doc = r#"{"id":"x","domain":"d","dispatch_target":"t","slots":[
            {"id":"a","name":"a","question":"  ","value_kind":"free_text","required":true}]}"#;
        assert!(matches!(parse_schema(doc), Err(SchemaError::InvalidSlot { .. })));
        let doc = r#"{"id":"x","domain":"d","dispatch_target":"t","slots":[
            {"id":"a","name":"a","question":"A?","value_kind":"free_text","required":false}]}"#;
        assert_eq!(parse_schema(doc), Err(SchemaError::NoRequiredSlot));
    }

    #[test]
    fn round_trip_preserves_category_options_and_order() {
        let mut s = schema();
        s.slots.push(SlotDef {
            id: "leaveType".into(),
            name: "leaveType".into(),
            question: "What type of leave?".into(),
            value_kind: ValueKind::Category,
            required: false,
            category_options: Some(vec!["vacation".into(), "sick".into(), "personal".into()]),
        });
        let back = parse_schema(&serialize_schema(&s)).unwrap();
        assert_eq!(back, s);
        let before: Vec<_> = s.slots.iter().map(|x| &x.id).collect();
        let after: Vec<_> = back.slots.iter().map(|x| &x.id).collect();
        assert_eq!(before, after);
        assert_eq!(
            back.slot("leaveType").unwrap().category_options.as_deref(),
            Some(&["vacation".to_string(), "sick".into(), "personal".into()][..])
        );
    }

    #[test]
    fn fill_moves_slot_and_resets_counter() {
        let s = schema();
        let mut state = DialogueState::new(&s);
        state.clarify_count.insert("timeOffStartDate".into(), 2);
        let next = state
            .apply_fill(SlotValue::new("timeOffStartDate", "next Thursday", 0))
            .unwrap();
        assert_eq!(next.pending.len(), 3);
        assert_eq!(next.filled.len(), 1);
        assert_eq!(next.clarify_count["timeOffStartDate"], 0);
        assert_eq!(next.phase, Phase::Collecting);
        assert_eq!(next.user_turn_count, state.user_turn_count);
    }

    #[test]
    fn filling_last_required_slot_completes_required_set() {
        let s = schema();
        let mut state = DialogueState::new(&s);
        let required: Vec<String> = s.required_ids().map(str::to_string).collect();
        for (i, id) in required.iter().enumerate() {
            assert!(!state.required_complete(&s));
            state = state.apply_fill(SlotValue::new(id.clone(), "x", i)).unwrap();
        }
        assert!(state.required_complete(&s));
        assert!(state.pending.is_empty());
    }

    #[test]
    fn fill_errors() {
        let s = schema();
        let state = DialogueState::new(&s)
            .apply_fill(SlotValue::new("reason", "sick", 0))
            .unwrap();
        assert_eq!(
            state.apply_fill(SlotValue::new("reason", "sick", 0)),
            Err(StateError::AlreadyFilled("reason".into()))
        );
        assert_eq!(
            state.apply_fill(SlotValue::new("nope", "x", 0)),
            Err(StateError::UnknownSlot("nope".into()))
        );
    }

    #[test]
    fn reopen_restores_schema_order() {
        let s = schema();
        let state = DialogueState::new(&s)
            .apply_fill(SlotValue::new("timeOffStartDate", "Monday", 0))
            .unwrap()
            .reopen(&s, "timeOffStartDate")
            .unwrap();
        assert_eq!(state.pending[0], "timeOffStartDate");
        assert!(state.reopen(&s, "reason").is_err());
    }

    #[test]
    fn slot_name_words() {
        let s = schema();
        assert_eq!(s.slots[0].name_words(), ["time", "off", "start", "date"]);
    }

    #[test]
    fn transcript_checks() {
        let mut t = Transcript::new("time_off_dates");
        t.push(Speaker::Agent, "When?", 0, Some(1.0));
        t.push(Speaker::User, "next Thursday please", 10, None);
        let v = SlotValue::new("timeOffStartDate", "next Thursday", 1);
        assert!(t.is_extractive(&v));
        assert!(!t.is_extractive(&SlotValue::new("timeOffStartDate", "next Friday", 1)));
        assert!(!t.is_extractive(&SlotValue::new("timeOffStartDate", "When", 0)));
        t.gold_states = Some(vec![]);
        assert!(matches!(
            t.validate(),
            Err(TranscriptError::GoldCountMismatch { expected: 1, found: 0 })
        ));
        t.gold_states = None;
        let round = parse_transcript(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(round, t);
    }
}
