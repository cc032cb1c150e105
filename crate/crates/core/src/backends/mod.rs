//! Model backends: entity selection, entity extraction, sentiment, question
//! rewriting and value completion.
//!
//! Every backend has a deterministic local baseline that needs no model and
//! no network. The [`remote`] module speaks the HTTP wire protocol to an
//! external model host instead.

mod cues;
mod extract;
pub mod remote;
mod rewrite;
mod select;
mod sentiment;
pub mod text;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{normalize_for_slot, ReferenceContext};
use crate::schema::SlotDef;

pub use cues::{answer_kind, AnswerKind};
pub use extract::BaselineExtractor;
pub use rewrite::{EmpathyTemplate, TemplateRewriter};
pub use select::{BaselineSelector, SelectorConfig};
pub use sentiment::LexiconSentiment;

/// Upper bound on candidates: labels are the letters `a..=z`.
pub const MAX_CANDIDATES: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend timed out after {0} ms")]
    Timeout(u64),
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("backend answer `{0}` is not a substring of the utterance")]
    NonExtractive(String),
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("backend responded with HTTP status {0}")]
    Status(u16),
    #[error("transport error: {0}")]
    Transport(String),
}

/// One multiple-choice option offered to the selector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: char,
    pub slot_id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRequest {
    pub utterance: String,
    pub candidates: Vec<Candidate>,
    /// The candidate the agent just asked about, if any. Baselines accept a
    /// weaker match for it.
    #[serde(default)]
    pub focus: Option<char>,
}

impl SelectionRequest {
    /// Labels candidates `a`, `b`, `c`, ... in the given order.
    pub fn new<I, S, Q>(utterance: impl Into<String>, candidates: I) -> Result<Self, BackendError>
    where
        I: IntoIterator<Item = (S, Q)>,
        S: Into<String>,
        Q: Into<String>,
    {
        let pairs: Vec<(S, Q)> = candidates.into_iter().collect();
        if pairs.len() > MAX_CANDIDATES {
            return Err(BackendError::InvalidRequest(format!(
                "expected 1..={MAX_CANDIDATES} candidates, got {}",
                pairs.len()
            )));
        }
        let candidates: Vec<Candidate> = pairs
            .into_iter()
            .zip('a'..='z')
            .map(|((slot_id, question), label)| Candidate {
                label,
                slot_id: slot_id.into(),
                question: question.into(),
            })
            .collect();
        let req = Self {
            utterance: utterance.into(),
            candidates,
            focus: None,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_focus(mut self, slot_id: &str) -> Self {
        self.focus = self.label_for(slot_id);
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.candidates.is_empty() || self.candidates.len() > MAX_CANDIDATES {
            return Err(BackendError::InvalidRequest(format!(
                "expected 1..={MAX_CANDIDATES} candidates, got {}",
                self.candidates.len()
            )));
        }
        for (c, expected) in self.candidates.iter().zip('a'..='z') {
            if c.label != expected {
                return Err(BackendError::InvalidRequest(format!(
                    "label `{}` out of sequence (expected `{expected}`)",
                    c.label
                )));
            }
        }
        Ok(())
    }

    pub fn label_for(&self, slot_id: &str) -> Option<char> {
        self.candidates.iter().find(|c| c.slot_id == slot_id).map(|c| c.label)
    }

    pub fn slot_for(&self, label: char) -> Option<&str> {
        self.candidates
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.slot_id.as_str())
    }

    pub fn has_label(&self, label: char) -> bool {
        self.candidates.iter().any(|c| c.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: BTreeSet<char>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRequest {
    pub question: String,
    pub utterance: String,
}

impl ExtractionRequest {
    pub fn new(question: impl Into<String>, utterance: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            utterance: utterance.into(),
        }
    }
}

/// A verbatim piece of the utterance; `start..end` are byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Locates `needle` in `haystack`; the first occurrence wins.
    pub fn locate(haystack: &str, needle: &str) -> Option<Span> {
        if needle.is_empty() {
            return None;
        }
        haystack.find(needle).map(|start| Span {
            text: needle.to_string(),
            start,
            end: start + needle.len(),
        })
    }

    pub fn is_valid_in(&self, utterance: &str) -> bool {
        utterance.get(self.start..self.end) == Some(self.text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub span: Option<Span>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    /// Probability-like score in `[0, 1]`.
    pub negative_prob: f64,
}

pub trait EntitySelector: Send + Sync {
    fn select(&self, req: &SelectionRequest) -> Result<SelectionResult, BackendError>;
}

pub trait EntityExtractor: Send + Sync {
    fn extract(&self, req: &ExtractionRequest) -> Result<ExtractionResult, BackendError>;
}

pub trait SentimentScorer: Send + Sync {
    fn score(&self, text: &str) -> SentimentScore;
}

pub trait QuestionRewriter: Send + Sync {
    /// Rewrites `question` for the situation described by `situation`
    /// (the last user utterance, or the task domain at session start).
    fn rewrite(&self, question: &str, situation: &str) -> String;
}

pub trait ValueCompleter: Send + Sync {
    /// Turns a raw extracted value into its canonical text.
    fn complete(&self, slot: &SlotDef, raw: &str, ctx: &ReferenceContext) -> Result<String, BackendError>;
}

/// Completion through the local normalizer only; the confidential default.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalCompleter;

impl ValueCompleter for LocalCompleter {
    fn complete(&self, slot: &SlotDef, raw: &str, ctx: &ReferenceContext) -> Result<String, BackendError> {
        let value = normalize_for_slot(slot, raw, ctx);
        if value.is_resolved() {
            Ok(value.canonical)
        } else {
            Err(BackendError::EmptyCompletion)
        }
    }
}
