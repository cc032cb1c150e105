//! HTTP client for an external model host.
//!
//! Wire protocol (JSON bodies):
//!
//! | endpoint            | request                                   | response                  |
//! |---------------------|-------------------------------------------|---------------------------|
//! | `POST /v1/select`   | `{utterance, candidates:[{label,question}], prompt, sampling}` | `{selected:[..]}` or `{text}` |
//! | `POST /v1/extract`  | `{question, utterance, prompt, sampling}` | `{answer}`                |
//! | `POST /v1/complete` | `{slot_kind, raw, reference_date}`        | `{value}`                 |
//! | `POST /v1/generate` | `{prompt, sampling}`                      | `{text}`                  |
//!
//! Every response also carries `model_id` and `elapsed_ms`. Free-text answers
//! may wrap the payload in `<answer>...</answer>`; the closing tag is the stop
//! sequence, so it is often missing.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    BackendError, EntityExtractor, EntitySelector, ExtractionRequest, ExtractionResult, SelectionRequest,
    SelectionResult, Span, ValueCompleter,
};
use crate::normalize::ReferenceContext;
use crate::schema::SlotDef;

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

/// Instruction sentences for extraction prompts; index 0 is the default.
pub const EXTRACTION_TEMPLATES: [&str; 10] = [
    "Could you retrieve the answer to the Question from the Text?",
    "Can you pull out the response to the Question within the Text?",
    "Would you mind extracting the reply to the Question from the Text?",
    "I'd like you to get the answer to the Question from the Text.",
    "Could you find the solution to the Question in the Text?",
    "Please identify the answer to the Question in the Text.",
    "Can you locate the response to the Question from the Text?",
    "I'd appreciate if you could extract the answer to the Question from the Text.",
    "Would it be possible to get the reply to the Question from the Text?",
    "Please search for the answer to the Question within the Text.",
];

/// Instruction sentences for selection prompts; index 0 is the default.
pub const SELECTION_TEMPLATES: [&str; 10] = [
    "Could you identify the appropriate question that Text can answer?",
    "Please find the correct question for which the Text provides an answer.",
    "Can you determine the suitable question that can be resolved using the Text?",
    "I'd like you to pinpoint the right question that the Text can address.",
    "Please locate the question that aligns with the Text's answer.",
    "Could you discern the fitting question that the Text can respond to?",
    "I'd appreciate if you could determine the exact question that can be answered using the Text.",
    "Can you select the question that the Text can satisfactorily answer?",
    "Would it be possible to identify the question that matches the Text's answer?",
    "Please deduce the right question that aligns with the Text's response.",
];

pub const EXTRACTION_INSTRUCTION: &str =
    "The answer is very short and always less than 2 words. Put the answer in <answer></answer>  XML tags.";
pub const SELECTION_INSTRUCTION: &str =
    "The answer always contains 2 to 5 choices. Put the answer in <answer></answer>  XML tags.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub max_tokens: u32,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default)]
    pub stop: Vec<String>,
}

impl Default for Sampling {
    /// Short-answer sampling used for selection and extraction.
    fn default() -> Self {
        Self {
            max_tokens: 10,
            temperature: 0.2,
            top_k: None,
            top_p: None,
            stop: vec![ANSWER_CLOSE.to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    /// Which of the ten instruction phrasings to use.
    #[serde(default)]
    pub template: usize,
    #[serde(default)]
    pub sampling: Sampling,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            template: 0,
            sampling: Sampling::default(),
        }
    }
}

pub fn render_extraction_prompt(template: usize, question: &str, utterance: &str) -> String {
    let sentence = EXTRACTION_TEMPLATES[template % EXTRACTION_TEMPLATES.len()];
    format!("{sentence}\nQuestion: {question}\nText: {utterance}\n{EXTRACTION_INSTRUCTION}")
}

pub fn render_selection_prompt(template: usize, req: &SelectionRequest) -> String {
    let sentence = SELECTION_TEMPLATES[template % SELECTION_TEMPLATES.len()];
    let mut out = format!("{sentence}\nText: {}\nQuestions:\n", req.utterance);
    for c in &req.candidates {
        out.push_str(&format!("{}. {}\n", c.label, c.question));
    }
    out.push_str(SELECTION_INSTRUCTION);
    out
}

/// Payload inside `<answer>...</answer>`; the closing tag may be absent.
/// Text without an opening tag is taken whole.
pub fn parse_tagged_answer(text: &str) -> &str {
    match text.find(ANSWER_OPEN) {
        Some(open) => {
            let rest = &text[open + ANSWER_OPEN.len()..];
            let end = rest.find(ANSWER_CLOSE).unwrap_or(rest.len());
            rest[..end].trim()
        }
        None => text.trim(),
    }
}

/// Choice labels from free text such as `"a, d"` or `"(b) and c."`; labels not
/// offered in `req` are dropped.
pub fn parse_choice_labels<'a, I>(parts: I, req: &SelectionRequest) -> BTreeSet<char>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = BTreeSet::new();
    for part in parts {
        for piece in part.split(|c: char| c == ',' || c == ';' || c.is_whitespace()) {
            let piece = piece.trim_matches(|c: char| !c.is_alphanumeric());
            let mut chars = piece.chars();
            if let (Some(ch), None) = (chars.next(), chars.next()) {
                let ch = ch.to_ascii_lowercase();
                if req.has_label(ch) {
                    out.insert(ch);
                }
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct WireCandidate<'a> {
    label: String,
    question: &'a str,
}

#[derive(Debug, Serialize)]
struct SelectBody<'a> {
    utterance: &'a str,
    candidates: Vec<WireCandidate<'a>>,
    prompt: String,
    sampling: &'a Sampling,
}

#[derive(Debug, Deserialize)]
struct SelectReply {
    #[serde(default)]
    selected: Option<Vec<String>>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Debug, Serialize)]
struct ExtractBody<'a> {
    question: &'a str,
    utterance: &'a str,
    prompt: String,
    sampling: &'a Sampling,
}

#[derive(Debug, Deserialize)]
struct ExtractReply {
    answer: Option<String>,
}

#[derive(Debug, Serialize)]
struct CompleteBody<'a> {
    slot_kind: &'a str,
    raw: &'a str,
    reference_date: String,
}

#[derive(Debug, Deserialize)]
struct CompleteReply {
    value: Option<String>,
}

#[derive(Debug, Serialize)]
struct GenerateBody<'a> {
    prompt: &'a str,
    sampling: &'a Sampling,
}

#[derive(Debug, Deserialize)]
struct GenerateReply {
    text: Option<String>,
}

/// Remote backend; implements selection, extraction, completion and raw generation.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, BackendError> {
        let url = format!("{}{}", self.config.base_url.trim_end_matches('/'), path);
        let mut response = self.agent.post(&url).send_json(body).map_err(|e| self.map_error(e))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(BackendError::Status(status));
        }
        response
            .body_mut()
            .read_json::<R>()
            .map_err(|e| match self.map_error(e) {
                BackendError::Transport(msg) => BackendError::Malformed(msg),
                other => other,
            })
    }

    fn map_error(&self, err: ureq::Error) -> BackendError {
        match err {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.config.timeout_ms),
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
                BackendError::Timeout(self.config.timeout_ms)
            }
            ureq::Error::Json(e) => BackendError::Malformed(e.to_string()),
            other => BackendError::Transport(other.to_string()),
        }
    }

    /// Raw text generation (`POST /v1/generate`).
    pub fn generate(&self, prompt: &str, sampling: &Sampling) -> Result<String, BackendError> {
        let reply: GenerateReply = self.post("/v1/generate", &GenerateBody { prompt, sampling })?;
        reply.text.ok_or_else(|| BackendError::Malformed("missing `text`".into()))
    }
}

impl EntitySelector for RemoteBackend {
    fn select(&self, req: &SelectionRequest) -> Result<SelectionResult, BackendError> {
        req.validate()?;
        let started = Instant::now();
        let body = SelectBody {
            utterance: &req.utterance,
            candidates: req
                .candidates
                .iter()
                .map(|c| WireCandidate {
                    label: c.label.to_string(),
                    question: &c.question,
                })
                .collect(),
            prompt: render_selection_prompt(self.config.template, req),
            sampling: &self.config.sampling,
        };
        let reply: SelectReply = self.post("/v1/select", &body)?;
        let selected = match (reply.selected, reply.text) {
            (Some(list), _) => parse_choice_labels(list.iter().map(|s| parse_tagged_answer(s)), req),
            (None, Some(text)) => parse_choice_labels([parse_tagged_answer(&text)], req),
            (None, None) => return Err(BackendError::Malformed("missing `selected`".into())),
        };
        Ok(SelectionResult {
            selected,
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}

impl EntityExtractor for RemoteBackend {
    fn extract(&self, req: &ExtractionRequest) -> Result<ExtractionResult, BackendError> {
        let started = Instant::now();
        let body = ExtractBody {
            question: &req.question,
            utterance: &req.utterance,
            prompt: render_extraction_prompt(self.config.template, &req.question, &req.utterance),
            sampling: &self.config.sampling,
        };
        let reply: ExtractReply = self.post("/v1/extract", &body)?;
        let raw = reply.answer.ok_or_else(|| BackendError::Malformed("missing `answer`".into()))?;
        let answer = parse_tagged_answer(&raw);
        let span = if answer.is_empty() {
            None
        } else {
            Some(Span::locate(&req.utterance, answer).ok_or_else(|| BackendError::NonExtractive(answer.to_string()))?)
        };
        Ok(ExtractionResult {
            span,
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}

impl ValueCompleter for RemoteBackend {
    fn complete(&self, slot: &SlotDef, raw: &str, ctx: &ReferenceContext) -> Result<String, BackendError> {
        let body = CompleteBody {
            slot_kind: slot.value_kind.as_str(),
            raw,
            reference_date: ctx.date().format("%Y-%m-%d").to_string(),
        };
        let reply: CompleteReply = self.post("/v1/complete", &body)?;
        let value = reply.value.unwrap_or_default();
        let value = parse_tagged_answer(&value);
        if value.is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(value.to_string())
    }
}
