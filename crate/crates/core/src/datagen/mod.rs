//! Synthetic training data: batched generation prompts, parsing of generated
//! scenario blocks, cleaning filters, validation prompts and dataset splits.

mod filter;
mod parse;
mod prompt;
mod split;
mod validate;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::remote::{RemoteBackend, Sampling};
use crate::backends::BackendError;

pub use filter::{filter_scenario, FilterConfig, FilterReason, FilterVerdict};
pub use parse::{format_scenario, parse_scenarios, DiagnosticKind, ParseDiagnostic, ParseOutput};
pub use prompt::{build_prompt, draw_prompt, FewShot, PromptDraw, FEW_SHOTS, HR_DOMAINS, REQUIREMENTS};
pub use split::{split_dataset, DatasetSplit, SplitRatios};
pub use validate::{
    build_batch_validation_prompt, build_validation_prompt, parse_rejected_lines, validator_accepts, ValidationPolicy,
    ValidationTemplate, VALIDATION_BATCH_SIZE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatagenError {
    #[error("domain list is empty")]
    NoDomains,
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("split ratios must be non-negative and sum to 1 (got {0})")]
    BadRatios(f64),
    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// A count that is either fixed or drawn uniformly from an inclusive range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountSpec {
    Fixed(usize),
    Range { min: usize, max: usize },
}

impl CountSpec {
    fn bounds(self) -> (usize, usize) {
        match self {
            CountSpec::Fixed(n) => (n, n),
            CountSpec::Range { min, max } => (min, max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub domains: Vec<String>,
    /// Questions per scenario.
    pub number1: CountSpec,
    /// Correct choices per scenario.
    pub number2: CountSpec,
    pub scenarios_per_call: usize,
    pub sampling: Sampling,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            domains: HR_DOMAINS.iter().map(|d| d.to_string()).collect(),
            number1: CountSpec::Range { min: 4, max: 8 },
            number2: CountSpec::Range { min: 1, max: 4 },
            scenarios_per_call: 20,
            sampling: Self::default_sampling(),
        }
    }
}

impl GenSpec {
    pub fn fixed(domains: &[&str], number1: usize, number2: usize) -> Self {
        Self {
            domains: domains.iter().map(|d| d.to_string()).collect(),
            number1: CountSpec::Fixed(number1),
            number2: CountSpec::Fixed(number2),
            ..Self::default()
        }
    }

    pub fn default_sampling() -> Sampling {
        Sampling {
            max_tokens: 4096,
            temperature: 1.0,
            top_k: Some(1),
            top_p: Some(0.6),
            stop: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.domains.iter().all(|d| d.trim().is_empty()) {
            return Err(DatagenError::NoDomains);
        }
        let (n1_min, n1_max) = self.number1.bounds();
        let (n2_min, n2_max) = self.number2.bounds();
        if n1_min > n1_max || n2_min > n2_max {
            return Err(DatagenError::InvalidSpec("range min exceeds max".into()));
        }
        if n2_min < 1 || n1_max > 26 || n2_min > n1_max {
            return Err(DatagenError::InvalidSpec(
                "need 1 <= number2 <= number1 <= 26".into(),
            ));
        }
        if self.scenarios_per_call == 0 {
            return Err(DatagenError::InvalidSpec("scenarios_per_call must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuestion {
    pub label: char,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub utterance: String,
    pub questions: Vec<LabeledQuestion>,
    pub output1: Vec<char>,
    pub output2: Vec<String>,
}

impl Scenario {
    pub fn question(&self, label: char) -> Option<&str> {
        self.questions.iter().find(|q| q.label == label).map(|q| q.text.as_str())
    }
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<FilterVerdict>,
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[ScenarioRecord]) -> Result<(), DatagenError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| DatagenError::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| DatagenError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<ScenarioRecord>, DatagenError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| DatagenError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatagenError::Jsonl {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// One generation call: prompt, remote completion, parse.
pub fn generate_batch(backend: &RemoteBackend, spec: &GenSpec, seed: u64) -> Result<ParseOutput, DatagenError> {
    let prompt = build_prompt(spec, seed)?;
    let text = backend.generate(&prompt, &spec.sampling)?;
    Ok(parse_scenarios(&text))
}

/// Runs one call per seed with at most `parallelism` in flight. Results are in seed order.
pub fn generate_many(
    backend: &RemoteBackend,
    spec: &GenSpec,
    seeds: &[u64],
    parallelism: usize,
) -> Vec<Result<ParseOutput, DatagenError>> {
    let parallelism = parallelism.max(1);
    let mut results = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(parallelism) {
        let batch: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| s.spawn(move || generate_batch(backend, spec, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("generation worker panicked"))
                .collect()
        });
        results.extend(batch);
    }
    results
}
