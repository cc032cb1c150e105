use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::backends::text::{jaccard, word_set};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    NotExtractive,
    CountMismatch,
    YesNoAnswer,
    DuplicateQuestion,
    ValidatorRejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub kept: bool,
    pub reasons: Vec<FilterReason>,
}

impl FilterVerdict {
    fn from_reasons(reasons: Vec<FilterReason>) -> Self {
        Self {
            kept: reasons.is_empty(),
            reasons,
        }
    }

    /// Adds the validator outcome to a structural verdict.
    pub fn with_validation(mut self, accepted: bool) -> Self {
        if !accepted && !self.reasons.contains(&FilterReason::ValidatorRejected) {
            self.reasons.push(FilterReason::ValidatorRejected);
        }
        self.kept = self.reasons.is_empty();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Two questions more similar than this (token Jaccard) are duplicates.
    pub duplicate_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { duplicate_threshold: 0.8 }
    }
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Structural checks; validator results are folded in with
/// [`FilterVerdict::with_validation`].
pub fn filter_scenario(s: &Scenario, cfg: &FilterConfig) -> FilterVerdict {
    let mut reasons = Vec::new();
    let utterance = squash(&s.utterance);
    if s.output2.iter().any(|a| {
        let a = squash(a);
        a.is_empty() || !utterance.contains(&a)
    }) {
        reasons.push(FilterReason::NotExtractive);
    }
    let labels_known = s.output1.iter().all(|l| s.question(*l).is_some());
    let mut unique = s.output1.clone();
    unique.sort_unstable();
    unique.dedup();
    if s.output1.len() != s.output2.len() || !labels_known || unique.len() != s.output1.len() {
        reasons.push(FilterReason::CountMismatch);
    }
    if s
        .output2
        .iter()
        .any(|a| matches!(a.trim().trim_end_matches('.').to_lowercase().as_str(), "yes" | "no"))
    {
        reasons.push(FilterReason::YesNoAnswer);
    }
    let sets: Vec<_> = s.questions.iter().map(|q| word_set(&q.text)).collect();
    let duplicate = (0..sets.len()).any(|i| ((i + 1)..sets.len()).any(|j| jaccard(&sets[i], &sets[j]) > cfg.duplicate_threshold));
    if duplicate {
        reasons.push(FilterReason::DuplicateQuestion);
    }
    FilterVerdict::from_reasons(reasons)
}
