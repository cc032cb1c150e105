use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cues::{self, AnswerKind};
use super::text::content_keys;
use super::{BackendError, EntitySelector, SelectionRequest, SelectionResult};

/// Scoring weights for [`BaselineSelector`].
///
/// A candidate scores one point per content word it shares with the utterance
/// plus a cue bonus when the utterance contains something of the kind the
/// question asks for. Typed values (dates, times, money) are claimed by at most
/// one question each, in candidate order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub threshold: u32,
    pub overlap_weight: u32,
    pub typed_cue_weight: u32,
    pub soft_cue_weight: u32,
    /// Minimum score for the candidate the agent just asked about.
    pub focus_threshold: u32,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            threshold: 2,
            overlap_weight: 1,
            typed_cue_weight: 2,
            soft_cue_weight: 1,
            focus_threshold: 1,
        }
    }
}

/// Token-overlap selector with value-kind keyword cues.
#[derive(Debug, Clone, Default)]
pub struct BaselineSelector {
    pub config: SelectorConfig,
}

impl BaselineSelector {
    pub fn new(config: SelectorConfig) -> Self {
        Self { config }
    }

    pub fn select_labels(&self, req: &SelectionRequest) -> BTreeSet<char> {
        let utterance = req.utterance.as_str();
        let utter_keys: HashSet<String> = content_keys(utterance).into_iter().collect();
        let mut selected = BTreeSet::new();
        if utter_keys.is_empty() {
            return selected;
        }

        let mut dates = cues::date_spans(utterance).len();
        let mut times = cues::time_spans(utterance).len();
        let mut money = cues::money_spans(utterance).len();
        let has_purpose = !cues::purpose_spans(utterance).is_empty();
        let has_name = !cues::introduced_names(utterance).is_empty();
        let has_location = !cues::location_spans(utterance).is_empty();
        let has_count = !cues::count_spans(utterance).is_empty();

        let cfg = &self.config;
        let mut focus_score = None;
        for cand in &req.candidates {
            let kind = cues::answer_kind(&cand.question);
            if kind == AnswerKind::YesNo {
                continue;
            }
            let q_keys: HashSet<String> = content_keys(&cand.question).into_iter().collect();
            let overlap = q_keys.intersection(&utter_keys).count() as u32;
            let claim = |budget: &mut usize| {
                if *budget > 0 {
                    *budget -= 1;
                    cfg.typed_cue_weight
                } else {
                    0
                }
            };
            let cue = match kind {
                AnswerKind::Date => claim(&mut dates),
                AnswerKind::Time => claim(&mut times),
                AnswerKind::Money => claim(&mut money),
                AnswerKind::Purpose if has_purpose => cfg.soft_cue_weight,
                AnswerKind::Name if has_name => cfg.soft_cue_weight,
                AnswerKind::Location if has_location => cfg.soft_cue_weight,
                AnswerKind::Count if has_count => cfg.soft_cue_weight,
                AnswerKind::Type if !cues::type_spans(utterance, &cand.question).is_empty() => cfg.soft_cue_weight,
                _ => 0,
            };
            let score = overlap * cfg.overlap_weight + cue;
            if score >= cfg.threshold {
                selected.insert(cand.label);
            }
            if req.focus == Some(cand.label) {
                focus_score = Some((score, kind));
            }
        }

        if let (Some(label), Some((score, kind))) = (req.focus, focus_score) {
            let typed = matches!(kind, AnswerKind::Date | AnswerKind::Time | AnswerKind::Money);
            if score >= cfg.focus_threshold || (selected.is_empty() && !typed) {
                selected.insert(label);
            }
        }
        selected
    }
}

impl EntitySelector for BaselineSelector {
    fn select(&self, req: &SelectionRequest) -> Result<SelectionResult, BackendError> {
        let started = Instant::now();
        req.validate()?;
        let selected = self.select_labels(req);
        Ok(SelectionResult {
            selected,
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}
