use crate::backends::text::word_tokens;
use crate::backends::SentimentScore;
use crate::schema::{DialogueState, TerminationReason};

use super::EngineConfig;

/// Decides whether the session must end after the latest user turn.
///
/// Repeated clarification wins over sentiment. Sentiment only counts on
/// scheduled turns (every `sentiment_period`-th user turn, counting from 1).
pub fn check_guardrails(
    state: &DialogueState,
    cfg: &EngineConfig,
    latest_sentiment: Option<SentimentScore>,
) -> Option<TerminationReason> {
    if state.clarify_count.values().any(|&n| n > cfg.clarify_limit) {
        return Some(TerminationReason::RepeatLimit);
    }
    if sentiment_scheduled(state.user_turn_count, cfg) {
        if let Some(score) = latest_sentiment {
            if score.negative_prob > cfg.sentiment_threshold {
                return Some(TerminationReason::SentimentLimit);
            }
        }
    }
    None
}

pub fn sentiment_scheduled(user_turn_count: u32, cfg: &EngineConfig) -> bool {
    user_turn_count > 0 && user_turn_count.is_multiple_of(cfg.sentiment_period)
}

const AFFIRMATIVE: &[&str] = &["yes", "correct", "confirm", "confirmed", "right", "yep", "yeah"];
const NEGATING: &[&str] = &[
    "no", "not", "wrong", "incorrect", "change", "fix", "actually", "but", "isn't", "isnt", "wait", "update",
];

/// Affirmative confirmation reply: contains a yes-word and nothing that
/// signals a correction.
pub fn is_affirmative(utterance: &str) -> bool {
    let words: Vec<String> = word_tokens(utterance).into_iter().map(|t| t.lower).collect();
    words.iter().any(|w| AFFIRMATIVE.contains(&w.as_str())) && !words.iter().any(|w| NEGATING.contains(&w.as_str()))
}

/// The user asked to stop.
pub fn is_abort(utterance: &str) -> bool {
    let words: Vec<String> = word_tokens(utterance).into_iter().map(|t| t.lower).collect();
    matches!(
        words.iter().map(String::as_str).collect::<Vec<_>>().as_slice(),
        ["cancel"] | ["stop"] | ["quit"] | ["abort"] | ["exit"] | ["cancel", "this"] | ["never", "mind"] | ["nevermind"]
    )
}

/// "Could you tell me <question>?" with the question's first letter lowercased.
pub fn clarify_text(question: &str) -> String {
    let q = question.trim().trim_end_matches('?').trim();
    let mut chars = q.chars();
    let lowered = match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect::<String>(),
        None => String::new(),
    };
    format!("Could you tell me {lowered}?")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{parse_schema, DialogueState};

    fn state() -> DialogueState {
        let schema = parse_schema(include_str!("../../../../schemas/time_off.json")).unwrap();
        DialogueState::new(&schema)
    }

    fn neg(p: f64) -> Option<SentimentScore> {
        Some(SentimentScore { negative_prob: p })
    }

    #[test]
    fn fourth_clarification_hits_repeat_limit() {
        let cfg = EngineConfig::default();
        let mut s = state();
        s.clarify_count.insert("timeOffStartDate".into(), 3);
        assert_eq!(check_guardrails(&s, &cfg, None), None);
        s.clarify_count.insert("timeOffStartDate".into(), 4);
        assert_eq!(check_guardrails(&s, &cfg, None), Some(TerminationReason::RepeatLimit));
    }

    #[test]
    fn sentiment_only_on_scheduled_turns() {
        let cfg = EngineConfig::default();
        let mut s = state();
        s.user_turn_count = 4;
        assert_eq!(check_guardrails(&s, &cfg, neg(0.6)), Some(TerminationReason::SentimentLimit));
        assert_eq!(check_guardrails(&s, &cfg, neg(0.4)), None);
        assert_eq!(check_guardrails(&s, &cfg, neg(0.5)), None);
        s.user_turn_count = 3;
        assert_eq!(check_guardrails(&s, &cfg, neg(0.9)), None);
        s.user_turn_count = 8;
        assert_eq!(check_guardrails(&s, &cfg, neg(0.51)), Some(TerminationReason::SentimentLimit));
    }

    #[test]
    fn affirmation_words() {
        assert!(is_affirmative("yes"));
        assert!(is_affirmative("Yes, that's right."));
        assert!(is_affirmative("correct"));
        assert!(!is_affirmative("no, change the date"));
        assert!(!is_affirmative("yes but the date is wrong"));
        assert!(!is_affirmative("the date should be Friday"));
        assert!(is_abort("Cancel"));
        assert!(!is_abort("cancel my flight on Monday"));
    }

    #[test]
    fn clarify_wording() {
        assert_eq!(
            clarify_text("When is the requested time off?"),
            "Could you tell me when is the requested time off?"
        );
    }
}
