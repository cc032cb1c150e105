//! Evaluation metrics. Every score is generic over [`Scalar`], so the same
//! code yields `f64` for reports and exact rationals for oracle checks.

mod dst;
mod latency;
mod preference;
pub mod report;
mod rouge;
mod selection;

use thiserror::Error;

pub use dst::{dst_eval, dst_eval_dialogues, dst_eval_with, AgaMode, DstEval, SlotMap};
pub use latency::{latency_report, LatencyReport};
pub use preference::{preference_summary, PreferenceSummary, Vote};
pub use rouge::{lcs_len, rouge, rouge_tokens, tokenize, RougeScores};
pub use selection::{selection_prf, Prf, SelectionEval};

pub use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no examples to score")]
    Empty,
    #[error("prediction has {pred} turns but gold has {gold}")]
    TurnCountMismatch { pred: usize, gold: usize },
}
