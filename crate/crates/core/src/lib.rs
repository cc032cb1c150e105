//! Schema-guided task-oriented dialogue for HR workflows.
//!
//! [`engine::Engine`] runs sessions turn by turn against pluggable
//! [`backends`]; [`metrics`] scores selection, extraction and state tracking;
//! [`datagen`] builds and cleans synthetic training scenarios.

pub mod backends;
pub mod datagen;
pub mod engine;
pub mod metrics;
pub mod normalize;
pub mod scalar;
pub mod schema;

pub use scalar::Scalar;

/// Exact rational scalar, used for oracle comparisons.
pub type Exact = num_rational::Ratio<i64>;
pub type SelectionEvalF64 = metrics::SelectionEval<f64>;
pub type SelectionEvalExact = metrics::SelectionEval<Exact>;
pub type RougeScoresF64 = metrics::RougeScores<f64>;
pub type RougeScoresExact = metrics::RougeScores<Exact>;
pub type DstEvalF64 = metrics::DstEval<f64>;
pub type DstEvalExact = metrics::DstEval<Exact>;
