use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vote {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSummary<T> {
    pub count_a: usize,
    pub count_b: usize,
    pub rate_a: T,
}

pub fn preference_summary<T: Scalar>(votes: &[Vote]) -> Result<PreferenceSummary<T>, MetricError> {
    if votes.is_empty() {
        return Err(MetricError::Empty);
    }
    let count_a = votes.iter().filter(|v| **v == Vote::A).count();
    Ok(PreferenceSummary {
        count_a,
        count_b: votes.len() - count_a,
        rate_a: T::ratio(count_a, votes.len()),
    })
}
