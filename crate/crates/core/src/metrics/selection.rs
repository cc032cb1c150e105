use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::scalar::{f1, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> Prf<T> {
    /// From confusion counts. A zero denominator scores 1 when nothing was
    /// missed on that side, 0 otherwise.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 {
            if fn_ == 0 { T::one() } else { T::zero() }
        } else {
            T::ratio(tp, tp + fp)
        };
        let recall = if tp + fn_ == 0 {
            if fp == 0 { T::one() } else { T::zero() }
        } else {
            T::ratio(tp, tp + fn_)
        };
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEval<T> {
    pub examples: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Pooled counts.
    pub micro: Prf<T>,
    /// Mean of per-example scores.
    pub macro_avg: Prf<T>,
}

/// Multi-label precision/recall/F1 over `(gold, pred)` label sets.
pub fn selection_prf<T, L>(examples: &[(BTreeSet<L>, BTreeSet<L>)]) -> Result<SelectionEval<T>, MetricError>
where
    T: Scalar,
    L: Ord,
{
    if examples.is_empty() {
        return Err(MetricError::Empty);
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let (mut p_sum, mut r_sum, mut f_sum) = (T::zero(), T::zero(), T::zero());
    for (gold, pred) in examples {
        let hit = gold.intersection(pred).count();
        let ex = Prf::<T>::from_counts(hit, pred.len() - hit, gold.len() - hit);
        tp += hit;
        fp += pred.len() - hit;
        fn_ += gold.len() - hit;
        p_sum = p_sum + ex.precision;
        r_sum = r_sum + ex.recall;
        f_sum = f_sum + ex.f1;
    }
    let n = T::from_count(examples.len());
    Ok(SelectionEval {
        examples: examples.len(),
        tp,
        fp,
        fn_,
        micro: Prf::from_counts(tp, fp, fn_),
        macro_avg: Prf {
            precision: p_sum / n,
            recall: r_sum / n,
            f1: f_sum / n,
        },
    })
}
