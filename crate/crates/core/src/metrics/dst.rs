use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::scalar::Scalar;

/// Slot id -> value for one turn.
pub type SlotMap = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgaMode {
    /// Correct pairs over all (turn, active slot) pairs.
    #[default]
    Micro,
    /// Per-turn accuracy, averaged over turns with at least one active slot.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DstEval<T> {
    pub jga: T,
    /// `None` when no turn has an active slot.
    pub aga: Option<T>,
    pub turn_count: usize,
    pub active_slot_count: usize,
}

fn clean(v: &str) -> String {
    v.trim().to_lowercase()
}

/// Drops empty values and normalizes the rest, so key order and blank
/// entries never affect the comparison.
fn canonical(map: &SlotMap) -> BTreeMap<&str, String> {
    map.iter()
        .map(|(k, v)| (k.as_str(), clean(v)))
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

pub fn dst_eval<T: Scalar>(pred: &[SlotMap], gold: &[SlotMap]) -> Result<DstEval<T>, MetricError> {
    dst_eval_with(pred, gold, AgaMode::Micro)
}

pub fn dst_eval_with<T: Scalar>(pred: &[SlotMap], gold: &[SlotMap], mode: AgaMode) -> Result<DstEval<T>, MetricError> {
    if pred.len() != gold.len() {
        return Err(MetricError::TurnCountMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut joint = 0;
    let mut active = 0;
    let mut correct = 0;
    let mut turn_acc_sum = T::zero();
    let mut active_turns = 0;
    for (p, g) in pred.iter().zip(gold) {
        let (p, g) = (canonical(p), canonical(g));
        if p == g {
            joint += 1;
        }
        let hits = g.iter().filter(|(k, v)| p.get(*k) == Some(*v)).count();
        active += g.len();
        correct += hits;
        if !g.is_empty() {
            active_turns += 1;
            turn_acc_sum = turn_acc_sum + T::ratio(hits, g.len());
        }
    }
    let aga = match mode {
        AgaMode::Micro if active > 0 => Some(T::ratio(correct, active)),
        AgaMode::Macro if active_turns > 0 => Some(turn_acc_sum / T::from_count(active_turns)),
        _ => None,
    };
    Ok(DstEval {
        jga: T::ratio(joint, gold.len()),
        aga,
        turn_count: gold.len(),
        active_slot_count: active,
    })
}

/// Pools the turns of several dialogues; each dialogue must line up on its own.
pub fn dst_eval_dialogues<T: Scalar>(dialogues: &[(Vec<SlotMap>, Vec<SlotMap>)], mode: AgaMode) -> Result<DstEval<T>, MetricError> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for (p, g) in dialogues {
        if p.len() != g.len() {
            return Err(MetricError::TurnCountMismatch { pred: p.len(), gold: g.len() });
        }
        pred.extend(p.iter().cloned());
        gold.extend(g.iter().cloned());
    }
    dst_eval_with(&pred, &gold, mode)
}
