use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatagenError, FilterVerdict, Scenario, ScenarioRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.9, test: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    /// Every parsed scenario, with its verdict.
    pub raw: Vec<ScenarioRecord>,
    /// Kept scenarios not drawn for test.
    pub clean: Vec<ScenarioRecord>,
    pub test: Vec<ScenarioRecord>,
    pub warnings: Vec<String>,
}

/// `test` takes `round(kept * ratios.test)` kept scenarios after a seeded
/// shuffle; the remaining kept scenarios form `clean`.
pub fn split_dataset(
    scenarios: &[Scenario],
    verdicts: &[FilterVerdict],
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit, DatagenError> {
    let sum = ratios.train + ratios.test;
    if ratios.train < 0.0 || ratios.test < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(DatagenError::BadRatios(sum));
    }
    if scenarios.len() != verdicts.len() {
        return Err(DatagenError::Precondition(format!(
            "{} scenarios but {} verdicts",
            scenarios.len(),
            verdicts.len()
        )));
    }
    let raw: Vec<ScenarioRecord> = scenarios
        .iter()
        .zip(verdicts)
        .map(|(s, v)| ScenarioRecord {
            scenario: s.clone(),
            verdict: Some(v.clone()),
        })
        .collect();
    let mut kept: Vec<usize> = (0..raw.len()).filter(|&i| verdicts[i].kept).collect();
    let mut warnings = Vec::new();
    if kept.is_empty() {
        warnings.push("no scenario passed the filters; clean and test splits are empty".to_string());
    }
    kept.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (kept.len() as f64 * ratios.test).round() as usize;
    let (test_idx, train_idx) = kept.split_at(n_test);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| raw[i].clone()).collect::<Vec<_>>()
    };
    Ok(DatasetSplit {
        clean: pick(train_idx),
        test: pick(test_idx),
        raw,
        warnings,
    })
}
