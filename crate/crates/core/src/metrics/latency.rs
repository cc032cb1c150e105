use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    /// Sorted ascending.
    pub samples: Vec<f64>,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

pub fn latency_report(samples: &[f64]) -> Result<LatencyReport, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(LatencyReport {
        p50: nearest_rank(&sorted, 50.0),
        p90: nearest_rank(&sorted, 90.0),
        p99: nearest_rank(&sorted, 99.0),
        samples: sorted,
    })
}

fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl LatencyReport {
    pub fn percentile(&self, pct: f64) -> f64 {
        nearest_rank(&self.samples, pct)
    }

    /// Share of samples strictly below `threshold_ms`.
    pub fn fraction_under<T: Scalar>(&self, threshold_ms: f64) -> T {
        let n = self.samples.iter().filter(|&&x| x < threshold_ms).count();
        T::ratio(n, self.samples.len())
    }

    /// `(bucket lower bound, count)` with fixed-width buckets.
    pub fn histogram(&self, bucket_ms: f64) -> Vec<(u64, usize)> {
        let mut buckets: BTreeMap<u64, usize> = BTreeMap::new();
        for &x in &self.samples {
            let b = ((x.max(0.0) / bucket_ms).floor() * bucket_ms) as u64;
            *buckets.entry(b).or_default() += 1;
        }
        buckets.into_iter().collect()
    }
}
