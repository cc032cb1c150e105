//! Latency benchmark: replays scripted dialogues through the engine and adds
//! recorded model latencies to the measured engine overhead.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hragent_core::engine::{Engine, EngineConfig};
use hragent_core::metrics::{latency_report, LatencyReport};
use hragent_core::normalize::ReferenceContext;
use hragent_core::schema::{parse_schema, TaskSchema};
use hragent_core::{Exact, Scalar};

pub const DEFAULT_BUDGET_MS: f64 = 2000.0;

/// One scripted time-off dialogue; every turn is a user message.
pub const SCRIPT: &[&str] = &[
    "I am taking next Thursday off as a vacation day.",
    "My name is Dana Smith",
    "yes",
];

pub fn time_off_schema() -> TaskSchema {
    parse_schema(include_str!("../../../schemas/time_off.json")).expect("bundled schema")
}

/// Latencies in milliseconds from a CSV file: the `latency_ms` column if the
/// header has one, otherwise the first column.
pub fn read_latency_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let col = reader.headers()?.iter().position(|h| h.trim() == "latency_ms").unwrap_or(0);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = rec.get(col).unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .with_context(|| format!("row {}: `{field}` is not a number", i + 2))?;
        if !v.is_finite() || v < 0.0 {
            bail!("row {}: latency must be a non-negative number", i + 2);
        }
        out.push(v);
    }
    if out.is_empty() {
        bail!("{} holds no latency rows", path.display());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub turns: usize,
    pub budget_ms: f64,
    /// Model latency plus engine overhead, per turn.
    pub simulated: LatencyReport,
    pub overhead: LatencyReport,
    pub fraction_under: Exact,
}

impl BenchReport {
    pub fn render(&self) -> String {
        format!(
            "turns,{}\np50_ms,{:.3}\np90_ms,{:.3}\np99_ms,{:.3}\nfraction_under_{}ms,{}\nengine_overhead_p99_ms,{:.3}\n",
            self.turns,
            self.simulated.p50,
            self.simulated.p90,
            self.simulated.p99,
            self.budget_ms,
            self.fraction_under.to_f64(),
            self.overhead.p99,
        )
    }
}

/// Runs `turns` user turns. Turn `i` is charged `mock[i % mock.len()]` of
/// model latency on top of its measured overhead; an empty `mock` measures
/// overhead alone.
pub fn run_bench(turns: usize, mock: &[f64], budget_ms: f64) -> Result<BenchReport> {
    if turns == 0 {
        bail!("turns must be positive");
    }
    let engine = Engine::baseline();
    let schema = time_off_schema();
    let ctx = ReferenceContext::host_now();
    let mut overhead = Vec::with_capacity(turns);
    let mut simulated = Vec::with_capacity(turns);
    let mut session: Option<String> = None;
    let mut step = 0;
    for i in 0..turns {
        let id = match &session {
            Some(id) => id.clone(),
            None => {
                let (id, _) = engine.start_session(schema.clone(), EngineConfig::default(), ctx)?;
                session = Some(id.clone());
                step = 0;
                id
            }
        };
        let action = engine.handle_user_turn(&id, SCRIPT[step])?;
        let o = action.timing.overhead_ms();
        overhead.push(o);
        simulated.push(o + if mock.is_empty() { 0.0 } else { mock[i % mock.len()] });
        step += 1;
        if step == SCRIPT.len() {
            engine.remove(&id);
            session = None;
        }
    }
    let simulated = latency_report(&simulated)?;
    Ok(BenchReport {
        turns,
        budget_ms,
        fraction_under: simulated.fraction_under::<Exact>(budget_ms),
        overhead: latency_report(&overhead)?,
        simulated,
    })
}
