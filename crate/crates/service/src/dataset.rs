//! File-level datagen steps: filter and split, validation.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hragent_core::backends::remote::{RemoteBackend, Sampling};
use hragent_core::datagen::{
    build_validation_prompt, filter_scenario, parse_scenarios, read_jsonl, split_dataset, validator_accepts, write_jsonl,
    DatasetSplit, FilterConfig, ParseDiagnostic, Scenario, ScenarioRecord, SplitRatios, ValidationPolicy,
    ValidationTemplate,
};

/// Scenarios from raw model output text, or from a JSONL dataset (detected by
/// a leading `{`).
pub fn load_scenarios(path: &Path) -> Result<(Vec<Scenario>, Vec<ParseDiagnostic>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let records = read_jsonl(text.as_bytes())?;
        Ok((records.into_iter().map(|r| r.scenario).collect(), Vec::new()))
    } else {
        let out = parse_scenarios(&text);
        Ok((out.scenarios, out.diagnostics))
    }
}

pub fn filter_and_split(scenarios: &[Scenario], cfg: &FilterConfig, ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    let verdicts: Vec<_> = scenarios.iter().map(|s| filter_scenario(s, cfg)).collect();
    Ok(split_dataset(scenarios, &verdicts, ratios, seed)?)
}

/// Writes `raw.jsonl`, `clean.jsonl` and `test.jsonl` into `dir`.
pub fn write_split(dir: &Path, split: &DatasetSplit) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, records) in [("raw", &split.raw), ("clean", &split.clean), ("test", &split.test)] {
        let path = dir.join(format!("{name}.jsonl"));
        let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_jsonl(std::io::BufWriter::new(file), records)?;
    }
    Ok(())
}

/// Every (question, utterance, answer) triple of a scenario.
pub fn triples(s: &Scenario) -> Vec<(String, String, String)> {
    s.output1
        .iter()
        .zip(&s.output2)
        .filter_map(|(l, a)| Some((s.question(*l)?.to_string(), s.utterance.clone(), a.clone())))
        .collect()
}

pub fn validation_prompts(records: &[ScenarioRecord], template: ValidationTemplate) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for r in records {
        for (q, t, a) in triples(&r.scenario) {
            out.push(build_validation_prompt(&q, &t, &a, template)?);
        }
    }
    Ok(out)
}

/// Asks every validator about every triple; a scenario passes when all of its
/// triples pass under `policy`.
pub fn validate_records(
    records: Vec<ScenarioRecord>,
    validators: &[RemoteBackend],
    template: ValidationTemplate,
    policy: ValidationPolicy,
) -> Result<Vec<ScenarioRecord>> {
    if validators.is_empty() {
        bail!("at least one validator backend is required");
    }
    let sampling = Sampling {
        max_tokens: 5,
        temperature: 0.0,
        top_k: None,
        top_p: None,
        stop: Vec::new(),
    };
    let mut out = Vec::with_capacity(records.len());
    for mut r in records {
        let mut accepted = true;
        for (q, t, a) in triples(&r.scenario) {
            let prompt = build_validation_prompt(&q, &t, &a, template)?;
            let replies = validators
                .iter()
                .map(|v| v.generate(&prompt, &sampling))
                .collect::<Result<Vec<_>, _>>()?;
            if !validator_accepts(&replies, policy) {
                accepted = false;
                break;
            }
        }
        let verdict = r
            .verdict
            .take()
            .unwrap_or_else(|| filter_scenario(&r.scenario, &FilterConfig::default()));
        r.verdict = Some(verdict.with_validation(accepted));
        out.push(r);
    }
    Ok(out)
}
