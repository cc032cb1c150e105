//! Offline evaluation over JSONL files.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hragent_core::backends::{BaselineExtractor, BaselineSelector, SelectionRequest, SelectorConfig};
use hragent_core::datagen::{read_jsonl, Scenario};
use hragent_core::metrics::report::{dst_table, extraction_table, selection_table};
use hragent_core::metrics::{dst_eval_dialogues, rouge, selection_prf, AgaMode, DstEval, RougeScores, SelectionEval, SlotMap};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
    Pretty,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, Value)>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).with_context(|| format!("{}:{}: invalid JSON", path.display(), i + 1))?;
        out.push((i + 1, v));
    }
    Ok(out)
}

/// One dialogue per line: an array of per-turn slot maps, or `{"turns": [...]}`.
pub fn read_dst_jsonl(path: &Path) -> Result<Vec<Vec<SlotMap>>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, v)| {
            let turns = match v {
                Value::Object(mut o) if o.contains_key("turns") => o.remove("turns").expect("checked"),
                other => other,
            };
            serde_json::from_value(turns).with_context(|| format!("{}:{line}: expected an array of slot maps", path.display()))
        })
        .collect()
}

pub fn eval_dst(pred: &Path, gold: &Path, mode: AgaMode) -> Result<DstEval<f64>> {
    let pred = read_dst_jsonl(pred)?;
    let gold = read_dst_jsonl(gold)?;
    if pred.len() != gold.len() {
        bail!("{} predicted dialogues but {} gold dialogues", pred.len(), gold.len());
    }
    let pairs: Vec<_> = pred.into_iter().zip(gold).collect();
    Ok(dst_eval_dialogues(&pairs, mode)?)
}

pub fn render_dst(e: &DstEval<f64>, format: Format) -> String {
    match format {
        Format::Csv => {
            let aga = e.aga.map_or("n/a".to_string(), |a| format!("{a:.3}"));
            format!("metric,value\njga,{:.3}\naga,{aga}\nturns,{}\n", e.jga, e.turn_count)
        }
        Format::Json => serde_json::to_string_pretty(e).expect("serializable") + "\n",
        Format::Pretty => dst_table(&[("local", e)]).to_pretty(),
    }
}

fn is_dataset(lines: &[(usize, Value)]) -> bool {
    lines.first().is_some_and(|(_, v)| v.get("utterance").is_some())
}

fn dataset(path: &Path) -> Result<Vec<Scenario>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_jsonl(std::io::BufReader::new(file))?
        .into_iter()
        .filter(|r| r.verdict.as_ref().is_none_or(|v| v.kept))
        .map(|r| r.scenario)
        .collect())
}

/// `{gold, pred}` label pairs, or a scenario dataset run through the baseline selector.
pub fn eval_select(path: &Path) -> Result<SelectionEval<f64>> {
    let lines = read_lines(path)?;
    let pairs: Vec<(BTreeSet<String>, BTreeSet<String>)> = if is_dataset(&lines) {
        let selector = BaselineSelector::new(SelectorConfig::default());
        dataset(path)?
            .into_iter()
            .map(|s| {
                let req = SelectionRequest::new(
                    s.utterance.clone(),
                    s.questions.iter().map(|q| (q.label.to_string(), q.text.clone())),
                )?;
                let gold = s.output1.iter().map(char::to_string).collect();
                let pred = selector.select_labels(&req).into_iter().map(String::from).collect();
                Ok((gold, pred))
            })
            .collect::<Result<_>>()?
    } else {
        #[derive(Deserialize)]
        struct Pair {
            gold: BTreeSet<String>,
            pred: BTreeSet<String>,
        }
        lines
            .into_iter()
            .map(|(line, v)| {
                let p: Pair = serde_json::from_value(v).with_context(|| format!("{}:{line}: expected {{gold, pred}}", path.display()))?;
                Ok((p.gold, p.pred))
            })
            .collect::<Result<_>>()?
    };
    Ok(selection_prf(&pairs)?)
}

pub fn render_select(e: &SelectionEval<f64>, format: Format) -> String {
    match format {
        Format::Csv => format!(
            "metric,micro,macro\nprecision,{:.3},{:.3}\nrecall,{:.3},{:.3}\nf1,{:.3},{:.3}\nexamples,{},{}\n",
            e.micro.precision, e.macro_avg.precision, e.micro.recall, e.macro_avg.recall, e.micro.f1, e.macro_avg.f1, e.examples, e.examples
        ),
        Format::Json => serde_json::to_string_pretty(e).expect("serializable") + "\n",
        Format::Pretty => selection_table("local", e).to_pretty(),
    }
}

/// `{prediction, reference}` pairs, or a scenario dataset run through the baseline extractor.
pub fn eval_extract(path: &Path) -> Result<Vec<RougeScores<f64>>> {
    let lines = read_lines(path)?;
    let pairs: Vec<(String, String)> = if is_dataset(&lines) {
        let mut out = Vec::new();
        for s in dataset(path)? {
            for (label, answer) in s.output1.iter().zip(&s.output2) {
                let Some(q) = s.question(*label) else { continue };
                let pred = BaselineExtractor.extract_span(q, &s.utterance).map(|sp| sp.text).unwrap_or_default();
                out.push((pred, answer.clone()));
            }
        }
        out
    } else {
        #[derive(Deserialize)]
        struct Pair {
            prediction: String,
            reference: String,
        }
        lines
            .into_iter()
            .map(|(line, v)| {
                let p: Pair = serde_json::from_value(v)
                    .with_context(|| format!("{}:{line}: expected {{prediction, reference}}", path.display()))?;
                Ok((p.prediction, p.reference))
            })
            .collect::<Result<_>>()?
    };
    if pairs.is_empty() {
        bail!("{} holds no extraction examples", path.display());
    }
    Ok(pairs.iter().map(|(p, r)| rouge(p, r)).collect())
}

pub fn render_extract(scores: &[RougeScores<f64>], format: Format) -> String {
    let n = scores.len() as f64;
    let r1 = scores.iter().map(|s| s.rouge1.f1).sum::<f64>() / n;
    let rl = scores.iter().map(|s| s.rouge_l.f1).sum::<f64>() / n;
    match format {
        Format::Csv => format!("metric,value\nrouge1,{r1:.3}\nrougeL,{rl:.3}\nexamples,{}\n", scores.len()),
        Format::Json => serde_json::to_string_pretty(&json!({"rouge1": r1, "rougeL": rl, "examples": scores.len()})).expect("json") + "\n",
        Format::Pretty => extraction_table("local", scores, None).to_pretty(),
    }
}
