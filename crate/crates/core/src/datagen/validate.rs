use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DatagenError;

/// Triples per grouped validation request.
pub const VALIDATION_BATCH_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationTemplate {
    /// The published wording, typo included.
    #[default]
    Verbatim,
    Corrected,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationPolicy {
    /// Every validator must answer yes.
    #[default]
    RequireAll,
    RequireAny,
}

fn check(question: &str, text: &str, answer: &str) -> Result<(), DatagenError> {
    for (name, v) in [("question", question), ("text", text), ("answer", answer)] {
        if v.trim().is_empty() {
            return Err(DatagenError::Precondition(format!("{name} is empty")));
        }
    }
    Ok(())
}

pub fn build_validation_prompt(question: &str, text: &str, answer: &str, template: ValidationTemplate) -> Result<String, DatagenError> {
    check(question, text, answer)?;
    Ok(match template {
        ValidationTemplate::Verbatim => format!(
            "Question: {question}  Text: {text}   Answer: {answer} Does tha Answer answer the Question based on Text? The answer could be yes or no"
        ),
        ValidationTemplate::Corrected => format!(
            "Question: {question}\nText: {text}\nAnswer: {answer}\nDoes the Answer answer the Question based on the Text? The answer can be yes or no."
        ),
    })
}

/// One prompt covering up to [`VALIDATION_BATCH_SIZE`] numbered triples; the
/// model lists the line numbers whose answer is "no".
pub fn build_batch_validation_prompt(items: &[(&str, &str, &str)], template: ValidationTemplate) -> Result<String, DatagenError> {
    if items.is_empty() || items.len() > VALIDATION_BATCH_SIZE {
        return Err(DatagenError::Precondition(format!(
            "batch must hold 1..={VALIDATION_BATCH_SIZE} items, got {}",
            items.len()
        )));
    }
    let mut out = String::from(
        "Each numbered line below holds a Question, a Text and an Answer. For each line, decide whether the Answer answers the Question based on the Text. Reply with the line numbers whose answer is no, separated by commas, or none.\n",
    );
    for (i, (q, t, a)) in items.iter().enumerate() {
        let line = build_validation_prompt(q, t, a, template)?.replace('\n', " ");
        out.push_str(&format!("{}. {line}\n", i + 1));
    }
    Ok(out)
}

/// Zero-based indices a batch reply marks as "no".
pub fn parse_rejected_lines(reply: &str, batch_len: usize) -> BTreeSet<usize> {
    reply
        .split(|c: char| !c.is_ascii_digit())
        .filter_map(|n| n.parse::<usize>().ok())
        .filter(|n| (1..=batch_len).contains(n))
        .map(|n| n - 1)
        .collect()
}

/// A validator accepts when its reply contains "yes".
pub fn validator_accepts<S: AsRef<str>>(replies: &[S], policy: ValidationPolicy) -> bool {
    let yes = |r: &S| r.as_ref().to_lowercase().contains("yes");
    match policy {
        ValidationPolicy::RequireAll => !replies.is_empty() && replies.iter().all(yes),
        ValidationPolicy::RequireAny => replies.iter().any(yes),
    }
}
