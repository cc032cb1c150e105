use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{LabeledQuestion, Scenario};

static USER_RESPONSE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^user\s+response\s*:\s*(.*)$").unwrap());
static QUESTIONS_HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^list\s+of\s+questions\s*:?\s*$").unwrap());
static LETTERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\(?([A-Za-z])[.)]\s+(.+)$").unwrap());
static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\(?\d+[.)]\s*(.*)$").unwrap());
static OUTPUT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^output\s*([12])\s*:\s*(.*)$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    MissingUtterance,
    MissingQuestions,
    MissingOutput1,
    MissingOutput2,
    BadLabel,
    /// The output ignores the requested format (numbered lists, list-valued outputs).
    InstructionViolation,
    NoScenarios,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    /// Zero-based block index (blocks start at "User Response:").
    pub block: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutput {
    pub scenarios: Vec<Scenario>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Inverse of [`parse_scenarios`] for one block.
pub fn format_scenario(s: &Scenario) -> String {
    let mut out = format!("User Response: {}\nList of Questions:\n", s.utterance);
    for q in &s.questions {
        out.push_str(&format!("{}. {}\n", q.label, q.text));
    }
    let labels: Vec<String> = s.output1.iter().map(char::to_string).collect();
    out.push_str(&format!("Output1: {}\nOutput2: {}\n", labels.join(", "), s.output2.join(", ")));
    out
}

fn clean_line(line: &str) -> String {
    line.replace("**", "").replace("__", "").trim().trim_start_matches('#').trim().to_string()
}

fn unquote(s: &str) -> String {
    let t = s.trim();
    let t = t
        .strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .or_else(|| t.strip_prefix('“').and_then(|x| x.strip_suffix('”')))
        .unwrap_or(t);
    t.trim().to_string()
}

/// Splits generated text into scenarios. Bad blocks are reported and skipped.
pub fn parse_scenarios(model_output: &str) -> ParseOutput {
    let lines: Vec<String> = model_output.lines().map(clean_line).collect();
    let starts: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| USER_RESPONSE.is_match(l))
        .map(|(i, _)| i)
        .collect();
    let mut out = ParseOutput::default();
    for (block, &start) in starts.iter().enumerate() {
        let end = starts.get(block + 1).copied().unwrap_or(lines.len());
        match parse_block(&lines[start..end]) {
            Ok(s) => out.scenarios.push(s),
            Err((kind, message)) => out.diagnostics.push(ParseDiagnostic { block, kind, message }),
        }
    }
    if out.scenarios.is_empty() {
        out.diagnostics.push(ParseDiagnostic {
            block: starts.len(),
            kind: DiagnosticKind::NoScenarios,
            message: "no scenario could be parsed".into(),
        });
    }
    out
}

type BlockError = (DiagnosticKind, String);

fn parse_block(lines: &[String]) -> Result<Scenario, BlockError> {
    let first = USER_RESPONSE.captures(&lines[0]).expect("block starts at a user response");
    let mut idx = 1;
    let mut utterance = unquote(&first[1]);
    if utterance.is_empty() {
        while idx < lines.len() && lines[idx].is_empty() {
            idx += 1;
        }
        if idx < lines.len() && !QUESTIONS_HEADER.is_match(&lines[idx]) && !OUTPUT.is_match(&lines[idx]) {
            utterance = unquote(&lines[idx]);
            idx += 1;
        }
    }
    if utterance.is_empty() {
        return Err((DiagnosticKind::MissingUtterance, "empty user response".into()));
    }

    let mut questions = Vec::new();
    let mut numbered = 0;
    let mut output1: Option<String> = None;
    let mut output2: Option<String> = None;
    let mut list_valued_output = false;
    let mut current_output: Option<u8> = None;
    for line in &lines[idx..] {
        if line.is_empty() || QUESTIONS_HEADER.is_match(line) {
            continue;
        }
        if let Some(c) = OUTPUT.captures(line) {
            let which = if &c[1] == "1" { 1 } else { 2 };
            let value = c[2].trim().to_string();
            current_output = value.is_empty().then_some(which);
            if which == 1 { output1 = Some(value) } else { output2 = Some(value) }
            continue;
        }
        if current_output.is_some() && (LETTERED.is_match(line) || NUMBERED.is_match(line)) {
            list_valued_output = true;
            continue;
        }
        if output1.is_some() || output2.is_some() {
            continue;
        }
        if let Some(c) = LETTERED.captures(line) {
            let label = c[1].chars().next().unwrap().to_ascii_lowercase();
            questions.push(LabeledQuestion {
                label,
                text: c[2].trim().to_string(),
            });
        } else if NUMBERED.is_match(line) {
            numbered += 1;
        }
    }

    if list_valued_output || (questions.is_empty() && numbered > 0) {
        return Err((
            DiagnosticKind::InstructionViolation,
            "outputs or questions are given as numbered lists instead of the requested format".into(),
        ));
    }
    if questions.is_empty() {
        return Err((DiagnosticKind::MissingQuestions, "no lettered questions".into()));
    }
    for (q, expected) in questions.iter().zip('a'..='z') {
        if q.label != expected {
            return Err((
                DiagnosticKind::BadLabel,
                format!("question label `{}` out of sequence (expected `{expected}`)", q.label),
            ));
        }
    }
    let output1 = output1.filter(|s| !s.is_empty()).ok_or((DiagnosticKind::MissingOutput1, "missing Output1".to_string()))?;
    let output2 = output2.filter(|s| !s.is_empty()).ok_or((DiagnosticKind::MissingOutput2, "missing Output2".to_string()))?;

    let mut labels = Vec::new();
    for piece in output1.split(|c: char| c == ',' || c == ';' || c.is_whitespace()) {
        let piece = piece.trim_matches(|c: char| !c.is_alphanumeric());
        if piece.is_empty() || piece.eq_ignore_ascii_case("and") {
            continue;
        }
        let mut chars = piece.chars();
        match (chars.next(), chars.next()) {
            (Some(ch), None) if ch.is_ascii_alphabetic() => labels.push(ch.to_ascii_lowercase()),
            _ => return Err((DiagnosticKind::BadLabel, format!("`{piece}` is not a choice label"))),
        }
    }
    let answers: Vec<String> = output2
        .split(',')
        .map(|a| unquote(a.trim().trim_end_matches('.')))
        .filter(|a| !a.is_empty())
        .collect();
    Ok(Scenario {
        utterance,
        questions,
        output1: labels,
        output2: answers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const APPOINTMENT: &str = "User Response: I would like to schedule a doctor's appointment for next Tuesday at 2pm to get a physical exam.

List of Questions:
a. What type of appointment does the user want to schedule?
b. When does the user want to schedule the appointment?
c. What time does the user want the appointment?
d. What is the purpose of the appointment?
e. What action does the user want the recipient to take?
f. On what date is the user requesting the appointment?
g. Does the user provide the date for the requested appointment?
h. Does the user provide the time for the requested appointment?
Output1: a, b, c, d
Output2: schedule, next Tuesday, 2pm, physical exam";

    #[test]
    fn appointment_block() {
        let out = parse_scenarios(APPOINTMENT);
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        let s = &out.scenarios[0];
        assert_eq!(s.questions.len(), 8);
        assert_eq!(s.output1, vec!['a', 'b', 'c', 'd']);
        assert_eq!(s.output2, vec!["schedule", "next Tuesday", "2pm", "physical exam"]);
    }

    #[test]
    fn label_variants_and_markup() {
        let text = "Here you go:\n\n**User Response:** \"Book me on the Friday safety training.\"\n**List of Questions:**\na) Which training?\nb) When is the training?\n**Output1:** a, b\n**Output2:** safety training, Friday\n\n\nUser Response: hi\nList of Questions:\na. What?\nOutput1: a";
        let out = parse_scenarios(text);
        assert_eq!(out.scenarios.len(), 1);
        assert_eq!(out.scenarios[0].utterance, "Book me on the Friday safety training.");
        assert_eq!(out.scenarios[0].output2, vec!["safety training", "Friday"]);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].kind, DiagnosticKind::MissingOutput2);
        assert_eq!(out.diagnostics[0].block, 1);
    }

    #[test]
    fn numbered_output_is_an_instruction_violation() {
        let text = "User Response: \"I would like to inquire about my employee benefits.\"\nList of Questions:\n1. What type of benefits would you like to inquire about?\n2. Are you currently employed by the company?\nOutput 1:\na) health insurance\nb) retirement plans\nOutput 2:\n1. health insurance\n2. yes";
        let out = parse_scenarios(text);
        assert!(out.scenarios.is_empty());
        assert_eq!(out.diagnostics[0].kind, DiagnosticKind::InstructionViolation);
        assert_eq!(out.diagnostics[1].kind, DiagnosticKind::NoScenarios);
    }

    #[test]
    fn format_then_parse_is_lossless() {
        let s = parse_scenarios(APPOINTMENT).scenarios.remove(0);
        let again = parse_scenarios(&format_scenario(&s)).scenarios.remove(0);
        assert_eq!(s, again);
    }
}
