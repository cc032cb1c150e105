//! Answer-kind inference for slot questions and the span finders that go with it.
//!
//! The selector uses these as keyword cues ("a date phrase is present, so
//! date questions are answerable"); the extractor uses the same finders to
//! pull the span out.

use std::sync::LazyLock;

use regex::Regex;

use super::text::{content_keys, is_stopword, key, word_tokens, Token};
use crate::normalize::{MONTH_PATTERN, ORDINAL_SUFFIX};

/// What kind of answer a question is asking for, inferred from its wording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnswerKind {
    /// "Does the user provide ...?" style questions; never answerable with a span.
    YesNo,
    Date,
    Time,
    Money,
    Count,
    Purpose,
    /// "What type of X ...?"
    Type,
    Name,
    Location,
    Other,
}

const AUXILIARIES: &[&str] = &[
    "does", "do", "did", "is", "are", "was", "were", "can", "could", "will", "would", "has", "have", "had",
    "should", "shall", "may", "might",
];

pub fn answer_kind(question: &str) -> AnswerKind {
    let q = question.to_lowercase();
    let words: Vec<String> = word_tokens(&q).into_iter().map(|t| t.lower).collect();
    let first = words.first().map(String::as_str).unwrap_or("");
    let second = words.get(1).map(String::as_str).unwrap_or("");
    if AUXILIARIES.contains(&first) && second != "you" {
        return AnswerKind::YesNo;
    }
    let has = |w: &str| words.iter().any(|x| x == w);
    let phrase = |p: &str| q.contains(p);
    let time_word = words
        .iter()
        .enumerate()
        .any(|(i, w)| w == "time" && words.get(i + 1).is_none_or(|n| n != "off"));
    if phrase("what time") || phrase("which time") || phrase("at what time") || (time_word && !has("when")) {
        return AnswerKind::Time;
    }
    if phrase("how much") || ["amount", "cost", "price", "salary", "budget", "fee", "expense", "total"].iter().any(|w| has(w)) {
        return AnswerKind::Money;
    }
    if first == "when" || has("date") || has("dates") || phrase("what day") || phrase("which day") {
        return AnswerKind::Date;
    }
    if phrase("how many") {
        return AnswerKind::Count;
    }
    if phrase("type of") || phrase("kind of") || phrase("sort of") {
        return AnswerKind::Type;
    }
    if has("purpose") || has("reason") || first == "why" {
        return AnswerKind::Purpose;
    }
    if has("name") || first == "who" {
        return AnswerKind::Name;
    }
    if first == "where" || ["location", "address", "city", "zip", "office"].iter().any(|w| has(w)) {
        return AnswerKind::Location;
    }
    AnswerKind::Other
}

/// Does the question ask about the end of an interval ("When does the leave end?")?
pub fn asks_for_end(question: &str) -> bool {
    let keys = content_keys(question);
    keys.iter()
        .any(|k| matches!(k.as_str(), "end" | "ends" | "until" | "return" | "returning" | "finish" | "last"))
}

/// Byte range plus text of a span found in an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Found {
    pub start: usize,
    pub end: usize,
}

impl Found {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

const FULL_WEEKDAY: &str = r"monday|tuesday|tues|wednesday|thursday|thurs|friday|saturday|sunday";
const NUMBER_WORD: &str = r"\d+|a|an|one|two|three|four|five|six|seven|eight|nine|ten";

static DATE_SPANS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        format!(r"(?i)\b(?:(?:next|this|coming)\s+)?(?:{FULL_WEEKDAY})\b(?:\s*,?\s+the\s+\d{{1,2}}{ORDINAL_SUFFIX}\b)?"),
        r"(?i)\b(?:the\s+day\s+after\s+tomorrow|today|tomorrow|yesterday)\b".to_string(),
        format!(r"(?i)\bin\s+(?:{NUMBER_WORD})\s+(?:days?|weeks?)\b"),
        format!(r"(?i)\b(?:{MONTH_PATTERN})\.?\s+\d{{1,2}}{ORDINAL_SUFFIX}\b(?:\s*(?:-|–)\s*\d{{1,2}}{ORDINAL_SUFFIX}\b)?(?:,?\s+\d{{4}}\b)?"),
        format!(r"(?i)\b\d{{1,2}}{ORDINAL_SUFFIX}\s+(?:of\s+)?(?:{MONTH_PATTERN})\b(?:,?\s+\d{{4}}\b)?"),
        r"\b\d{4}-\d{2}-\d{2}\b".to_string(),
        r"\b\d{1,2}/\d{1,2}(?:/\d{2,4})?\b".to_string(),
        r"(?i)\b(?:next|this)\s+week\b".to_string(),
    ]
    .iter()
    .map(|p| Regex::new(p).expect("date span pattern"))
    .collect()
});

static TIME_SPANS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"(?i)\b\d{1,2}(?::\d{2})?\s*(?:a\.?m\b\.?|p\.?m\b\.?)",
        r"\b\d{1,2}:\d{2}\b",
        r"(?i)\b(?:noon|midnight|midday)\b",
        r"(?i)\b\d{1,2}\s*o'?clock\b",
    ]
    .iter()
    .map(|p| Regex::new(p).expect("time span pattern"))
    .collect()
});

static MONEY_SPANS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"\$\s*\d[\d,]*(?:\.\d{2})?",
        r"(?i)\b\d[\d,]*(?:\.\d{2})?\s*(?:dollars?|bucks)\b",
    ]
    .iter()
    .map(|p| Regex::new(p).expect("money span pattern"))
    .collect()
});

static COUNT_SPAN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\b").unwrap()
});

static NAME_INTRO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:(?i:my\s+name\s+is|my\s+name's|call\s+me)\s+|\b(?:I\s+am|I'm|this\s+is|This\s+is)\s+)(\p{Lu}[\p{L}'-]*(?:\s+\p{Lu}[\p{L}'-]*)*)").unwrap()
});

static ZIP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{5}(?:-\d{4})?\b").unwrap());
static PLACE_INTRO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?i:in|at|from|near)\s+(?:the\s+)?(\p{Lu}[\p{L}'-]*(?:\s+\p{Lu}[\p{L}'-]*)*)").unwrap()
});

fn collect(patterns: &[Regex], text: &str) -> Vec<Found> {
    let mut spans: Vec<Found> = Vec::new();
    for re in patterns {
        for m in re.find_iter(text) {
            let span = Found {
                start: m.start(),
                end: m.end(),
            };
            // Keep the widest span when patterns overlap.
            if let Some(existing) = spans.iter_mut().find(|s| s.start < span.end && span.start < s.end) {
                if span.end - span.start > existing.end - existing.start {
                    *existing = span;
                }
            } else {
                spans.push(span);
            }
        }
    }
    spans.sort_by_key(|s| s.start);
    spans
}

pub fn date_spans(text: &str) -> Vec<Found> {
    collect(&DATE_SPANS, text)
}

pub fn time_spans(text: &str) -> Vec<Found> {
    let dates = date_spans(text);
    collect(&TIME_SPANS, text)
        .into_iter()
        .filter(|t| !dates.iter().any(|d| d.start < t.end && t.start < d.end))
        .collect()
}

pub fn money_spans(text: &str) -> Vec<Found> {
    collect(&MONEY_SPANS, text)
}

pub fn count_spans(text: &str) -> Vec<Found> {
    let taken: Vec<Found> = [date_spans(text), time_spans(text), money_spans(text)].concat();
    COUNT_SPAN
        .find_iter(text)
        .map(|m| Found {
            start: m.start(),
            end: m.end(),
        })
        .filter(|c| !taken.iter().any(|d| d.start < c.end && c.start < d.end))
        .collect()
}

const PHRASE_BOUNDARY: &[&str] = &[
    "and", "but", "or", "for", "at", "on", "in", "with", "because", "so", "to", "next", "this", "by", "from",
    "since", "until", "tomorrow", "today", "yesterday", "which", "that", "who", "as", "please", "if",
    "when", "while", "after", "before",
];
const DETERMINERS: &[&str] = &["a", "an", "the", "my", "our", "his", "her", "their", "some", "your", "its"];
const PURPOSE_SKIP_BEFORE: &[&str] = &[
    "like", "want", "wants", "wanted", "need", "needs", "needed", "have", "has", "going", "plan", "planning",
    "hope", "hoping", "try", "trying", "able", "love", "wish", "used", "ought", "had",
];

/// Tokens with a flag telling whether punctuation separates each token from the previous one.
fn tokens_with_breaks(text: &str) -> Vec<(Token<'_>, bool)> {
    let tokens = word_tokens(text);
    let mut out = Vec::with_capacity(tokens.len());
    let mut prev_end = 0usize;
    for (i, t) in tokens.into_iter().enumerate() {
        let gap = &text[prev_end..t.start];
        let broken = i > 0 && gap.chars().any(|c| !c.is_whitespace() && c != '-');
        prev_end = t.end;
        out.push((t, broken));
    }
    out
}

/// Noun phrase starting at token `from`: skips determiners, stops at punctuation,
/// boundary words, or after `max` tokens.
fn phrase_from(text: &str, toks: &[(Token<'_>, bool)], from: usize, max: usize) -> Option<Found> {
    let mut i = from;
    while i < toks.len() && DETERMINERS.contains(&toks[i].0.lower.as_str()) {
        if i > from && toks[i].1 {
            return None;
        }
        i += 1;
    }
    let start_idx = i;
    let mut end_idx = i;
    while end_idx < toks.len() && end_idx - start_idx < max {
        let (tok, broken) = &toks[end_idx];
        if end_idx > start_idx && *broken {
            break;
        }
        if PHRASE_BOUNDARY.contains(&tok.lower.as_str()) || DETERMINERS.contains(&tok.lower.as_str()) {
            break;
        }
        end_idx += 1;
    }
    (end_idx > start_idx).then(|| Found {
        start: toks[start_idx].0.start,
        end: toks[end_idx - 1].0.end,
    })
    .filter(|f| !f.text(text).trim().is_empty())
}

/// Purpose clauses: "to <verb> [det] NP" (skipping "like to", "need to", ...),
/// "because (of) ...", and "for [det] NP" when NP is not a date.
pub fn purpose_spans(text: &str) -> Vec<Found> {
    let toks = tokens_with_breaks(text);
    let dates = date_spans(text);
    let mut found = Vec::new();
    for i in 0..toks.len() {
        let word = toks[i].0.lower.as_str();
        let prev = i.checked_sub(1).map(|p| toks[p].0.lower.as_str());
        match word {
            "to" if i + 2 <= toks.len() => {
                if prev.is_some_and(|p| PURPOSE_SKIP_BEFORE.contains(&p)) {
                    continue;
                }
                if toks.get(i + 1).is_some_and(|(t, b)| !*b && !is_stopword(&t.lower) || t.lower == "get") {
                    if let Some(span) = phrase_from(text, &toks, i + 2, 5) {
                        found.push(span);
                    }
                }
            }
            "because" => {
                let mut j = i + 1;
                if toks.get(j).is_some_and(|(t, _)| t.lower == "of") {
                    j += 1;
                }
                if let Some(span) = phrase_from(text, &toks, j, 6) {
                    found.push(span);
                }
            }
            "for" => {
                if let Some(span) = phrase_from(text, &toks, i + 1, 4) {
                    let overlaps_date = dates.iter().any(|d| d.start < span.end && span.start < d.end);
                    let all_stop = word_tokens(span.text(text)).iter().all(|t| is_stopword(&t.lower));
                    if !overlaps_date && !all_stop {
                        found.push(span);
                    }
                }
            }
            _ => {}
        }
    }
    found
}

/// Spans answering "what type of <head>": "as a NP", otherwise the modifiers in front of `head`.
pub fn type_spans(text: &str, question: &str) -> Vec<Found> {
    let toks = tokens_with_breaks(text);
    let mut found = Vec::new();
    for i in 0..toks.len() {
        if toks[i].0.lower == "as" && toks.get(i + 1).is_some_and(|(t, _)| t.lower == "a" || t.lower == "an") {
            if let Some(span) = phrase_from(text, &toks, i + 1, 4) {
                found.push(span);
            }
        }
    }
    if !found.is_empty() {
        return found;
    }
    let heads = type_heads(question);
    for (i, (tok, _)) in toks.iter().enumerate() {
        if heads.iter().any(|h| h == key(&tok.lower)) {
            let mut start = i;
            while start > 0 {
                let (prev, _) = &toks[start - 1];
                if is_stopword(&prev.lower) || toks[start].1 || heads.iter().any(|h| h == key(&prev.lower)) {
                    break;
                }
                start -= 1;
                if i - start >= 2 {
                    break;
                }
            }
            if start < i {
                found.push(Found {
                    start: toks[start].0.start,
                    end: tok.end,
                });
            }
        }
    }
    found
}

/// Content words following "type of" / "kind of" in a question.
pub fn type_heads(question: &str) -> Vec<String> {
    let toks = word_tokens(question);
    let mut heads = Vec::new();
    for i in 0..toks.len() {
        if matches!(toks[i].lower.as_str(), "type" | "kind" | "sort")
            && toks.get(i + 1).is_some_and(|t| t.lower == "of")
        {
            for t in toks.iter().skip(i + 2).take(3) {
                if AUXILIARIES.contains(&t.lower.as_str()) || t.lower == "being" {
                    break;
                }
                if !is_stopword(&t.lower) {
                    heads.push(key(&t.lower).to_string());
                }
            }
        }
    }
    heads
}

const NOT_NAMES: &[&str] = &[
    "I", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday", "January", "February",
    "March", "April", "May", "June", "July", "August", "September", "October", "November", "December", "HR",
];

/// Explicit self-introductions ("my name is X", "I'm X").
pub fn introduced_names(text: &str) -> Vec<Found> {
    NAME_INTRO
        .captures_iter(text)
        .filter_map(|c| c.get(1))
        .filter(|m| !NOT_NAMES.contains(&m.as_str().split_whitespace().next().unwrap_or("")))
        .map(|m| Found {
            start: m.start(),
            end: m.end(),
        })
        .collect()
}

/// Runs of capitalized words that are not calendar words.
pub fn capitalized_runs(text: &str) -> Vec<Found> {
    let toks = tokens_with_breaks(text);
    let mut runs = Vec::new();
    let mut current: Option<Found> = None;
    for (tok, broken) in &toks {
        let cap = tok.text.chars().next().is_some_and(char::is_uppercase) && !NOT_NAMES.contains(&tok.text);
        match (&mut current, cap) {
            (Some(run), true) if !broken => run.end = tok.end,
            (_, true) => {
                if let Some(run) = current.take() {
                    runs.push(run);
                }
                current = Some(Found {
                    start: tok.start,
                    end: tok.end,
                });
            }
            (_, false) => {
                if let Some(run) = current.take() {
                    runs.push(run);
                }
            }
        }
    }
    runs.extend(current);
    runs
}

pub fn location_spans(text: &str) -> Vec<Found> {
    let mut spans: Vec<Found> = ZIP
        .find_iter(text)
        .map(|m| Found {
            start: m.start(),
            end: m.end(),
        })
        .collect();
    spans.extend(
        PLACE_INTRO
            .captures_iter(text)
            .filter_map(|c| c.get(1))
            .filter(|m| !NOT_NAMES.contains(&m.as_str().split_whitespace().next().unwrap_or("")))
            .map(|m| Found {
                start: m.start(),
                end: m.end(),
            }),
    );
    spans.sort_by_key(|s| s.start);
    spans
}

/// Maximal runs of content words not separated by punctuation.
pub fn content_runs(text: &str) -> Vec<Found> {
    let toks = tokens_with_breaks(text);
    let mut runs = Vec::new();
    let mut current: Option<Found> = None;
    for (tok, broken) in &toks {
        let content = !is_stopword(&tok.lower);
        match (&mut current, content) {
            (Some(run), true) if !broken => run.end = tok.end,
            (_, true) => {
                if let Some(run) = current.take() {
                    runs.push(run);
                }
                current = Some(Found {
                    start: tok.start,
                    end: tok.end,
                });
            }
            (_, false) => {
                if let Some(run) = current.take() {
                    runs.push(run);
                }
            }
        }
    }
    runs.extend(current);
    runs
}
