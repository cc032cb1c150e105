use std::collections::HashSet;
use std::time::Instant;

use super::cues::{self, AnswerKind, Found};
use super::text::{content_keys, key, word_tokens};
use super::{BackendError, EntityExtractor, ExtractionRequest, ExtractionResult, Span};

/// Pattern-and-alignment extractor.
///
/// Typed questions (date, time, money) take the matching pattern span and
/// never fall back to free text. Other questions use kind-specific phrase
/// finders, then the content-word run that best aligns with the question.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineExtractor;

impl BaselineExtractor {
    pub fn extract_span(&self, question: &str, utterance: &str) -> Option<Span> {
        let found = self.find(question, utterance)?;
        let text = found.text(utterance).trim_end_matches(['.', ',', ';', '!', '?']);
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        let start = found.start + found.text(utterance).find(text)?;
        Some(Span {
            text: text.to_string(),
            start,
            end: start + text.len(),
        })
    }

    fn find(&self, question: &str, utterance: &str) -> Option<Found> {
        let pick = |spans: Vec<Found>| -> Option<Found> {
            if cues::asks_for_end(question) {
                spans.last().copied()
            } else {
                spans.first().copied()
            }
        };
        match cues::answer_kind(question) {
            AnswerKind::YesNo => None,
            AnswerKind::Date => pick(cues::date_spans(utterance)).or_else(|| {
                question
                    .trim_start()
                    .to_lowercase()
                    .starts_with("when")
                    .then(|| pick(cues::time_spans(utterance)))
                    .flatten()
            }),
            AnswerKind::Time => pick(cues::time_spans(utterance)),
            AnswerKind::Money => pick(cues::money_spans(utterance)),
            AnswerKind::Count => cues::count_spans(utterance).first().copied(),
            AnswerKind::Purpose => cues::purpose_spans(utterance)
                .last()
                .copied()
                .or_else(|| aligned_run(question, utterance)),
            AnswerKind::Type => cues::type_spans(utterance, question)
                .first()
                .copied()
                .or_else(|| aligned_run(question, utterance)),
            AnswerKind::Name => cues::introduced_names(utterance)
                .first()
                .copied()
                .or_else(|| longest(cues::capitalized_runs(utterance), utterance))
                .or_else(|| aligned_run(question, utterance)),
            AnswerKind::Location => cues::location_spans(utterance)
                .first()
                .copied()
                .or_else(|| aligned_run(question, utterance)),
            AnswerKind::Other => aligned_run(question, utterance),
        }
    }
}

fn longest(spans: Vec<Found>, _src: &str) -> Option<Found> {
    spans
        .into_iter()
        .fold(None, |best: Option<Found>, s| match best {
            Some(b) if b.end - b.start >= s.end - s.start => Some(b),
            _ => Some(s),
        })
}

/// Content-word run of the utterance that best lines up with the question:
/// runs next to a question keyword win, then longer runs, then earlier ones.
/// Question keywords at the edges of a run are trimmed off.
fn aligned_run(question: &str, utterance: &str) -> Option<Found> {
    let q_keys: HashSet<String> = content_keys(question).into_iter().collect();
    let tokens = word_tokens(utterance);
    let keyword_positions: Vec<usize> = tokens
        .iter()
        .filter(|t| q_keys.contains(key(&t.lower)))
        .map(|t| t.start)
        .collect();

    let mut best: Option<(usize, usize, Found)> = None;
    for run in cues::content_runs(utterance) {
        let inner: Vec<_> = tokens
            .iter()
            .filter(|t| t.start >= run.start && t.end <= run.end)
            .collect();
        let first = inner.iter().position(|t| !q_keys.contains(key(&t.lower)));
        let last = inner.iter().rposition(|t| !q_keys.contains(key(&t.lower)));
        let (Some(first), Some(last)) = (first, last) else {
            continue;
        };
        let trimmed = Found {
            start: inner[first].start,
            end: inner[last].end,
        };
        let near = keyword_positions
            .iter()
            .filter(|&&p| p + 40 >= run.start && p <= run.end + 40)
            .count();
        let len = last - first + 1;
        let better = match &best {
            None => true,
            Some((n, l, _)) => near > *n || (near == *n && len > *l),
        };
        if better {
            best = Some((near, len, trimmed));
        }
    }
    best.map(|(_, _, f)| f)
}

impl EntityExtractor for BaselineExtractor {
    fn extract(&self, req: &ExtractionRequest) -> Result<ExtractionResult, BackendError> {
        let started = Instant::now();
        let span = self.extract_span(&req.question, &req.utterance);
        Ok(ExtractionResult {
            span,
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}
