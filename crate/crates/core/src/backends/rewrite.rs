use serde::{Deserialize, Serialize};

use super::text::word_tokens;
use super::QuestionRewriter;

/// An acknowledgment used when any of `keywords` appears in the situation text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpathyTemplate {
    pub keywords: Vec<String>,
    pub acknowledgment: String,
}

impl EmpathyTemplate {
    fn new(keywords: &[&str], acknowledgment: &str) -> Self {
        Self {
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            acknowledgment: acknowledgment.to_string(),
        }
    }

    fn matches(&self, words: &[String]) -> bool {
        self.keywords.iter().any(|k| {
            let parts: Vec<&str> = k.split_whitespace().collect();
            words.windows(parts.len()).any(|w| w.iter().zip(&parts).all(|(a, b)| a == b))
        })
    }
}

/// Keyword-matched acknowledgment bank.
///
/// The output is `"<acknowledgment> <question>"`, where the question is
/// either kept verbatim or swapped for a known concise phrasing of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateRewriter {
    pub templates: Vec<EmpathyTemplate>,
    pub generic: String,
    /// Known concise phrasings: (question, rewrite).
    pub phrasings: Vec<(String, String)>,
}

impl Default for TemplateRewriter {
    fn default() -> Self {
        let templates = vec![
            EmpathyTemplate::new(&["bill", "bills", "invoice", "billing", "charged", "charge"], "Dealing with medical bills can be confusing."),
            EmpathyTemplate::new(
                &["medical", "emergency", "hospital", "injury", "injured", "doctor", "doctor's", "clinic", "surgery", "accident"],
                "I understand that medical emergencies can be stressful.",
            ),
            EmpathyTemplate::new(&["website", "404", "webpage", "site", "url", "browser"], "Website errors can be frustrating."),
            EmpathyTemplate::new(&["code", "compile", "compiler", "bug", "stack trace", "build"], "Coding errors can be challenging."),
            EmpathyTemplate::new(&["sick", "ill", "unwell", "flu", "fever"], "I'm sorry to hear you're not feeling well."),
            EmpathyTemplate::new(
                &["vacation", "holiday", "time off", "leave", "pto", "trip"],
                "Taking time to recharge is important.",
            ),
            EmpathyTemplate::new(
                &["harassment", "unfair", "discrimination", "conflict", "upset", "frustrated", "stressed"],
                "I'm sorry you're dealing with this.",
            ),
        ];
        let phrasings = [
            (
                "Can you please provide details about the incident?",
                "Please share the incident details so we can assist you.",
            ),
            (
                "Could you please provide me with the details of the bill?",
                "Please share the bill details, and we'll look into it.",
            ),
            (
                "Can you provide more context about when and where it occurs?",
                "Please tell me more, so I can assist you effectively.",
            ),
            (
                "Could you share the error message and a snippet of your code for better assistance?",
                "Please provide the error message and your code, and we'll figure it out together.",
            ),
        ]
        .iter()
        .map(|(q, r)| (q.to_string(), r.to_string()))
        .collect();
        Self {
            templates,
            generic: "Thanks for sharing that.".into(),
            phrasings,
        }
    }
}

fn sentence_count(text: &str) -> usize {
    let trimmed = text.trim().trim_end_matches(['.', '?', '!']);
    trimmed.matches(['.', '?', '!']).count() + 1
}

impl TemplateRewriter {
    pub fn acknowledgment(&self, situation: &str) -> &str {
        let words: Vec<String> = word_tokens(situation).into_iter().map(|t| t.lower).collect();
        self.templates
            .iter()
            .find(|t| t.matches(&words))
            .map_or(self.generic.as_str(), |t| t.acknowledgment.as_str())
    }
}

impl QuestionRewriter for TemplateRewriter {
    fn rewrite(&self, question: &str, situation: &str) -> String {
        let question = question.trim();
        if question.is_empty() || sentence_count(question) > 1 {
            return question.to_string();
        }
        let body = self
            .phrasings
            .iter()
            .find(|(q, _)| q.trim() == question)
            .map_or(question, |(_, r)| r.as_str());
        format!("{} {}", self.acknowledgment(situation), body)
    }
}
