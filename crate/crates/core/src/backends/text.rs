//! Tokenization shared by the baseline backends.

use std::collections::HashSet;
use std::sync::LazyLock;

/// A word token with byte offsets into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub lower: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on anything that is not alphanumeric, keeping in-word apostrophes
/// (`doctor's`, `don't`).
pub fn word_tokens(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, ch)) in bytes.iter().enumerate() {
        let in_word = ch.is_alphanumeric()
            || ((ch == '\'' || ch == '’')
                && start.is_some()
                && bytes.get(i + 1).is_some_and(|(_, n)| n.is_alphanumeric()));
        match (in_word, start) {
            (true, None) => start = Some(pos),
            (false, Some(s)) => {
                tokens.push(make_token(text, s, pos));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(make_token(text, s, text.len()));
    }
    tokens
}

fn make_token(text: &str, start: usize, end: usize) -> Token<'_> {
    let slice = &text[start..end];
    Token {
        text: slice,
        lower: slice.to_lowercase(),
        start,
        end,
    }
}

/// Lowercased comparison key: possessive `'s` dropped.
pub fn key(lower: &str) -> &str {
    lower
        .strip_suffix("'s")
        .or_else(|| lower.strip_suffix("’s"))
        .unwrap_or(lower)
}

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    [
        "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
        "be", "been", "being", "but", "by", "can", "could", "did", "do", "does", "doing", "for", "from",
        "get", "got", "had", "has", "have", "having", "he", "her", "here", "him", "his", "how", "i", "i'm",
        "if", "in", "into", "is", "it", "it's", "its", "just", "let", "like", "me", "mine", "more", "my",
        "myself", "need", "needs", "no", "not", "now", "of", "on", "or", "our", "out", "over", "please",
        "really", "she", "should", "so", "some", "than", "that", "the", "their", "them", "then", "there",
        "these", "they", "this", "those", "to", "too", "up", "us", "very", "want", "wants", "was", "we",
        "were", "what", "when", "where", "which", "who", "whom", "why", "will", "with", "would", "you",
        "your", "yours", "user", "user's", "requested", "request", "requesting", "provide", "provided",
        "type", "kind", "sort", "recipient", "ok", "okay", "hmm", "hm", "um", "uh", "yes", "yeah", "yep",
        "sure", "thanks", "thank", "know", "don't", "dont", "idk", "maybe", "well", "oh", "hi", "hello",
        "hey", "there", "go", "going", "tell", "think", "guess", "exactly", "one",
    ]
    .into_iter()
    .collect()
});

pub fn is_stopword(lower: &str) -> bool {
    STOPWORDS.contains(lower) || STOPWORDS.contains(key(lower))
}

/// Content-word keys of `text` (stopwords removed, possessives folded).
pub fn content_keys(text: &str) -> Vec<String> {
    word_tokens(text)
        .into_iter()
        .filter(|t| !is_stopword(&t.lower))
        .map(|t| key(&t.lower).to_string())
        .collect()
}

/// Lowercased word set used for similarity measures (no stopword removal).
pub fn word_set(text: &str) -> HashSet<String> {
    word_tokens(text).into_iter().map(|t| t.lower).collect()
}

/// Token-set Jaccard similarity; two empty sets count as identical.
pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_carry_offsets() {
        let text = "I'd like a doctor's appointment, at 2pm.";
        for t in word_tokens(text) {
            assert_eq!(&text[t.start..t.end], t.text);
        }
        let words: Vec<_> = word_tokens(text).into_iter().map(|t| t.text).collect();
        assert_eq!(words, ["I'd", "like", "a", "doctor's", "appointment", "at", "2pm"]);
    }

    #[test]
    fn content_keys_drop_fillers() {
        assert!(content_keys("hmm okay").is_empty());
        assert_eq!(content_keys("The doctor's appointment"), ["doctor", "appointment"]);
    }

    #[test]
    fn jaccard_bounds() {
        let a = word_set("what is the date");
        let b = word_set("what is the date");
        assert_eq!(jaccard(&a, &b), 1.0);
        assert_eq!(jaccard(&a, &word_set("nothing shared")), 0.0);
    }
}
