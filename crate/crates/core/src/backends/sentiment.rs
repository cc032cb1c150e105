use std::collections::HashSet;
use std::sync::LazyLock;

use super::text::word_tokens;
use super::{SentimentScore, SentimentScorer};

static NEGATIVE: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    [
        "angry", "annoyed", "annoying", "awful", "bad", "broken", "confused", "confusing", "disappointed",
        "disappointing", "frustrated", "frustrating", "hate", "horrible", "ridiculous", "sad", "stupid",
        "terrible", "unacceptable", "unhappy", "upset", "useless", "waste", "worse", "worst", "wrong",
        "pointless", "mad", "furious", "sucks", "garbage", "nonsense", "stressful", "stressed", "fail",
        "failed", "failing", "never", "slow", "incompetent",
    ]
    .into_iter()
    .collect()
});

static POSITIVE: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    [
        "thank", "thanks", "great", "good", "awesome", "excellent", "helpful", "perfect", "nice", "love",
        "appreciate", "appreciated", "wonderful", "happy", "glad", "amazing", "fantastic", "fine", "cool",
        "pleased", "brilliant",
    ]
    .into_iter()
    .collect()
});

/// Signed-lexicon sentiment: `neg / (neg + pos + 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconSentiment;

impl LexiconSentiment {
    pub fn hits(text: &str) -> (usize, usize) {
        let mut neg = 0;
        let mut pos = 0;
        for t in word_tokens(text) {
            if NEGATIVE.contains(t.lower.as_str()) {
                neg += 1;
            } else if POSITIVE.contains(t.lower.as_str()) {
                pos += 1;
            }
        }
        (neg, pos)
    }
}

impl SentimentScorer for LexiconSentiment {
    fn score(&self, text: &str) -> SentimentScore {
        let (neg, pos) = Self::hits(text);
        let p = neg as f64 / (neg + pos + 1) as f64;
        SentimentScore {
            negative_prob: p.clamp(0.0, 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        let s = LexiconSentiment;
        // 0 negative, 2 positive hits -> 0 / 3.
        assert_eq!(s.score("thank you, great").negative_prob, 0.0);
        assert_eq!(s.score("").negative_prob, 0.0);
        // 3 negative, 0 positive -> 3 / 4.
        assert_eq!(LexiconSentiment::hits("this is terrible and useless and broken"), (3, 0));
        assert_eq!(s.score("this is terrible and useless and broken").negative_prob, 0.75);
        assert_eq!(s.score("bad").negative_prob, 0.5);
    }
}
