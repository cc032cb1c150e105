use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Prf;
use crate::scalar::{f1, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScores<T> {
    pub rouge1: Prf<T>,
    pub rouge_l: Prf<T>,
}

impl<T: Scalar> RougeScores<T> {
    fn constant(v: T) -> Self {
        let p = Prf {
            precision: v,
            recall: v,
            f1: v,
        };
        Self { rouge1: p, rouge_l: p }
    }
}

/// Lowercase, split on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn lcs_len<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn prf_from<T: Scalar>(overlap: usize, cand: usize, reference: usize) -> Prf<T> {
    let precision = T::ratio(overlap, cand);
    let recall = T::ratio(overlap, reference);
    Prf {
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

/// Rouge-1 (clipped unigram overlap) and Rouge-L (LCS) on token sequences.
pub fn rouge_tokens<T: Scalar, S: AsRef<str>>(candidate: &[S], reference: &[S]) -> RougeScores<T> {
    match (candidate.is_empty(), reference.is_empty()) {
        (true, true) => return RougeScores::constant(T::one()),
        (true, false) | (false, true) => return RougeScores::constant(T::zero()),
        _ => {}
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for t in reference {
        *ref_counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut overlap = 0;
    for t in candidate {
        if let Some(n) = ref_counts.get_mut(t.as_ref()) {
            if *n > 0 {
                *n -= 1;
                overlap += 1;
            }
        }
    }
    let c: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let l = lcs_len(&c, &r);
    RougeScores {
        rouge1: prf_from(overlap, c.len(), r.len()),
        rouge_l: prf_from(l, c.len(), r.len()),
    }
}

pub fn rouge<T: Scalar>(candidate: &str, reference: &str) -> RougeScores<T> {
    rouge_tokens(&tokenize(candidate), &tokenize(reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn examples() {
        assert_eq!(rouge::<f64>("next monday", "next monday").rouge_l.f1, 1.0);
        let s = rouge::<Ratio<i64>>("next monday", "monday");
        assert_eq!(s.rouge_l.precision, Ratio::new(1, 2));
        assert_eq!(s.rouge_l.recall, Ratio::from_integer(1));
        assert_eq!(s.rouge_l.f1, Ratio::new(2, 3));
        assert_eq!(rouge::<f64>("vacation", "next monday").rouge_l.f1, 0.0);
        assert_eq!(rouge::<f64>("", "").rouge1.f1, 1.0);
        assert_eq!(rouge::<f64>("", "x").rouge1.f1, 0.0);
    }

    #[test]
    fn clipping_and_order() {
        // "the the the" vs "the cat": one clipped unigram match.
        let s = rouge::<Ratio<i64>>("the the the", "the cat");
        assert_eq!(s.rouge1.precision, Ratio::new(1, 3));
        // LCS respects order, unigram overlap does not.
        let s = rouge::<Ratio<i64>>("b a", "a b");
        assert_eq!(s.rouge1.f1, Ratio::from_integer(1));
        assert_eq!(s.rouge_l.f1, Ratio::new(1, 2));
        assert_eq!(tokenize("Next-Monday, 2pm!"), ["next", "monday", "2pm"]);
    }
}
