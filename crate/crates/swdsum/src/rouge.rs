//! Exact ROUGE-1/2/L scoring over token sequences.
//!
//! All functions are pure and generic over the token type, so they serve
//! both character-level corpora (token ids) and ad-hoc string comparisons.
//! Conventions: repeated n-grams are clipped to their reference count, and
//! an empty candidate or reference yields a 0 score rather than an error.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use crate::error::{Result, SwdError};

/// Precision, recall, and the β-weighted F-measure, all in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f: 0.0,
    };

    fn from_pr(precision: f64, recall: f64, beta: f64) -> RougeScore {
        RougeScore {
            precision,
            recall,
            f: f_measure(precision, recall, beta),
        }
    }

    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Precision => self.precision,
            Measure::Recall => self.recall,
            Measure::F => self.f,
        }
    }
}

/// `F = (1+β²)·P·R / (R + β²·P)`, 0 when the denominator vanishes.
/// Large β weights recall more heavily.
pub fn f_measure(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = recall + b2 * precision;
    if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    }
}

/// Multiplicity of every contiguous n-gram of `seq`; sequences shorter than
/// `n` yield an empty map.
pub fn ngram_counts<T: Eq + Hash + Clone>(seq: &[T], n: usize) -> Result<HashMap<Vec<T>, usize>> {
    if n < 1 {
        return Err(SwdError::Argument(format!("n-gram order must be >= 1, got {n}")));
    }
    let mut counts = HashMap::new();
    if seq.len() >= n {
        for window in seq.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// ROUGE-N with clipped n-gram counts.
pub fn rouge_n<T: Eq + Hash + Clone>(
    candidate: &[T],
    reference: &[T],
    n: usize,
    beta: f64,
) -> Result<RougeScore> {
    let cand = ngram_counts(candidate, n)?;
    let refs = ngram_counts(reference, n)?;
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    let matched: usize = cand
        .iter()
        .map(|(gram, c)| refs.get(gram).map_or(0, |r| (*c).min(*r)))
        .sum();
    let precision = ratio(matched, cand_total);
    let recall = ratio(matched, ref_total);
    Ok(RougeScore::from_pr(precision, recall, beta))
}

/// Longest common subsequence length via the classic O(|a|·|b|) dynamic
/// program, kept to two rows of state.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for av in a {
        for (j, bv) in b.iter().enumerate() {
            curr[j + 1] = if av == bv {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L: recall = LCS/|reference|, precision = LCS/|candidate|.
pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T], beta: f64) -> RougeScore {
    let lcs = lcs_length(candidate, reference);
    let precision = ratio(lcs, candidate.len());
    let recall = ratio(lcs, reference.len());
    RougeScore::from_pr(precision, recall, beta)
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Which ROUGE family member to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RougeKind {
    N(usize),
    L,
}

/// Which component of a [`RougeScore`] to read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Precision,
    Recall,
    F,
}

/// A fully specified scoring rule: family, reported measure, and β.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RougeVariant {
    pub kind: RougeKind,
    pub measure: Measure,
    pub beta: f64,
}

impl Default for RougeVariant {
    /// ROUGE-1 F1, the default salience signal for weight estimation.
    fn default() -> Self {
        RougeVariant {
            kind: RougeKind::N(1),
            measure: Measure::F,
            beta: 1.0,
        }
    }
}

impl RougeVariant {
    pub fn score<T: Eq + Hash + Clone>(&self, candidate: &[T], reference: &[T]) -> Result<RougeScore> {
        match self.kind {
            RougeKind::N(n) => rouge_n(candidate, reference, n, self.beta),
            RougeKind::L => Ok(rouge_l(candidate, reference, self.beta)),
        }
    }

    pub fn value<T: Eq + Hash + Clone>(&self, candidate: &[T], reference: &[T]) -> Result<f64> {
        Ok(self.score(candidate, reference)?.measure(self.measure))
    }
}

/// Parses `rouge-1`, `rouge-2`, `rouge-l`, optionally suffixed with a
/// measure: `rouge-1-f`, `rouge-l-p`, `rouge-2-r`. Bare `1`/`2`/`l` also
/// work. The measure defaults to F; β stays at 1 (set it separately).
impl FromStr for RougeVariant {
    type Err = SwdError;

    fn from_str(s: &str) -> Result<RougeVariant> {
        let norm = s.trim().to_ascii_lowercase();
        let rest = norm.strip_prefix("rouge-").unwrap_or(&norm);
        let (kind_str, measure_str) = match rest.split_once('-') {
            Some((k, m)) => (k, Some(m)),
            None => (rest, None),
        };
        let kind = match kind_str {
            "1" => RougeKind::N(1),
            "2" => RougeKind::N(2),
            "l" => RougeKind::L,
            other => {
                return Err(SwdError::Argument(format!(
                    "unknown ROUGE kind {other:?} (expected 1, 2, or l)"
                )))
            }
        };
        let measure = match measure_str {
            None | Some("f") => Measure::F,
            Some("p") => Measure::Precision,
            Some("r") => Measure::Recall,
            Some(other) => {
                return Err(SwdError::Argument(format!(
                    "unknown ROUGE measure {other:?} (expected p, r, or f)"
                )))
            }
        };
        Ok(RougeVariant {
            kind,
            measure,
            beta: 1.0,
        })
    }
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            RougeKind::N(n) => n.to_string(),
            RougeKind::L => "l".to_string(),
        };
        let measure = match self.measure {
            Measure::Precision => "p",
            Measure::Recall => "r",
            Measure::F => "f",
        };
        write!(f, "rouge-{kind}-{measure}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grams(pairs: &[(&str, usize)]) -> HashMap<Vec<char>, usize> {
        pairs
            .iter()
            .map(|(s, c)| (s.chars().collect(), *c))
            .collect()
    }

    #[test]
    fn unigram_counts() {
        let counts = ngram_counts(&['a', 'b', 'a'], 1).unwrap();
        assert_eq!(counts, grams(&[("a", 2), ("b", 1)]));
    }

    #[test]
    fn bigram_counts() {
        let counts = ngram_counts(&['a', 'b', 'a'], 2).unwrap();
        assert_eq!(counts, grams(&[("ab", 1), ("ba", 1)]));
    }

    #[test]
    fn too_short_for_order() {
        assert!(ngram_counts(&['a'], 2).unwrap().is_empty());
    }

    #[test]
    fn zero_order_rejected() {
        assert!(matches!(
            ngram_counts::<char>(&[], 0),
            Err(SwdError::Argument(_))
        ));
    }

    #[test]
    fn rouge_1_hand_counts() {
        let s = rouge_n(&['a', 'b', 'c'], &['a', 'b'], 1, 1.0).unwrap();
        assert_eq!(s.recall, 1.0);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rouge_2_hand_counts() {
        let s = rouge_n(&['a', 'b', 'c'], &['a', 'b'], 2, 1.0).unwrap();
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.precision, 0.5);
        assert!((s.f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_sequences_score_one() {
        for n in 1..=3 {
            let s = rouge_n(&['x', 'y', 'z'], &['x', 'y', 'z'], n, 1.0).unwrap();
            assert_eq!((s.precision, s.recall, s.f), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn repeated_ngrams_clip_to_reference_count() {
        let s = rouge_n(&['a', 'a', 'a'], &['a'], 1, 1.0).unwrap();
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.recall, 1.0);
    }

    #[test]
    fn empty_sides_score_zero() {
        let empty: [char; 0] = [];
        assert_eq!(rouge_n(&empty, &['a'], 1, 1.0).unwrap(), RougeScore::ZERO);
        assert_eq!(rouge_n(&['a'], &empty, 1, 1.0).unwrap(), RougeScore::ZERO);
        assert_eq!(rouge_l(&empty, &['a'], 1.0), RougeScore::ZERO);
    }

    #[test]
    fn lcs_textbook_pair() {
        let a: Vec<char> = "ABCBDAB".chars().collect();
        let b: Vec<char> = "BDCABA".chars().collect();
        assert_eq!(lcs_length(&a, &b), 4);
    }

    #[test]
    fn lcs_empty_and_self() {
        let x: Vec<char> = "hello".chars().collect();
        let empty: [char; 0] = [];
        assert_eq!(lcs_length(&empty, &x), 0);
        assert_eq!(lcs_length(&x, &x), x.len());
    }

    #[test]
    fn rouge_l_hand_counts() {
        let s = rouge_l(&['a', 'b', 'c'], &['a', 'c'], 1.0);
        assert_eq!(s.recall, 1.0);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_disjoint_and_identical() {
        assert_eq!(rouge_l(&['a', 'b'], &['c', 'd'], 1.0), RougeScore::ZERO);
        let s = rouge_l(&['a', 'b'], &['a', 'b'], 1.0);
        assert_eq!((s.precision, s.recall, s.f), (1.0, 1.0, 1.0));
    }

    #[test]
    fn large_beta_leans_toward_recall() {
        let s = rouge_l(&['a', 'b', 'c', 'd'], &['a', 'b'], 8.0);
        assert!((s.f - s.recall).abs() < 0.05);
        assert!(s.f <= s.recall.max(s.precision));
    }

    #[test]
    fn variant_parsing() {
        let v: RougeVariant = "rouge-1".parse().unwrap();
        assert_eq!(v.kind, RougeKind::N(1));
        assert_eq!(v.measure, Measure::F);
        let v: RougeVariant = "rouge-l-p".parse().unwrap();
        assert_eq!(v.kind, RougeKind::L);
        assert_eq!(v.measure, Measure::Precision);
        let v: RougeVariant = "2".parse().unwrap();
        assert_eq!(v.kind, RougeKind::N(2));
        assert!("rouge-3x".parse::<RougeVariant>().is_err());
        assert!("rouge-1-q".parse::<RougeVariant>().is_err());
    }

    #[test]
    fn exhaustive_small_lcs_matches_brute_force() {
        // All pairs of sequences up to length 4 over a 3-symbol alphabet.
        fn all_seqs(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
            let mut out = vec![vec![]];
            let mut frontier = vec![vec![]];
            for _ in 0..max_len {
                let mut next = Vec::new();
                for seq in &frontier {
                    for &c in alphabet {
                        let mut s = seq.clone();
                        s.push(c);
                        next.push(s);
                    }
                }
                out.extend(next.iter().cloned());
                frontier = next;
            }
            out
        }
        let seqs = all_seqs(&[0, 1, 2], 4);
        for a in &seqs {
            for b in &seqs {
                assert_eq!(
                    lcs_length(a, b),
                    brute_force_lcs(a, b),
                    "mismatch for {a:?} vs {b:?}"
                );
                assert_eq!(lcs_length(a, b), lcs_length(b, a));
            }
        }
    }

    /// Enumerates every subsequence of `a` and keeps the longest that is
    /// also a subsequence of `b`.
    pub(crate) fn brute_force_lcs(a: &[u8], b: &[u8]) -> usize {
        fn is_subsequence(needle: &[u8], haystack: &[u8]) -> bool {
            let mut it = haystack.iter();
            needle.iter().all(|n| it.any(|h| h == n))
        }
        let mut best = 0;
        for mask in 0u32..(1 << a.len()) {
            let sub: Vec<u8> = a
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            if sub.len() > best && is_subsequence(&sub, b) {
                best = sub.len();
            }
        }
        best
    }
}
