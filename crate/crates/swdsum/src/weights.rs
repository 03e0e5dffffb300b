//! Gold sentence-weight estimation: score each sentence by ROUGE against
//! the reference summary, then softmax the scores into a distribution.
//!
//! Because ROUGE scores live in [0, 1], the resulting distributions are
//! mild: max(w)/min(w) never exceeds e. The training loss pulls the
//! model's predicted distribution toward these targets.

use std::fs;
use std::path::Path;

use crate::corpus::{Document, EncodedPair};
use crate::error::{Result, SwdError};
use crate::rouge::RougeVariant;

/// A strictly positive probability vector over a document's sentences.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDistribution {
    weights: Vec<f64>,
}

impl WeightDistribution {
    /// Validates positivity, finiteness, and sum 1 within 1e-9.
    pub fn new(weights: Vec<f64>) -> Result<WeightDistribution> {
        if weights.is_empty() {
            return Err(SwdError::Degenerate("weight distribution over zero sentences".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(SwdError::Degenerate(format!(
                "weight {bad} is not strictly positive and finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SwdError::Degenerate(format!(
                "weights sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(WeightDistribution { weights })
    }

    pub fn uniform(n: usize) -> WeightDistribution {
        assert!(n > 0, "uniform distribution over zero sentences");
        WeightDistribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated nonempty at construction
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the largest weight; ties break toward the lower index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// Raw salience scores: `e_i = ROUGE(sentence_i, summary)` under `variant`.
pub fn sentence_scores(doc: &Document, summary: &[u32], variant: &RougeVariant) -> Result<Vec<f64>> {
    doc.sentences()
        .iter()
        .map(|sentence| variant.value(sentence, summary))
        .collect()
}

/// Softmax with max-subtraction; uniform when all scores are equal.
pub fn normalize_weights(scores: &[f64]) -> Result<WeightDistribution> {
    if scores.is_empty() {
        return Err(SwdError::Degenerate("cannot normalize zero scores".into()));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|e| (e - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    WeightDistribution::new(exps.iter().map(|e| e / denom).collect())
}

/// KL divergence from a reference distribution to predicted weights
/// (which must be strictly positive, as any softmax output is).
pub fn kl_divergence(reference: &WeightDistribution, predicted: &[f64]) -> Result<f64> {
    if reference.len() != predicted.len() {
        return Err(SwdError::Dimension(format!(
            "distributions have {} and {} entries",
            reference.len(),
            predicted.len()
        )));
    }
    if predicted.iter().any(|q| !q.is_finite() || *q <= 0.0) {
        return Err(SwdError::Domain(
            "predicted weights must be strictly positive and finite".into(),
        ));
    }
    Ok(reference
        .as_slice()
        .iter()
        .zip(predicted)
        .map(|(p, q)| p * (p / q).ln())
        .sum())
}

/// Estimated weight distribution for one encoded pair.
pub fn estimate_weights(pair: &EncodedPair, variant: &RougeVariant) -> Result<WeightDistribution> {
    let scores = sentence_scores(&pair.doc, &pair.summary, variant)?;
    normalize_weights(&scores)
}

/// Estimated weights for a whole corpus, in corpus order.
pub fn estimate_corpus_weights(
    pairs: &[EncodedPair],
    variant: &RougeVariant,
) -> Result<Vec<WeightDistribution>> {
    pairs.iter().map(|p| estimate_weights(p, variant)).collect()
}

/// Writes the weight sidecar: one JSON array of floats per line, parallel
/// to the corpus file.
pub fn write_weights(path: &Path, weights: &[WeightDistribution]) -> Result<()> {
    let mut out = String::new();
    for w in weights {
        out.push_str(&serde_json::to_string(w.as_slice()).expect("serialize float array"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<Vec<WeightDistribution>> {
    let content = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = serde_json::from_str(line).map_err(|e| {
            SwdError::Format(format!("{}:{}: invalid weight line: {e}", path.display(), i + 1))
        })?;
        let dist = WeightDistribution::new(values).map_err(|e| {
            SwdError::Format(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(dist);
    }
    Ok(out)
}
