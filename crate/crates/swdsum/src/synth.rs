//! Deterministic needle-in-a-haystack corpus generation.
//!
//! Each document contains exactly one key sentence whose tokens produce
//! the summary; the other sentences are distractors drawn from a disjoint
//! alphabet, optionally sharing a bounded fraction of summary tokens.
//! Token-distinct sampling makes the ROUGE arithmetic exact: with body
//! length L and j shared tokens, a distractor's ROUGE-1 F1 is strictly
//! below the key sentence's, so the estimated weight argmax always marks
//! the key sentence.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusConfig, RawPair};
use crate::error::{Result, SwdError};

/// Where the key sentence sits inside each document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyPosition {
    /// Uniformly random position per pair.
    Uniform,
    /// The same zero-based position in every pair.
    Fixed(usize),
}

/// How the summary is derived from the key sentence body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryTransform {
    /// Summary = the whole key sentence body (without its delimiter).
    Copy,
    /// Summary = the first k tokens of the key sentence body.
    Prefix(usize),
}

/// Generation parameters; serializable so specs can live in files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Distinct characters available, split evenly into key and noise
    /// alphabets.
    pub vocab_size: usize,
    pub pairs: usize,
    pub sentences_per_doc: usize,
    /// Tokens per sentence body, excluding the appended delimiter.
    pub sentence_len: usize,
    pub key_position: KeyPosition,
    pub summary_transform: SummaryTransform,
    /// Fraction of each distractor's tokens allowed to also appear in the
    /// summary; must stay below 1 so the key sentence dominates.
    pub noise_overlap: f64,
    pub seed: u64,
}

/// Generated pairs plus the ground-truth key sentence index per pair.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub pairs: Vec<RawPair>,
    pub key_indexes: Vec<usize>,
}

const DELIMITER: char = '。';

/// Deterministic alphabet: ASCII letters and digits first, then CJK
/// ideographs. None of these collide with the sentence delimiters.
fn alphabet(size: usize) -> Vec<char> {
    let mut chars: Vec<char> = ('a'..='z').chain('A'..='Z').chain('0'..='9').collect();
    let mut cjk = 0x4E00u32;
    while chars.len() < size {
        chars.push(char::from_u32(cjk).expect("CJK codepoint"));
        cjk += 1;
    }
    chars.truncate(size);
    chars
}

fn validate(spec: &SynthSpec) -> Result<(usize, usize)> {
    let limits = CorpusConfig::default();
    if spec.pairs < 1 {
        return Err(SwdError::Generation("pairs must be >= 1".into()));
    }
    if spec.sentences_per_doc < 1 || spec.sentences_per_doc > limits.max_sentences {
        return Err(SwdError::Generation(format!(
            "sentences_per_doc must be in 1..={}, got {}",
            limits.max_sentences, spec.sentences_per_doc
        )));
    }
    // + 1 for the appended delimiter, so encoding never truncates.
    if spec.sentence_len < 1 || spec.sentence_len + 1 > limits.max_sentence_len {
        return Err(SwdError::Generation(format!(
            "sentence_len must be in 1..={}, got {}",
            limits.max_sentence_len - 1,
            spec.sentence_len
        )));
    }
    if !(0.0..1.0).contains(&spec.noise_overlap) {
        return Err(SwdError::Generation(format!(
            "noise_overlap must be in [0, 1), got {}",
            spec.noise_overlap
        )));
    }
    let key_size = spec.vocab_size / 2;
    let noise_size = spec.vocab_size - key_size;
    if key_size < spec.sentence_len || noise_size < spec.sentence_len {
        return Err(SwdError::Generation(format!(
            "vocab_size {} cannot supply {} distinct key and noise tokens per sentence; \
             need at least {}",
            spec.vocab_size,
            spec.sentence_len,
            2 * spec.sentence_len
        )));
    }
    if let KeyPosition::Fixed(p) = spec.key_position {
        if p >= spec.sentences_per_doc {
            return Err(SwdError::Generation(format!(
                "fixed key position {p} out of range for {} sentences",
                spec.sentences_per_doc
            )));
        }
    }
    if let SummaryTransform::Prefix(k) = spec.summary_transform {
        if k < 1 || k > spec.sentence_len {
            return Err(SwdError::Generation(format!(
                "prefix length {k} must be in 1..={}",
                spec.sentence_len
            )));
        }
    }
    Ok((key_size, noise_size))
}

/// Generates the corpus described by `spec`, deterministically by seed.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    let (key_size, noise_size) = validate(spec)?;
    let chars = alphabet(spec.vocab_size);
    let key_alphabet = &chars[..key_size];
    let noise_alphabet = &chars[key_size..];

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::with_capacity(spec.pairs);
    let mut key_indexes = Vec::with_capacity(spec.pairs);

    for _ in 0..spec.pairs {
        let key_index = match spec.key_position {
            KeyPosition::Uniform => rng.random_range(0..spec.sentences_per_doc),
            KeyPosition::Fixed(p) => p,
        };
        let key_body: Vec<char> = sample(&mut rng, key_size, spec.sentence_len)
            .iter()
            .map(|i| key_alphabet[i])
            .collect();
        let summary: Vec<char> = match spec.summary_transform {
            SummaryTransform::Copy => key_body.clone(),
            SummaryTransform::Prefix(k) => key_body[..k].to_vec(),
        };
        // Shared tokens per distractor: the overlap budget, capped so a
        // distractor can never tie the key sentence's ROUGE score.
        let shared = ((spec.noise_overlap * spec.sentence_len as f64).floor() as usize)
            .min(summary.len() - 1);

        let mut text = String::new();
        for j in 0..spec.sentences_per_doc {
            let body: Vec<char> = if j == key_index {
                key_body.clone()
            } else {
                let mut body: Vec<char> = sample(&mut rng, noise_size, spec.sentence_len)
                    .iter()
                    .map(|i| noise_alphabet[i])
                    .collect();
                if shared > 0 {
                    let positions = sample(&mut rng, spec.sentence_len, shared);
                    let donors = sample(&mut rng, summary.len(), shared);
                    for (pos, donor) in positions.iter().zip(donors.iter()) {
                        body[pos] = summary[donor];
                    }
                }
                body
            };
            text.extend(body);
            text.push(DELIMITER);
        }
        pairs.push(RawPair {
            text,
            summary: summary.into_iter().collect(),
        });
        key_indexes.push(key_index);
    }
    Ok(SynthCorpus { pairs, key_indexes })
}

pub fn read_spec(path: &Path) -> Result<SynthSpec> {
    let content = fs::read_to_string(path)?;
    serde_json::from_str(&content)
        .map_err(|e| SwdError::Format(format!("{}: invalid spec: {e}", path.display())))
}

/// Writes `corpus.jsonl` (standard corpus format) and `keys.txt` (one
/// ground-truth key index per line) into `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut jsonl = String::new();
    for pair in &corpus.pairs {
        let line = serde_json::json!({ "text": pair.text, "summary": pair.summary });
        jsonl.push_str(&line.to_string());
        jsonl.push('\n');
    }
    fs::write(dir.join("corpus.jsonl"), jsonl)?;
    let keys: String = corpus
        .key_indexes
        .iter()
        .map(|k| format!("{k}\n"))
        .collect();
    fs::write(dir.join("keys.txt"), keys)?;
    Ok(())
}

pub fn read_key_indexes(path: &Path) -> Result<Vec<usize>> {
    let content = fs::read_to_string(path)?;
    content
        .lines()
        .enumerate()
        .map(|(i, line)| {
            line.trim().parse::<usize>().map_err(|e| {
                SwdError::Format(format!("{}:{}: invalid key index: {e}", path.display(), i + 1))
            })
        })
        .collect()
}
