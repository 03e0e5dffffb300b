//! Estimates gold sentence weights for a small document: each sentence
//! is scored against the summary with ROUGE, and the scores are
//! softmax-normalized into a distribution.

use swdsum::corpus::{build_vocab, encode_pair, CorpusConfig, RawPair};
use swdsum::error::Result;
use swdsum::rouge::RougeVariant;
use swdsum::weights::{estimate_weights, sentence_scores};

fn main() -> Result<()> {
    let pair = RawPair {
        text: "今天股市大涨。小明吃了午饭。股市涨幅创新高。".into(),
        summary: "股市大涨".into(),
    };
    let config = CorpusConfig::default();
    let vocab = build_vocab(std::slice::from_ref(&pair), &config)?;
    let encoded = encode_pair(&pair, &vocab, &config)?;

    let variant = RougeVariant::default();
    let scores = sentence_scores(&encoded.doc, &encoded.summary, &variant)?;
    let weights = estimate_weights(&encoded, &variant)?;

    println!("summary: {}", pair.summary);
    for (i, (score, weight)) in scores.iter().zip(weights.as_slice()).enumerate() {
        println!("sentence {i}: rouge={score:.3} weight={weight:.3}");
    }
    println!("argmax sentence: {}", weights.argmax());
    assert_eq!(weights.argmax(), 0);
    Ok(())
}
