//! Generates a needle-in-haystack corpus: every document hides one key
//! sentence that determines the summary among distractors. Confirms the
//! weight estimator points at the key sentence.

use swdsum::corpus::{build_vocab, encode_pair, CorpusConfig};
use swdsum::error::Result;
use swdsum::rouge::RougeVariant;
use swdsum::synth::{generate, KeyPosition, SummaryTransform, SynthSpec};
use swdsum::weights::estimate_weights;

fn main() -> Result<()> {
    let spec = SynthSpec {
        vocab_size: 60,
        pairs: 500,
        sentences_per_doc: 6,
        sentence_len: 8,
        key_position: KeyPosition::Uniform,
        summary_transform: SummaryTransform::Copy,
        noise_overlap: 0.2,
        seed: 17,
    };
    let corpus = generate(&spec)?;
    println!("sample document: {}", corpus.pairs[0].text);
    println!("sample summary:  {}", corpus.pairs[0].summary);
    println!("key sentence:    {}", corpus.key_indexes[0]);

    let config = CorpusConfig::default();
    let vocab = build_vocab(&corpus.pairs, &config)?;
    let variant = RougeVariant::default();
    let mut hits = 0;
    for (pair, &key) in corpus.pairs.iter().zip(&corpus.key_indexes) {
        let encoded = encode_pair(pair, &vocab, &config)?;
        if estimate_weights(&encoded, &variant)?.argmax() == key {
            hits += 1;
        }
    }
    println!(
        "estimated argmax finds the key sentence in {hits}/{} documents",
        corpus.pairs.len()
    );
    assert_eq!(hits, corpus.pairs.len());
    Ok(())
}
