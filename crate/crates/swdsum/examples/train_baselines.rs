//! Trains the three reference systems on one needle corpus and prints a
//! comparative ROUGE report on held-out pairs: an encoder-decoder without
//! attention, the same with attention, and the attention model with active
//! sentence weighting.
//!
//! Expect several minutes of wall time; each system trains for 60 epochs
//! on 2000 documents.

use swdsum::corpus::{build_vocab, encode_pair, CorpusConfig, TrainItem};
use swdsum::error::Result;
use swdsum::model::{Model, ModelConfig, SwdMode};
use swdsum::rouge::RougeVariant;
use swdsum::synth::{generate, KeyPosition, SummaryTransform, SynthSpec};
use swdsum::trainer::{evaluate, render_report, train, TrainConfig};
use swdsum::weights::estimate_weights;

fn main() -> Result<()> {
    let spec = SynthSpec {
        vocab_size: 24,
        pairs: 2200,
        sentences_per_doc: 6,
        sentence_len: 4,
        key_position: KeyPosition::Uniform,
        summary_transform: SummaryTransform::Copy,
        noise_overlap: 0.1,
        seed: 61,
    };
    let corpus = generate(&spec)?;
    let config = CorpusConfig::default();
    let vocab = build_vocab(&corpus.pairs, &config)?;
    let variant = RougeVariant::default();
    let mut items = Vec::new();
    let mut encoded_pairs = Vec::new();
    for pair in &corpus.pairs {
        let encoded = encode_pair(pair, &vocab, &config)?;
        let weights = estimate_weights(&encoded, &variant)?;
        items.push(TrainItem {
            doc: encoded.doc.clone(),
            summary: encoded.summary.clone(),
            weights,
        });
        encoded_pairs.push(encoded);
    }
    let train_items = &items[..2000];
    let test_pairs = &encoded_pairs[2000..];

    let systems = [
        (false, SwdMode::Off, 0.0),
        (true, SwdMode::Off, 0.0),
        (true, SwdMode::Active, 0.1),
    ];
    let mut rows = Vec::new();
    for (attention, swd_mode, lambda) in systems {
        let mut model_config = ModelConfig::desk(vocab.len());
        model_config.embed_dim = 24;
        model_config.hidden_dim = 32;
        model_config.attention = attention;
        model_config.swd_mode = swd_mode;
        model_config.lambda = lambda;
        model_config.seed = 9;
        let mut model = Model::new(model_config)?;
        let train_config = TrainConfig {
            batch_size: 32,
            epochs: 60,
            learning_rate: 2.0,
            lambda,
            seed: 9,
            ..TrainConfig::default()
        };
        let trace = train(&mut model, train_items, &train_config, |_| Ok(()), |_, _, _| Ok(()))?;
        println!(
            "{}: nll {:.3} -> {:.3}",
            model.tag(),
            trace[0].nll,
            trace.last().unwrap().nll
        );
        rows.push(evaluate(&model, test_pairs, 8, 1.0)?);
    }
    println!();
    print!("{}", render_report(&rows));
    Ok(())
}
