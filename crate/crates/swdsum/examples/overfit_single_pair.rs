//! Overfits a small model on a single pair until greedy decoding
//! reproduces the training summary exactly.

use swdsum::corpus::{build_vocab, encode_pair, CorpusConfig, RawPair, TrainItem};
use swdsum::error::Result;
use swdsum::model::{Model, ModelConfig};
use swdsum::rouge::RougeVariant;
use swdsum::trainer::{train, TrainConfig};
use swdsum::weights::estimate_weights;

fn main() -> Result<()> {
    let pair = RawPair {
        text: "天气很好。我们去公园。阳光明媚。".into(),
        summary: "天气好".into(),
    };
    let config = CorpusConfig::default();
    let vocab = build_vocab(std::slice::from_ref(&pair), &config)?;
    let encoded = encode_pair(&pair, &vocab, &config)?;
    let weights = estimate_weights(&encoded, &RougeVariant::default())?;
    let items = vec![TrainItem {
        doc: encoded.doc.clone(),
        summary: encoded.summary.clone(),
        weights,
    }];

    let mut model_config = ModelConfig::desk(vocab.len());
    model_config.embed_dim = 16;
    model_config.hidden_dim = 24;
    model_config.seed = 1;
    let mut model = Model::new(model_config)?;
    let train_config = TrainConfig {
        batch_size: 1,
        epochs: 150,
        learning_rate: 0.5,
        seed: 1,
        ..TrainConfig::default()
    };
    let trace = train(&mut model, &items, &train_config, |_| Ok(()), |_, _, _| Ok(()))?;
    println!(
        "nll per token: {:.4} -> {:.4} over {} steps",
        trace[0].nll,
        trace.last().unwrap().nll,
        trace.len()
    );

    let decoded = model.greedy_decode(&encoded.doc, 20)?;
    let text = vocab.decode(&decoded, "");
    println!("decoded: {text}");
    assert_eq!(decoded, encoded.summary, "decode should reproduce the summary");
    Ok(())
}
