//! Saves a model checkpoint, reloads it, and confirms parameters and
//! decodes survive bitwise.

use swdsum::corpus::Document;
use swdsum::error::Result;
use swdsum::model::{Model, ModelConfig};
use swdsum::trainer::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};

fn main() -> Result<()> {
    let mut config = ModelConfig::desk(30);
    config.embed_dim = 8;
    config.hidden_dim = 12;
    let model = Model::new(config)?;

    let dir = std::env::temp_dir().join("swdsum-roundtrip");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("checkpoint.json");
    let checkpoint = Checkpoint {
        model: model.clone(),
        vocab_path: "vocab.txt".into(),
        meta: CheckpointMeta {
            step: 0,
            seed: 42,
            loss_history: vec![],
        },
    };
    save_checkpoint(&checkpoint, &path)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let loaded = load_checkpoint(&path)?;
    let mut mismatches = 0;
    for (name, tensor) in model.params().iter() {
        let other = loaded.model.params().get(name).expect("array present");
        if tensor.values() != other.values() {
            mismatches += 1;
        }
    }
    println!(
        "{} arrays, {} values, {mismatches} mismatches",
        model.params().num_arrays(),
        model.params().num_values()
    );
    assert_eq!(mismatches, 0);

    let doc = Document::from_sentences(vec![vec![4, 5, 6], vec![7, 8]])?;
    let a = model.greedy_decode(&doc, 10)?;
    let b = loaded.model.greedy_decode(&doc, 10)?;
    assert_eq!(a, b, "decodes must match after reload");
    println!("greedy decodes match: {a:?}");
    std::fs::remove_file(&path)?;
    Ok(())
}
