//! Named parameter arrays with deterministic initialization.
//!
//! Every array draws from its own RNG stream seeded by (global seed, array
//! name), so the values of one array never depend on which other arrays
//! exist. Builds that differ only in optional components (attention, the
//! weight predictor) therefore share bitwise-identical common parameters.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SwdError};
use crate::tensor::Tensor;

use super::{ModelConfig, SwdMode};

const INIT_RANGE: f64 = 0.08;
const GATES: [&str; 4] = ["i", "f", "g", "o"];

/// All trainable arrays of one model, keyed by name in sorted order.
#[derive(Clone, Debug)]
pub struct ParamSet {
    arrays: BTreeMap<String, Tensor>,
}

/// The full (name, shape) table implied by a configuration. Checkpoint
/// validation and initialization both derive from this single source.
pub fn shape_table(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let v = config.vocab_size;
    let e = config.embed_dim;
    let d = config.hidden_dim;
    let dd = d / 2;
    let mut table = vec![("embed".to_string(), vec![v, e])];
    for dir in ["enc_fw", "enc_bw"] {
        for gate in GATES {
            table.push((format!("{dir}.{gate}.wx"), vec![e, dd]));
            table.push((format!("{dir}.{gate}.wh"), vec![dd, dd]));
            table.push((format!("{dir}.{gate}.b"), vec![1, dd]));
        }
    }
    let dec_in = e + if config.attention { d } else { 0 };
    for gate in GATES {
        table.push((format!("dec.{gate}.wx"), vec![dec_in, d]));
        table.push((format!("dec.{gate}.wh"), vec![d, d]));
        table.push((format!("dec.{gate}.b"), vec![1, d]));
    }
    table.push(("dec_init.w".to_string(), vec![d, d]));
    table.push(("dec_init.b".to_string(), vec![1, d]));
    table.push(("out.w".to_string(), vec![d, v]));
    table.push(("out.b".to_string(), vec![1, v]));
    if config.attention {
        table.push(("attn.w1".to_string(), vec![d, d]));
        table.push(("attn.w2".to_string(), vec![d, d]));
        table.push(("attn.v".to_string(), vec![d, 1]));
    }
    if config.swd_mode != SwdMode::Off {
        table.push(("pos_embed".to_string(), vec![config.max_sentences, config.position_dim]));
        table.push(("mlp.w1".to_string(), vec![e + config.position_dim, config.mlp_hidden]));
        table.push(("mlp.b1".to_string(), vec![1, config.mlp_hidden]));
        table.push(("mlp.w2".to_string(), vec![config.mlp_hidden, 1]));
        table.push(("mlp.b2".to_string(), vec![1, 1]));
    }
    table
}

/// FNV-1a, used to fold array names into per-array seeds. Implemented here
/// because std's hasher is not guaranteed stable across releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl ParamSet {
    /// Initializes every array uniformly in [−0.08, 0.08] from its
    /// name-derived seed.
    pub fn init(config: &ModelConfig) -> ParamSet {
        let mut arrays = BTreeMap::new();
        for (name, shape) in shape_table(config) {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ fnv1a(name.as_bytes()));
            let numel: usize = shape.iter().product();
            let values: Vec<f64> = (0..numel)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * INIT_RANGE)
                .collect();
            arrays.insert(name, Tensor::new(&shape, values).expect("table shape"));
        }
        ParamSet { arrays }
    }

    pub fn from_arrays(arrays: BTreeMap<String, Tensor>) -> ParamSet {
        ParamSet { arrays }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.arrays.get(name)
    }

    /// Replaces an array's values; the shape must not change.
    pub fn set(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        match self.arrays.get_mut(name) {
            Some(slot) => {
                if slot.shape() != tensor.shape() {
                    return Err(SwdError::Dimension(format!(
                        "array {name:?}: cannot replace shape {:?} with {:?}",
                        slot.shape(),
                        tensor.shape()
                    )));
                }
                *slot = tensor;
                Ok(())
            }
            None => Err(SwdError::Config(format!("unknown parameter array {name:?}"))),
        }
    }

    /// Arrays in sorted name order (the order used everywhere: watching,
    /// gradient norms, serialization).
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.arrays.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.arrays.keys()
    }

    pub fn num_arrays(&self) -> usize {
        self.arrays.len()
    }

    pub fn num_values(&self) -> usize {
        self.arrays.values().map(Tensor::numel).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.arrays
            .values()
            .all(|t| t.values().iter().all(|v| v.is_finite()))
    }
}
