//! Abstractive summarization with learned sentence weight distributions.
//!
//! The crate trains character-level sequence-to-sequence summarizers whose
//! encoder states are reweighted by a predicted per-sentence importance
//! distribution. Alongside the model it provides the supporting pieces as
//! reusable modules:
//!
//! - [`tensor`]: dense f64 tensors with reverse-mode automatic
//!   differentiation on an operation tape, plus finite-difference checking.
//! - [`rouge`]: exact ROUGE-1/2/L precision, recall, and F-measure.
//! - [`corpus`]: character tokenization, sentence splitting, vocabulary
//!   construction, and batching for document/summary pairs.
//! - [`weights`]: gold sentence weight estimation from per-sentence ROUGE
//!   against the reference summary.
//! - [`synth`]: a deterministic needle-in-a-haystack corpus generator for
//!   diagnosing whether the weight predictor locates salient sentences.
//! - [`model`]: the LSTM encoder-decoder with the sentence weight predictor
//!   and encoder-state reweighting.
//! - [`trainer`]: joint loss, SGD with gradient clipping, the training
//!   loop, checkpointing, and corpus-level evaluation.
//! - [`config`]: key=value run configuration files.
//!
//! Everything is f64 and deterministic: given the same seed, corpus, and
//! configuration, training produces bitwise-identical parameters, logs, and
//! checkpoints. See the `examples/` directory for end-to-end walkthroughs
//! of each capability.

pub mod config;
pub mod corpus;
pub mod error;
pub mod model;
pub mod rouge;
pub mod synth;
pub mod tensor;
pub mod trainer;
pub mod weights;

pub use error::{Result, SwdError};
