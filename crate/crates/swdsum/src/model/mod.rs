//! The summarization model: a bi-LSTM encoder over characters, a sentence
//! weight predictor (MLP over sentence and position embeddings), encoder
//! state reweighting, and an attention-equipped unidirectional LSTM
//! decoder.
//!
//! The weight path has three modes. `Off` removes its parameters
//! entirely. `Detached` computes the predicted weights on the tape but
//! feeds the decoder the raw encoder states, so the prediction receives no
//! gradient and the rest of the model behaves bitwise like `Off`.
//! `Active` scales every encoder state by its sentence's predicted weight
//! before the decoder consumes it.
//!
//! Documents are processed one at a time (ragged, no padding); batching
//! averages per-item losses on a shared tape.

mod params;

pub use params::{shape_table, ParamSet};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, BOS_ID, EOS_ID, PAD_ID};
use crate::error::{Result, SwdError};
use crate::tensor::{Gradients, Tape, Tensor};

/// How the sentence-weight path participates in the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwdMode {
    /// No weight-predictor parameters exist.
    Off,
    /// Weights are predicted but do not influence the decoder or loss
    /// gradients; useful for verifying baseline equivalence.
    Detached,
    /// Encoder states are reweighted by the predicted distribution.
    Active,
}

/// Architecture hyperparameters. `hidden_dim` is the total encoder state
/// width (both directions), so it must be even.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub max_sentences: usize,
    pub position_dim: usize,
    pub mlp_hidden: usize,
    pub attention: bool,
    pub swd_mode: SwdMode,
    pub lambda: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Desk-scale preset: small enough to train on a CPU in minutes.
    pub fn desk(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: 32,
            hidden_dim: 64,
            max_sentences: 20,
            position_dim: 16,
            mlp_hidden: 64,
            attention: true,
            swd_mode: SwdMode::Active,
            lambda: 0.01,
            seed: 42,
        }
    }

    /// Full-scale preset (400-dim embeddings, 512-dim states). Provided
    /// for completeness; training at this size is far beyond desk scale.
    pub fn paper_scale(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            embed_dim: 400,
            hidden_dim: 512,
            ..ModelConfig::desk(vocab_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 4 {
            return Err(SwdError::Config(format!(
                "vocab_size must cover the 4 reserved ids, got {}",
                self.vocab_size
            )));
        }
        if self.hidden_dim < 2 || self.hidden_dim % 2 != 0 {
            return Err(SwdError::Config(format!(
                "hidden_dim must be even and >= 2 (it spans two directions), got {}",
                self.hidden_dim
            )));
        }
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("max_sentences", self.max_sentences),
            ("position_dim", self.position_dim),
            ("mlp_hidden", self.mlp_hidden),
        ] {
            if v < 1 {
                return Err(SwdError::Config(format!("{name} must be >= 1, got {v}")));
            }
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(SwdError::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Parameters bound for one pass: tracked handles when training, plain
/// constants when decoding.
pub struct BoundParams {
    map: BTreeMap<String, Tensor>,
}

impl BoundParams {
    fn get(&self, name: &str) -> Result<&Tensor> {
        self.map.get(name).ok_or_else(|| {
            SwdError::Config(format!("parameter {name:?} is not present in this configuration"))
        })
    }

    /// Per-array gradient buffers after a backward pass; arrays the loss
    /// never reached get zeros.
    pub fn collect_gradients(&self, grads: &Gradients) -> BTreeMap<String, Vec<f64>> {
        self.map
            .iter()
            .map(|(name, t)| {
                let g = grads
                    .get(t)
                    .map(|g| g.to_vec())
                    .unwrap_or_else(|| vec![0.0; t.numel()]);
                (name.clone(), g)
            })
            .collect()
    }
}

/// The result of one teacher-forced item pass.
pub struct ItemOutput {
    /// Summed negative log-likelihood of the target tokens, shape `[1]`.
    pub nll: Tensor,
    /// Number of predicted positions (target length minus the BOS frame).
    pub target_tokens: usize,
    /// Predicted sentence weights `[1 × n]`; absent when the weight path
    /// is off.
    pub wprime: Option<Tensor>,
}

/// A configuration plus its parameters.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    params: ParamSet,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Model> {
        config.validate()?;
        let params = ParamSet::init(&config);
        Ok(Model { config, params })
    }

    /// Rebuilds a model from existing arrays, checking them against the
    /// configuration's shape table.
    pub fn from_parts(config: ModelConfig, params: ParamSet) -> Result<Model> {
        config.validate()?;
        let table = shape_table(&config);
        if params.num_arrays() != table.len() {
            return Err(SwdError::Format(format!(
                "parameter set has {} arrays, configuration requires {}",
                params.num_arrays(),
                table.len()
            )));
        }
        for (name, shape) in &table {
            match params.get(name) {
                None => {
                    return Err(SwdError::Format(format!("missing parameter array {name:?}")))
                }
                Some(t) if t.shape() != &shape[..] => {
                    return Err(SwdError::Format(format!(
                        "parameter array {name:?} has shape {:?}, expected {:?}",
                        t.shape(),
                        shape
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(Model { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Short name in the style of the baseline taxonomy: `rnn`,
    /// `rnn-context`, and their `+swd` variants.
    pub fn tag(&self) -> String {
        let base = if self.config.attention { "rnn-context" } else { "rnn" };
        match self.config.swd_mode {
            SwdMode::Off => base.to_string(),
            SwdMode::Detached => format!("{base}+swd-detached"),
            SwdMode::Active => format!("{base}+swd"),
        }
    }

    /// Watches every parameter on `tape` for gradient tracking, in sorted
    /// name order.
    pub fn bind(&self, tape: &mut Tape) -> BoundParams {
        BoundParams {
            map: self
                .params
                .iter()
                .map(|(name, t)| (name.clone(), tape.watch(t)))
                .collect(),
        }
    }

    /// Constant (untracked) view for inference; ops record nothing.
    pub fn constant_view(&self) -> BoundParams {
        BoundParams {
            map: self
                .params
                .iter()
                .map(|(name, t)| (name.clone(), t.clone()))
                .collect(),
        }
    }

    /// Teacher-forced pass over one document. `target` must be the framed
    /// sequence `[BOS, summary tokens.., EOS]`.
    pub fn forward_item(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        doc: &Document,
        target: &[u32],
    ) -> Result<ItemOutput> {
        if target.len() < 2 || target[0] != BOS_ID {
            return Err(SwdError::Degenerate(
                "target must start with BOS and contain at least one more token".into(),
            ));
        }
        let setup = self.setup_decoder(tape, bound, doc)?;
        let (mut h, mut c) = (setup.h0, setup.c0);
        let mut nll = Tensor::scalar(0.0);
        for k in 0..target.len() - 1 {
            let context = self.maybe_context(tape, bound, &h, &setup.h_used)?;
            let (logits, h2, c2) =
                self.decode_logits(tape, bound, target[k], &h, &c, context.as_ref())?;
            let step_nll = nll_of_token(tape, &logits, target[k + 1], self.config.vocab_size)?;
            nll = tape.add(&nll, &step_nll)?;
            h = h2;
            c = c2;
        }
        Ok(ItemOutput {
            nll,
            target_tokens: target.len() - 1,
            wprime: setup.wprime,
        })
    }

    /// Greedy decoding from BOS: emits the argmax token each step (ties
    /// break toward the lowest id, PAD and BOS are never emitted) and
    /// stops at EOS or `max_len`.
    pub fn greedy_decode(&self, doc: &Document, max_len: usize) -> Result<Vec<u32>> {
        let mut tape = Tape::new();
        let bound = self.constant_view();
        let setup = self.setup_decoder(&mut tape, &bound, doc)?;
        let (mut h, mut c) = (setup.h0, setup.c0);
        let mut prev = BOS_ID;
        let mut out = Vec::new();
        for _ in 0..max_len {
            let context = self.maybe_context(&mut tape, &bound, &h, &setup.h_used)?;
            let (probs, h2, c2) =
                self.decode_step(&mut tape, &bound, prev, &h, &c, context.as_ref())?;
            let next = argmax_emittable(probs.values());
            if next == EOS_ID {
                break;
            }
            out.push(next);
            prev = next;
            h = h2;
            c = c2;
        }
        Ok(out)
    }

    /// Predicted sentence weights for a document, without running the
    /// encoder or decoder (the prediction depends only on embeddings).
    pub fn predict_weights(&self, doc: &Document) -> Result<Vec<f64>> {
        if self.config.swd_mode == SwdMode::Off {
            return Err(SwdError::Config(
                "this model has no sentence-weight predictor".into(),
            ));
        }
        let mut tape = Tape::new();
        let bound = self.constant_view();
        let w = self.predict_wprime(&mut tape, &bound, doc)?;
        Ok(w.values().to_vec())
    }

    fn predict_wprime(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        doc: &Document,
    ) -> Result<Tensor> {
        let ids = doc.flat_tokens();
        let x = tape.embedding_lookup(bound.get("embed")?, &ids)?;
        let s = sentence_embeddings(tape, &x, doc)?;
        predict_sentence_weights(tape, bound, &self.config, &s)
    }

    /// Encoder states, optional weight prediction, reweighting, and the
    /// decoder's initial state, shared by training and decoding.
    fn setup_decoder(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        doc: &Document,
    ) -> Result<DecoderSetup> {
        let ids = doc.flat_tokens();
        let h = encode(tape, bound, &self.config, &ids)?;
        let (wprime, h_used) = match self.config.swd_mode {
            SwdMode::Off => (None, h),
            SwdMode::Detached => {
                let w = self.predict_wprime(tape, bound, doc)?;
                (Some(w), h)
            }
            SwdMode::Active => {
                let w = self.predict_wprime(tape, bound, doc)?;
                let hp = reweight_states(tape, &h, &w, doc.word2sen_map())?;
                (Some(w), hp)
            }
        };

        // Decoder init: affine map of the final forward-direction state and
        // the initial backward-direction state (halves of the last and
        // first rows of the states the decoder will consume).
        let d = self.config.hidden_dim;
        let dd = d / 2;
        let last = select_row(tape, &h_used, ids.len() - 1)?;
        let first = select_row(tape, &h_used, 0)?;
        let fw_half = tape.matmul(&last, &half_selector(d, 0))?;
        let bw_half = tape.matmul(&first, &half_selector(d, dd))?;
        let init_in = tape.concat(&fw_half, &bw_half, 1)?;
        let pre = tape.matmul(&init_in, bound.get("dec_init.w")?)?;
        let h0 = tape.add(&pre, bound.get("dec_init.b")?)?;
        let c0 = Tensor::zeros(&[1, d]);
        Ok(DecoderSetup {
            h_used,
            wprime,
            h0,
            c0,
        })
    }

    fn maybe_context(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        state: &Tensor,
        h_used: &Tensor,
    ) -> Result<Option<Tensor>> {
        if self.config.attention {
            Ok(Some(attention_context(tape, bound, state, h_used)?))
        } else {
            Ok(None)
        }
    }

    fn decode_logits(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        prev: u32,
        h_prev: &Tensor,
        c_prev: &Tensor,
        context: Option<&Tensor>,
    ) -> Result<(Tensor, Tensor, Tensor)> {
        if self.config.attention != context.is_some() {
            return Err(SwdError::Argument(
                "decode_step: context must be supplied exactly when attention is enabled".into(),
            ));
        }
        let x = tape.embedding_lookup(bound.get("embed")?, &[prev])?;
        let input = match context {
            Some(ctx) => tape.concat(&x, ctx, 1)?,
            None => x,
        };
        let (h, c) = lstm_cell(tape, bound, "dec", &input, h_prev, c_prev)?;
        let proj = tape.matmul(&h, bound.get("out.w")?)?;
        let logits = tape.add(&proj, bound.get("out.b")?)?;
        Ok((logits, h, c))
    }

    /// One decoding step: next-token probability distribution plus the new
    /// recurrent state.
    pub fn decode_step(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        prev: u32,
        h_prev: &Tensor,
        c_prev: &Tensor,
        context: Option<&Tensor>,
    ) -> Result<(Tensor, Tensor, Tensor)> {
        let (logits, h, c) = self.decode_logits(tape, bound, prev, h_prev, c_prev, context)?;
        let probs = tape.softmax_rows(&logits, None)?;
        Ok((probs, h, c))
    }
}

struct DecoderSetup {
    h_used: Tensor,
    wprime: Option<Tensor>,
    h0: Tensor,
    c0: Tensor,
}

/// Bi-LSTM encoder: row `t` of the output is the forward state at `t`
/// concatenated with the backward state at `t`, each `hidden_dim / 2`
/// wide. All-zero parameters yield all-zero states.
pub fn encode(
    tape: &mut Tape,
    bound: &BoundParams,
    config: &ModelConfig,
    ids: &[u32],
) -> Result<Tensor> {
    if ids.is_empty() {
        return Err(SwdError::Degenerate("cannot encode an empty document".into()));
    }
    let dd = config.hidden_dim / 2;
    let embed = bound.get("embed")?.clone();
    let zero = Tensor::zeros(&[1, dd]);

    let mut fw = Vec::with_capacity(ids.len());
    let (mut h, mut c) = (zero.clone(), zero.clone());
    for &id in ids {
        let x = tape.embedding_lookup(&embed, &[id])?;
        (h, c) = lstm_cell(tape, bound, "enc_fw", &x, &h, &c)?;
        fw.push(h.clone());
    }

    let mut bw = vec![zero.clone(); ids.len()];
    let (mut h, mut c) = (zero.clone(), zero);
    for (t, &id) in ids.iter().enumerate().rev() {
        let x = tape.embedding_lookup(&embed, &[id])?;
        (h, c) = lstm_cell(tape, bound, "enc_bw", &x, &h, &c)?;
        bw[t] = h.clone();
    }

    let rows: Vec<Tensor> = fw
        .iter()
        .zip(&bw)
        .map(|(f, b)| tape.concat(f, b, 1))
        .collect::<Result<_>>()?;
    let refs: Vec<&Tensor> = rows.iter().collect();
    tape.concat_many(&refs, 0)
}

/// Sentence embeddings: `s_j` is the sum of the word embeddings of
/// sentence `j`, computed as one constant selection-matrix product.
pub fn sentence_embeddings(tape: &mut Tape, x: &Tensor, doc: &Document) -> Result<Tensor> {
    let total = doc.total_words();
    if x.shape().first() != Some(&total) {
        return Err(SwdError::Dimension(format!(
            "embedding matrix has {} rows, document has {} words",
            x.shape().first().unwrap_or(&0),
            total
        )));
    }
    let n = doc.num_sentences();
    let mut sel = vec![0.0; n * total];
    for i in 0..total {
        sel[doc.word2sen(i) * total + i] = 1.0;
    }
    let sel = Tensor::new(&[n, total], sel)?;
    tape.matmul(&sel, x)
}

/// Predicted sentence weights: a tanh MLP over `[s_j, position_j]` scored
/// per sentence, then softmax over sentences. Output shape `[1 × n]`.
pub fn predict_sentence_weights(
    tape: &mut Tape,
    bound: &BoundParams,
    config: &ModelConfig,
    s: &Tensor,
) -> Result<Tensor> {
    let n = s.shape()[0];
    if n == 0 {
        return Err(SwdError::Degenerate("no sentences to weight".into()));
    }
    if n > config.max_sentences {
        return Err(SwdError::Dimension(format!(
            "document has {n} sentences but the model supports {}",
            config.max_sentences
        )));
    }
    let positions: Vec<u32> = (0..n as u32).collect();
    let pos = tape.embedding_lookup(bound.get("pos_embed")?, &positions)?;
    let joint = tape.concat(s, &pos, 1)?;
    let pre = tape.matmul(&joint, bound.get("mlp.w1")?)?;
    let pre = add_bias(tape, &pre, bound.get("mlp.b1")?)?;
    let hidden = tape.tanh(&pre);
    let logit = tape.matmul(&hidden, bound.get("mlp.w2")?)?;
    let logit = add_bias(tape, &logit, bound.get("mlp.b2")?)?;
    let row = tape.reshape(&logit, &[1, n])?;
    tape.softmax_rows(&row, None)
}

/// Scales every state row by its sentence's weight:
/// `h'_i = w'_{word2sen(i)} · h_i`.
pub fn reweight_states(
    tape: &mut Tape,
    h: &Tensor,
    wprime: &Tensor,
    word2sen: &[usize],
) -> Result<Tensor> {
    let l = h.shape()[0];
    let d = h.shape()[1];
    let n = wprime.numel();
    if word2sen.len() != l {
        return Err(SwdError::Dimension(format!(
            "word2sen covers {} words, states cover {l}",
            word2sen.len()
        )));
    }
    if let Some(&bad) = word2sen.iter().find(|&&j| j >= n) {
        return Err(SwdError::Dimension(format!(
            "word2sen references sentence {bad}, but only {n} weights exist"
        )));
    }
    let wcol = tape.reshape(wprime, &[n, 1])?;
    let mut sel = vec![0.0; l * n];
    for (i, &j) in word2sen.iter().enumerate() {
        sel[i * n + j] = 1.0;
    }
    let sel = Tensor::new(&[l, n], sel)?;
    let per_token = tape.matmul(&sel, &wcol)?; // [L × 1]
    let tiled = tape.matmul(&per_token, &Tensor::filled(&[1, d], 1.0))?;
    tape.mul(&tiled, h)
}

/// Additive attention over the encoder states:
/// `score_i = vᵀ·tanh(W1·h_i + W2·state)`, softmaxed into mixing weights.
pub fn attention_context(
    tape: &mut Tape,
    bound: &BoundParams,
    state: &Tensor,
    h_used: &Tensor,
) -> Result<Tensor> {
    let l = h_used.shape()[0];
    let proj_h = tape.matmul(h_used, bound.get("attn.w1")?)?;
    let proj_s = tape.matmul(state, bound.get("attn.w2")?)?;
    let tiled = tape.matmul(&Tensor::filled(&[l, 1], 1.0), &proj_s)?;
    let summed = tape.add(&proj_h, &tiled)?;
    let act = tape.tanh(&summed);
    let scores = tape.matmul(&act, bound.get("attn.v")?)?;
    let row = tape.reshape(&scores, &[1, l])?;
    let alpha = tape.softmax_rows(&row, None)?;
    tape.matmul(&alpha, h_used)
}

/// One gated recurrent (LSTM) step with four per-gate weight triples
/// under `prefix`: `i`/`f`/`o` sigmoid gates and a tanh candidate `g`.
fn lstm_cell(
    tape: &mut Tape,
    bound: &BoundParams,
    prefix: &str,
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let gate = |tape: &mut Tape, name: &str| -> Result<Tensor> {
        let wx = bound.get(&format!("{prefix}.{name}.wx"))?.clone();
        let wh = bound.get(&format!("{prefix}.{name}.wh"))?.clone();
        let b = bound.get(&format!("{prefix}.{name}.b"))?.clone();
        let xs = tape.matmul(x, &wx)?;
        let hs = tape.matmul(h_prev, &wh)?;
        let sum = tape.add(&xs, &hs)?;
        tape.add(&sum, &b)
    };
    let i_pre = gate(tape, "i")?;
    let f_pre = gate(tape, "f")?;
    let g_pre = gate(tape, "g")?;
    let o_pre = gate(tape, "o")?;
    let i = tape.sigmoid(&i_pre);
    let f = tape.sigmoid(&f_pre);
    let g = tape.tanh(&g_pre);
    let o = tape.sigmoid(&o_pre);
    let keep = tape.mul(&f, c_prev)?;
    let write = tape.mul(&i, &g)?;
    let c = tape.add(&keep, &write)?;
    let c_act = tape.tanh(&c);
    let h = tape.mul(&o, &c_act)?;
    Ok((h, c))
}

/// Row `t` of `m`, kept on the tape via a one-hot product.
fn select_row(tape: &mut Tape, m: &Tensor, t: usize) -> Result<Tensor> {
    let rows = m.shape()[0];
    let mut onehot = vec![0.0; rows];
    onehot[t] = 1.0;
    tape.matmul(&Tensor::new(&[1, rows], onehot)?, m)
}

/// Constant `[d × d/2]` selector picking the half of a row that starts at
/// column `offset`.
fn half_selector(d: usize, offset: usize) -> Tensor {
    let dd = d / 2;
    let mut sel = vec![0.0; d * dd];
    for c in 0..dd {
        sel[(offset + c) * dd + c] = 1.0;
    }
    Tensor::new(&[d, dd], sel).expect("selector shape")
}

/// Adds a `[1 × k]` bias to every row of an `[n × k]` tensor.
fn add_bias(tape: &mut Tape, x: &Tensor, b: &Tensor) -> Result<Tensor> {
    let n = x.shape()[0];
    if n == 1 {
        return tape.add(x, b);
    }
    let tiled = tape.matmul(&Tensor::filled(&[n, 1], 1.0), b)?;
    tape.add(x, &tiled)
}

/// Stable summed NLL of one target token given `[1 × V]` logits:
/// `logsumexp(logits − max) − (logit_y − max)`.
fn nll_of_token(tape: &mut Tape, logits: &Tensor, target: u32, vocab: usize) -> Result<Tensor> {
    if target as usize >= vocab {
        return Err(SwdError::Vocab(format!(
            "target token id {target} out of range for vocabulary of {vocab}"
        )));
    }
    let max = logits.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted = tape.add(logits, &Tensor::filled(&[1, vocab], -max))?;
    let exps = tape.exp(&shifted);
    let denom = tape.sum(&exps);
    let lse = tape.log(&denom)?;
    let mut onehot = vec![0.0; vocab];
    onehot[target as usize] = 1.0;
    let picked = tape.matmul(&shifted, &Tensor::new(&[vocab, 1], onehot)?)?;
    let picked = tape.reshape(&picked, &[1])?;
    tape.sub(&lse, &picked)
}

/// Argmax over emittable tokens: PAD and BOS are never produced; ties
/// break toward the lowest id.
fn argmax_emittable(probs: &[f64]) -> u32 {
    let mut best = EOS_ID;
    let mut best_p = f64::NEG_INFINITY;
    for (id, &p) in probs.iter().enumerate() {
        let id = id as u32;
        if id == PAD_ID || id == BOS_ID {
            continue;
        }
        if p > best_p {
            best_p = p;
            best = id;
        }
    }
    best
}
