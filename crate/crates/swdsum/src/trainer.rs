//! Joint loss, minibatch SGD with global-norm clipping, checkpointing,
//! and ROUGE evaluation reports.
//!
//! The loss is `(1/N)·Σ_i [NLL_i + λ·CE_i]`: teacher-forced negative log
//! likelihood of each target sequence plus (when λ > 0 and the model
//! predicts sentence weights) a weight-matching term. By default CE is
//! the cross-entropy from the estimated weights `w` (target) to the
//! predicted weights `w'`: `−Σ_j w_j·log w'_j`, which is minimized
//! exactly at `w' = w`. A `Literal` switch instead scores
//! `−Σ_j w'_j·log w_j`, swapping the roles.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{make_batches, Batch, EncodedPair, TrainItem, Vocab};
use crate::error::{Result, SwdError};
use crate::model::{BoundParams, ItemOutput, Model, ModelConfig, ParamSet};
use crate::rouge::{rouge_l, rouge_n, RougeScore};
use crate::tensor::{Tape, Tensor};

/// Which direction the weight-matching cross-entropy reads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightLossForm {
    /// `−Σ w·log w'`: estimated weights are the target distribution.
    #[default]
    CrossEntropy,
    /// `−Σ w'·log w`: estimated weights inside the logarithm.
    Literal,
}

/// Optimization settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub clip_norm: f64,
    pub seed: u64,
    pub weight_loss_form: WeightLossForm,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            batch_size: 32,
            lambda: 0.01,
            learning_rate: 0.1,
            epochs: 10,
            clip_norm: 5.0,
            seed: 42,
            weight_loss_form: WeightLossForm::CrossEntropy,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(SwdError::Config("batch_size must be >= 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(SwdError::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(SwdError::Config(format!(
                "learning_rate must be finite and > 0, got {}",
                self.learning_rate
            )));
        }
        if !self.clip_norm.is_finite() || self.clip_norm <= 0.0 {
            return Err(SwdError::Config(format!(
                "clip_norm must be finite and > 0, got {}",
                self.clip_norm
            )));
        }
        Ok(())
    }
}

/// Scalar summary of one batch's loss terms.
#[derive(Clone, Copy, Debug)]
pub struct LossBreakdown {
    /// Mean NLL per predicted token across the batch.
    pub nll_per_token: f64,
    /// Mean weight cross-entropy per item (0 when the term is inactive).
    pub weight_ce: f64,
    /// Total predicted positions in the batch.
    pub tokens: usize,
}

/// Joint loss of a batch, built on `tape` for backprop. Items are
/// processed one at a time; targets are taken unpadded from the batch
/// rows, so PAD never contributes a prediction. Returns the mean loss
/// tensor plus the per-term breakdown.
pub fn joint_loss(
    tape: &mut Tape,
    model: &Model,
    bound: &BoundParams,
    batch: &Batch,
    lambda: f64,
    form: WeightLossForm,
) -> Result<(Tensor, LossBreakdown)> {
    let n = batch.docs.len();
    if n == 0 {
        return Err(SwdError::Degenerate("empty batch".into()));
    }
    let mut total = Tensor::scalar(0.0);
    let mut nll_sum = 0.0;
    let mut ce_sum = 0.0;
    let mut tokens = 0usize;
    for i in 0..n {
        let target = unpadded(&batch.tgt[i], &batch.tgt_mask[i]);
        let ItemOutput {
            nll,
            target_tokens,
            wprime,
        } = model.forward_item(tape, bound, &batch.docs[i], &target)?;
        nll_sum += nll.item();
        tokens += target_tokens;
        let mut item_loss = nll;
        if lambda > 0.0 {
            if let Some(wp) = &wprime {
                let gold = &batch.weights[i];
                if gold.len() != wp.numel() {
                    return Err(SwdError::Dimension(format!(
                        "item {i}: {} estimated weights for {} sentences",
                        gold.len(),
                        wp.numel()
                    )));
                }
                let ce = match form {
                    WeightLossForm::CrossEntropy => {
                        let log_wp = tape.log(wp)?;
                        let gold_row = Tensor::row(gold.as_slice().to_vec());
                        let prod = tape.mul(&gold_row, &log_wp)?;
                        let s = tape.sum(&prod);
                        tape.neg(&s)
                    }
                    WeightLossForm::Literal => {
                        let log_gold: Vec<f64> =
                            gold.as_slice().iter().map(|w| w.ln()).collect();
                        let prod = tape.mul(wp, &Tensor::row(log_gold))?;
                        let s = tape.sum(&prod);
                        tape.neg(&s)
                    }
                };
                ce_sum += ce.item();
                let scaled = tape.scale(&ce, lambda);
                item_loss = tape.add(&item_loss, &scaled)?;
            }
        }
        total = tape.add(&total, &item_loss)?;
    }
    let loss = tape.scale(&total, 1.0 / n as f64);
    let value = loss.item();
    if !value.is_finite() {
        return Err(SwdError::Divergence(format!(
            "non-finite loss {value} (nll sum {nll_sum}, weight ce sum {ce_sum})"
        )));
    }
    Ok((
        loss,
        LossBreakdown {
            nll_per_token: nll_sum / tokens as f64,
            weight_ce: ce_sum / n as f64,
            tokens,
        },
    ))
}

fn unpadded(row: &[u32], mask: &[f64]) -> Vec<u32> {
    row.iter()
        .zip(mask)
        .filter(|(_, m)| **m == 1.0)
        .map(|(t, _)| *t)
        .collect()
}

/// One SGD update with global-norm clipping. Validates every gradient
/// before touching any parameter, so a divergence error leaves the model
/// in its pre-step state. Returns the pre-clip gradient norm.
pub fn sgd_step(
    params: &mut ParamSet,
    grads: &BTreeMap<String, Vec<f64>>,
    learning_rate: f64,
    clip_norm: f64,
) -> Result<f64> {
    let mut sq_sum = 0.0;
    for (name, g) in grads {
        let tensor = params.get(name).ok_or_else(|| {
            SwdError::Dimension(format!("gradient for unknown parameter array {name:?}"))
        })?;
        if g.len() != tensor.numel() {
            return Err(SwdError::Dimension(format!(
                "gradient for {name:?} has {} values, array has {}",
                g.len(),
                tensor.numel()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(SwdError::Divergence(format!(
                "non-finite gradient in array {name:?}"
            )));
        }
        sq_sum += g.iter().map(|v| v * v).sum::<f64>();
    }
    let norm = sq_sum.sqrt();
    if !norm.is_finite() {
        return Err(SwdError::Divergence(format!(
            "non-finite gradient norm {norm}"
        )));
    }
    let factor = if norm > clip_norm { clip_norm / norm } else { 1.0 };
    for (name, g) in grads {
        let tensor = params.get(name).expect("validated above");
        let shape = tensor.shape().to_vec();
        let updated: Vec<f64> = tensor
            .values()
            .iter()
            .zip(g)
            .map(|(theta, grad)| theta - learning_rate * factor * grad)
            .collect();
        params.set(name, Tensor::new(&shape, updated)?)?;
    }
    Ok(norm)
}

/// One step's logged quantities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepStat {
    pub step: u64,
    pub epoch: u64,
    pub nll: f64,
    pub weight_ce: f64,
    pub grad_norm: f64,
}

/// Trains `model` in place over shuffled minibatches. `on_step` sees
/// every step's statistics (for logging); `on_epoch` sees the model, the
/// epoch index, and the epoch's mean loss (for checkpointing). Batches
/// are reshuffled each epoch from `seed + epoch`. On divergence the
/// error propagates and the model keeps its last completed step.
pub fn train<FS, FE>(
    model: &mut Model,
    items: &[TrainItem],
    config: &TrainConfig,
    mut on_step: FS,
    mut on_epoch: FE,
) -> Result<Vec<StepStat>>
where
    FS: FnMut(&StepStat) -> Result<()>,
    FE: FnMut(&Model, u64, f64) -> Result<()>,
{
    config.validate()?;
    if items.is_empty() {
        return Err(SwdError::Degenerate("no training items".into()));
    }
    let mut trace = Vec::new();
    let mut step = 0u64;
    for epoch in 0..config.epochs as u64 {
        let batches = make_batches(items, config.batch_size, config.seed.wrapping_add(epoch))?;
        let mut epoch_loss = 0.0;
        for batch in &batches {
            let mut tape = Tape::new();
            let bound = model.bind(&mut tape);
            let (loss, breakdown) = joint_loss(
                &mut tape,
                model,
                &bound,
                batch,
                config.lambda,
                config.weight_loss_form,
            )?;
            epoch_loss += loss.item();
            let grads = tape.backward(&loss)?;
            let by_name = bound.collect_gradients(&grads);
            let grad_norm = sgd_step(
                model.params_mut(),
                &by_name,
                config.learning_rate,
                config.clip_norm,
            )?;
            let stat = StepStat {
                step,
                epoch,
                nll: breakdown.nll_per_token,
                weight_ce: breakdown.weight_ce,
                grad_norm,
            };
            on_step(&stat)?;
            trace.push(stat);
            step += 1;
        }
        on_epoch(model, epoch, epoch_loss / batches.len() as f64)?;
    }
    Ok(trace)
}

/// Corpus-mean ROUGE-1/2/L of greedy decodes against references.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub tag: String,
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rougel: RougeScore,
    pub docs: usize,
}

/// Greedy-decodes every document and macro-averages ROUGE against the
/// references (token-level, matching how the corpus was encoded).
pub fn evaluate(model: &Model, pairs: &[EncodedPair], max_len: usize, beta: f64) -> Result<EvalRow> {
    if pairs.is_empty() {
        return Err(SwdError::Degenerate("no evaluation pairs".into()));
    }
    let mut sums = [RougeScore::ZERO; 3];
    for pair in pairs {
        let cand = model.greedy_decode(&pair.doc, max_len)?;
        let scores = [
            rouge_n(&cand, &pair.summary, 1, beta)?,
            rouge_n(&cand, &pair.summary, 2, beta)?,
            rouge_l(&cand, &pair.summary, beta),
        ];
        for (sum, s) in sums.iter_mut().zip(scores) {
            sum.precision += s.precision;
            sum.recall += s.recall;
            sum.f += s.f;
        }
    }
    let n = pairs.len() as f64;
    let mean = |s: RougeScore| RougeScore {
        precision: s.precision / n,
        recall: s.recall / n,
        f: s.f / n,
    };
    Ok(EvalRow {
        tag: model.tag(),
        rouge1: mean(sums[0]),
        rouge2: mean(sums[1]),
        rougel: mean(sums[2]),
        docs: pairs.len(),
    })
}

/// Renders rows as a tab-separated table: F1 under the R-1/R-2/R-L
/// headline columns, precision and recall detail after. Percentages with
/// one decimal.
pub fn render_report(rows: &[EvalRow]) -> String {
    let mut out = String::from(
        "model\tR-1\tR-2\tR-L\tR-1-P\tR-1-R\tR-2-P\tR-2-R\tR-L-P\tR-L-R\n",
    );
    for row in rows {
        let pct = |v: f64| format!("{:.1}", v * 100.0);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.tag,
            pct(row.rouge1.f),
            pct(row.rouge2.f),
            pct(row.rougel.f),
            pct(row.rouge1.precision),
            pct(row.rouge1.recall),
            pct(row.rouge2.precision),
            pct(row.rouge2.recall),
            pct(row.rougel.precision),
            pct(row.rougel.recall),
        ));
    }
    out
}

/// Training provenance stored inside a checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub step: u64,
    pub seed: u64,
    pub loss_history: Vec<f64>,
}

/// A model plus everything needed to resume or evaluate it.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: Model,
    pub vocab_path: String,
    pub meta: CheckpointMeta,
}

#[derive(Serialize, Deserialize)]
struct ArrayFile {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    model_config: ModelConfig,
    vocab_path: String,
    params: BTreeMap<String, ArrayFile>,
    meta: CheckpointMeta,
}

/// Saves atomically (write to a sibling temp file, then rename), so a
/// crash never leaves a truncated checkpoint in place.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    if !checkpoint.model.params().all_finite() {
        return Err(SwdError::Divergence(
            "refusing to checkpoint non-finite parameters".into(),
        ));
    }
    let file = CheckpointFile {
        format_version: 1,
        model_config: checkpoint.model.config().clone(),
        vocab_path: checkpoint.vocab_path.clone(),
        params: checkpoint
            .model
            .params()
            .iter()
            .map(|(name, t)| {
                (
                    name.clone(),
                    ArrayFile {
                        shape: t.shape().to_vec(),
                        data: t.values().to_vec(),
                    },
                )
            })
            .collect(),
        meta: checkpoint.meta.clone(),
    };
    let json = serde_json::to_string(&file).expect("checkpoint serialization");
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, json)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let content = fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&content).map_err(|e| {
        SwdError::Format(format!("{}: invalid checkpoint: {e}", path.display()))
    })?;
    if file.format_version != 1 {
        return Err(SwdError::Format(format!(
            "{}: unsupported checkpoint format_version {}",
            path.display(),
            file.format_version
        )));
    }
    let mut arrays = BTreeMap::new();
    for (name, a) in file.params {
        if a.data.iter().any(|v| !v.is_finite()) {
            return Err(SwdError::Format(format!(
                "parameter array {name:?} contains non-finite values"
            )));
        }
        let tensor = Tensor::new(&a.shape, a.data).map_err(|e| {
            SwdError::Format(format!("parameter array {name:?}: {e}"))
        })?;
        arrays.insert(name, tensor);
    }
    let model = Model::from_parts(file.model_config, ParamSet::from_arrays(arrays))?;
    Ok(Checkpoint {
        model,
        vocab_path: file.vocab_path,
        meta: file.meta,
    })
}

/// Confirms a checkpoint was trained against the same vocabulary it is
/// now being used with: the file contents must match, not just the path.
pub fn check_vocab_compatibility(
    checkpoint: &Checkpoint,
    checkpoint_vocab: &Vocab,
    corpus_vocab: &Vocab,
    corpus_vocab_path: &str,
) -> Result<()> {
    if checkpoint_vocab != corpus_vocab {
        return Err(SwdError::Compatibility(format!(
            "checkpoint vocabulary {:?} does not match corpus vocabulary {:?}",
            checkpoint.vocab_path, corpus_vocab_path
        )));
    }
    if checkpoint.model.config().vocab_size != corpus_vocab.len() {
        return Err(SwdError::Compatibility(format!(
            "checkpoint was built for a vocabulary of {}, corpus vocabulary {:?} has {}",
            checkpoint.model.config().vocab_size,
            corpus_vocab_path,
            corpus_vocab.len()
        )));
    }
    Ok(())
}
