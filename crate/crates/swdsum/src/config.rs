//! Run configuration: a UTF-8 `key = value` file with `#` comments,
//! validated against a fixed schema. Every knob has a default, so an
//! empty file is a valid configuration.

use std::fs;
use std::path::Path;

use crate::corpus::{CorpusConfig, TokenMode};
use crate::error::{Result, SwdError};
use crate::model::{ModelConfig, SwdMode};
use crate::rouge::RougeVariant;
use crate::trainer::{TrainConfig, WeightLossForm};

/// Which dimension preset to start from; individual dimension keys
/// override it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

/// Merged settings covering the model, the optimizer, and corpus
/// ingestion.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub embed_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub position_dim: Option<usize>,
    pub mlp_hidden: Option<usize>,
    pub attention: bool,
    pub swd: SwdMode,
    pub lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub max_sentences: usize,
    pub max_sentence_len: usize,
    pub min_count: usize,
    pub token_mode: TokenMode,
    pub weight_loss_form: WeightLossForm,
    pub rouge_variant: RougeVariant,
    pub max_decode_len: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            preset: Preset::Desk,
            embed_dim: None,
            hidden_dim: None,
            position_dim: None,
            mlp_hidden: None,
            attention: true,
            swd: SwdMode::Active,
            lambda: 0.01,
            batch_size: 32,
            epochs: 10,
            learning_rate: 0.1,
            clip_norm: 5.0,
            seed: 42,
            max_sentences: 20,
            max_sentence_len: 150,
            min_count: 1,
            token_mode: TokenMode::Char,
            weight_loss_form: WeightLossForm::CrossEntropy,
            rouge_variant: RougeVariant::default(),
            max_decode_len: 150,
        }
    }
}

impl RunConfig {
    pub fn to_model_config(&self, vocab_size: usize) -> ModelConfig {
        let mut cfg = match self.preset {
            Preset::Desk => ModelConfig::desk(vocab_size),
            Preset::Paper => ModelConfig::paper_scale(vocab_size),
        };
        if let Some(v) = self.embed_dim {
            cfg.embed_dim = v;
        }
        if let Some(v) = self.hidden_dim {
            cfg.hidden_dim = v;
        }
        if let Some(v) = self.position_dim {
            cfg.position_dim = v;
        }
        if let Some(v) = self.mlp_hidden {
            cfg.mlp_hidden = v;
        }
        cfg.attention = self.attention;
        cfg.swd_mode = self.swd;
        cfg.lambda = self.lambda;
        cfg.max_sentences = self.max_sentences;
        cfg.seed = self.seed;
        cfg
    }

    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            lambda: self.lambda,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            clip_norm: self.clip_norm,
            seed: self.seed,
            weight_loss_form: self.weight_loss_form,
        }
    }

    pub fn to_corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            max_sentences: self.max_sentences,
            max_sentence_len: self.max_sentence_len,
            min_count: self.min_count,
            mode: self.token_mode,
            ..CorpusConfig::default()
        }
    }
}

/// Parses configuration text. Later assignments to the same key win.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            SwdError::Config(format!("line {lineno}: expected `key = value`, got {raw:?}"))
        })?;
        let key = key.trim();
        let value = value.trim();
        apply(&mut cfg, key, value)
            .map_err(|e| SwdError::Config(format!("line {lineno}: {e}")))?;
    }
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_run_config(&text).map_err(|e| match e {
        SwdError::Config(msg) => SwdError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn apply(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "preset" => {
            cfg.preset = match value {
                "desk" => Preset::Desk,
                "paper" => Preset::Paper,
                other => {
                    return Err(SwdError::Config(format!(
                        "preset must be `desk` or `paper`, got {other:?}"
                    )))
                }
            }
        }
        "embed_dim" => cfg.embed_dim = Some(parse_num(key, value)?),
        "hidden_dim" => cfg.hidden_dim = Some(parse_num(key, value)?),
        "position_dim" => cfg.position_dim = Some(parse_num(key, value)?),
        "mlp_hidden" => cfg.mlp_hidden = Some(parse_num(key, value)?),
        "attention" => cfg.attention = parse_bool(key, value)?,
        "swd" => {
            cfg.swd = match value {
                "off" => SwdMode::Off,
                "detached" => SwdMode::Detached,
                "active" => SwdMode::Active,
                other => {
                    return Err(SwdError::Config(format!(
                        "swd must be `off`, `detached`, or `active`, got {other:?}"
                    )))
                }
            }
        }
        "lambda" => cfg.lambda = parse_num(key, value)?,
        "batch_size" => cfg.batch_size = parse_num(key, value)?,
        "epochs" => cfg.epochs = parse_num(key, value)?,
        "learning_rate" => cfg.learning_rate = parse_num(key, value)?,
        "clip_norm" => cfg.clip_norm = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "max_sentences" => cfg.max_sentences = parse_num(key, value)?,
        "max_sentence_len" => cfg.max_sentence_len = parse_num(key, value)?,
        "min_count" => cfg.min_count = parse_num(key, value)?,
        "token_mode" => {
            cfg.token_mode = match value {
                "char" => TokenMode::Char,
                "word" => TokenMode::Word,
                other => {
                    return Err(SwdError::Config(format!(
                        "token_mode must be `char` or `word`, got {other:?}"
                    )))
                }
            }
        }
        "weight_loss_form" => {
            cfg.weight_loss_form = match value {
                "crossentropy" => WeightLossForm::CrossEntropy,
                "literal" => WeightLossForm::Literal,
                other => {
                    return Err(SwdError::Config(format!(
                        "weight_loss_form must be `crossentropy` or `literal`, got {other:?}"
                    )))
                }
            }
        }
        "rouge_variant" => {
            cfg.rouge_variant = value
                .parse::<RougeVariant>()
                .map_err(|e| SwdError::Config(format!("rouge_variant: {e}")))?
        }
        "max_decode_len" => cfg.max_decode_len = parse_num(key, value)?,
        other => {
            return Err(SwdError::Config(format!("unknown configuration key {other:?}")))
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| {
        SwdError::Config(format!(
            "{key} has invalid value {value:?} (expected {})",
            std::any::type_name::<T>()
        ))
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(SwdError::Config(format!(
            "{key} must be `true` or `false`, got {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_defaults() {
        let cfg = parse_run_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn full_file_with_comments() {
        let text = "\
# optimizer
learning_rate = 0.5
batch_size = 8   # small batches
epochs = 3

# model
preset = paper
attention = false
swd = detached
lambda = 0.1
seed = 7
weight_loss_form = literal
rouge_variant = rouge-2-r
token_mode = word
";
        let cfg = parse_run_config(text).unwrap();
        assert_eq!(cfg.learning_rate, 0.5);
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.preset, Preset::Paper);
        assert!(!cfg.attention);
        assert_eq!(cfg.swd, SwdMode::Detached);
        assert_eq!(cfg.lambda, 0.1);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.weight_loss_form, WeightLossForm::Literal);
        assert_eq!(cfg.token_mode, TokenMode::Word);
        assert_eq!(cfg.rouge_variant.to_string(), "rouge-2-r");
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        match parse_run_config("momentum = 0.9") {
            Err(SwdError::Config(msg)) => assert!(msg.contains("momentum"), "message: {msg}"),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn bad_value_names_the_key_and_line() {
        match parse_run_config("\n\nbatch_size = many") {
            Err(SwdError::Config(msg)) => {
                assert!(msg.contains("line 3"), "message: {msg}");
                assert!(msg.contains("batch_size"), "message: {msg}");
            }
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_equals_is_rejected() {
        assert!(matches!(
            parse_run_config("just some words"),
            Err(SwdError::Config(_))
        ));
    }

    #[test]
    fn preset_sets_dims_and_overrides_win() {
        let cfg = parse_run_config("preset = paper\nhidden_dim = 128").unwrap();
        let mc = cfg.to_model_config(100);
        assert_eq!(mc.embed_dim, 400);
        assert_eq!(mc.hidden_dim, 128);
        assert_eq!(mc.vocab_size, 100);
    }

    #[test]
    fn derived_configs_carry_shared_settings() {
        let cfg = parse_run_config("seed = 9\nlambda = 0.2\nmax_sentences = 5").unwrap();
        let mc = cfg.to_model_config(50);
        let tc = cfg.to_train_config();
        let cc = cfg.to_corpus_config();
        assert_eq!(mc.seed, 9);
        assert_eq!(tc.seed, 9);
        assert_eq!(mc.lambda, 0.2);
        assert_eq!(tc.lambda, 0.2);
        assert_eq!(mc.max_sentences, 5);
        assert_eq!(cc.max_sentences, 5);
    }
}
