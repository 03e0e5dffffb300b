//! Command-line entry point. Exit codes: 0 success, 1 usage error,
//! 2 data/format error, 3 numerical divergence.

use std::cell::Cell;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use swdsum::config::{load_run_config, RunConfig};
use swdsum::corpus::{
    build_vocab, encode_document, encode_pair, read_jsonl, CorpusConfig, TrainItem, Vocab,
};
use swdsum::error::{Result, SwdError};
use swdsum::model::{Model, SwdMode};
use swdsum::rouge::{RougeScore, RougeVariant};
use swdsum::synth;
use swdsum::trainer::{
    check_vocab_compatibility, evaluate, load_checkpoint, render_report, save_checkpoint, train,
    Checkpoint, CheckpointMeta,
};
use swdsum::weights::{estimate_corpus_weights, read_weights, write_weights};

#[derive(Parser)]
#[command(
    name = "swdsum",
    about = "Abstractive summarization with sentence weight distributions",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score candidate summaries against references line by line
    Rouge {
        /// File with one candidate summary per line
        #[arg(long)]
        candidate: PathBuf,
        /// File with one reference summary per line
        #[arg(long)]
        reference: PathBuf,
        /// ROUGE family: 1, 2, or l
        #[arg(long, default_value = "1")]
        variant: String,
        /// Recall weight in the F-measure
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Estimate per-sentence gold weights for a corpus
    EstimateWeights {
        /// Corpus in JSON-lines format ({"text", "summary"})
        #[arg(long)]
        corpus: PathBuf,
        /// Output sidecar path (one JSON float array per line)
        #[arg(long)]
        out: PathBuf,
        /// Scoring rule, e.g. rouge-1-f or rouge-2-r
        #[arg(long, default_value = "rouge-1-f")]
        variant: String,
    },
    /// Generate a synthetic needle-in-haystack corpus
    Synth {
        /// Generator settings as a JSON file
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (corpus.jsonl + keys.txt)
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write checkpoints plus a step log
    Train {
        /// Run configuration (key = value lines)
        #[arg(long)]
        config: PathBuf,
        /// Training corpus in JSON-lines format
        #[arg(long)]
        corpus: PathBuf,
        /// Estimated-weight sidecar for the corpus
        #[arg(long)]
        weights: PathBuf,
        /// Output directory (checkpoint.json, vocab.txt, log.jsonl)
        #[arg(long)]
        out: PathBuf,
        /// Force one of the three reference systems
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
    },
    /// Decode one summary per input line with a trained model
    Generate {
        /// Checkpoint file
        #[arg(long)]
        model: PathBuf,
        /// File with one document per line
        #[arg(long)]
        input: PathBuf,
        /// Decoding budget in tokens
        #[arg(long, default_value_t = 150)]
        max_len: usize,
    },
    /// Decode a corpus and report mean ROUGE-1/2/L
    Evaluate {
        /// Checkpoint file
        #[arg(long)]
        model: PathBuf,
        /// Corpus with references, JSON-lines format
        #[arg(long)]
        corpus: PathBuf,
        /// Vocabulary the corpus was prepared with; must match the
        /// checkpoint's vocabulary
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Decoding budget in tokens
        #[arg(long, default_value_t = 150)]
        max_len: usize,
    },
}

/// The three reference systems, realized from one binary.
#[derive(Clone, Copy, Debug, ValueEnum)]
enum Baseline {
    /// Encoder-decoder without attention or weight prediction
    Rnn,
    /// Adds the attention mechanism
    RnnContext,
    /// Adds active sentence-weight prediction on top of attention
    Swd,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                ExitCode::SUCCESS
            } else {
                eprint!("{e}");
                ExitCode::from(1)
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                SwdError::Divergence(_) => 3,
                SwdError::Argument(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Rouge {
            candidate,
            reference,
            variant,
            beta,
        } => cmd_rouge(&candidate, &reference, &variant, beta),
        Command::EstimateWeights {
            corpus,
            out,
            variant,
        } => cmd_estimate_weights(&corpus, &out, &variant),
        Command::Synth { spec, out } => cmd_synth(&spec, &out),
        Command::Train {
            config,
            corpus,
            weights,
            out,
            baseline,
        } => cmd_train(&config, &corpus, &weights, &out, baseline),
        Command::Generate {
            model,
            input,
            max_len,
        } => cmd_generate(&model, &input, max_len),
        Command::Evaluate {
            model,
            corpus,
            vocab,
            max_len,
        } => cmd_evaluate(&model, &corpus, vocab.as_deref(), max_len),
    }
}

/// Characters of a line with runs of whitespace collapsed to single
/// spaces, matching corpus tokenization defaults.
fn char_tokens(line: &str) -> Vec<char> {
    line.split_whitespace().collect::<Vec<_>>().join(" ").chars().collect()
}

fn percent(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn cmd_rouge(candidate: &Path, reference: &Path, variant: &str, beta: f64) -> Result<()> {
    let mut chosen: RougeVariant = variant.parse()?;
    chosen.beta = beta;
    let cand_text = fs::read_to_string(candidate)?;
    let ref_text = fs::read_to_string(reference)?;
    let cands: Vec<&str> = cand_text.lines().collect();
    let refs: Vec<&str> = ref_text.lines().collect();
    if cands.len() != refs.len() {
        return Err(SwdError::Ingestion(format!(
            "candidate file has {} lines, reference file has {}",
            cands.len(),
            refs.len()
        )));
    }
    if cands.is_empty() {
        return Err(SwdError::Ingestion("no lines to score".into()));
    }
    println!("line\tP\tR\tF");
    let mut sum = RougeScore::ZERO;
    for (i, (c, r)) in cands.iter().zip(&refs).enumerate() {
        let score = chosen.score(&char_tokens(c), &char_tokens(r))?;
        sum.precision += score.precision;
        sum.recall += score.recall;
        sum.f += score.f;
        println!(
            "{}\t{}\t{}\t{}",
            i + 1,
            percent(score.precision),
            percent(score.recall),
            percent(score.f)
        );
    }
    let n = cands.len() as f64;
    println!(
        "mean\t{}\t{}\t{}",
        percent(sum.precision / n),
        percent(sum.recall / n),
        percent(sum.f / n)
    );
    Ok(())
}

fn cmd_estimate_weights(corpus: &Path, out: &Path, variant: &str) -> Result<()> {
    let chosen: RougeVariant = variant.parse()?;
    let raw = read_jsonl(corpus)?;
    let config = CorpusConfig::default();
    let vocab = build_vocab(&raw, &config)?;
    let pairs = raw
        .iter()
        .map(|p| encode_pair(p, &vocab, &config))
        .collect::<Result<Vec<_>>>()?;
    let weights = estimate_corpus_weights(&pairs, &chosen)?;
    write_weights(out, &weights)?;
    println!("{} weight vectors -> {}", weights.len(), out.display());
    Ok(())
}

fn cmd_synth(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = synth::read_spec(spec_path)?;
    let corpus = synth::generate(&spec)?;
    fs::create_dir_all(out)?;
    synth::write_corpus(&corpus, out)?;
    println!("{} pairs -> {}", corpus.pairs.len(), out.display());
    Ok(())
}

fn apply_baseline(run: &mut RunConfig, baseline: Baseline) {
    match baseline {
        Baseline::Rnn => {
            run.attention = false;
            run.swd = SwdMode::Off;
            run.lambda = 0.0;
        }
        Baseline::RnnContext => {
            run.attention = true;
            run.swd = SwdMode::Off;
            run.lambda = 0.0;
        }
        Baseline::Swd => {
            run.attention = true;
            run.swd = SwdMode::Active;
        }
    }
}

fn cmd_train(
    config: &Path,
    corpus: &Path,
    weights: &Path,
    out: &Path,
    baseline: Option<Baseline>,
) -> Result<()> {
    let mut run = load_run_config(config)?;
    if let Some(b) = baseline {
        apply_baseline(&mut run, b);
    }
    let corpus_config = run.to_corpus_config();
    let raw = read_jsonl(corpus)?;
    let vocab = build_vocab(&raw, &corpus_config)?;
    let pairs = raw
        .iter()
        .map(|p| encode_pair(p, &vocab, &corpus_config))
        .collect::<Result<Vec<_>>>()?;
    let gold = read_weights(weights)?;
    if gold.len() != pairs.len() {
        return Err(SwdError::Ingestion(format!(
            "{} weight vectors for {} corpus pairs",
            gold.len(),
            pairs.len()
        )));
    }
    let items: Vec<TrainItem> = pairs
        .into_iter()
        .zip(gold)
        .enumerate()
        .map(|(i, (pair, w))| {
            if w.len() != pair.doc.num_sentences() {
                return Err(SwdError::Ingestion(format!(
                    "pair {}: {} weights for {} sentences",
                    i + 1,
                    w.len(),
                    pair.doc.num_sentences()
                )));
            }
            Ok(TrainItem {
                doc: pair.doc,
                summary: pair.summary,
                weights: w,
            })
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(out)?;
    let vocab_path = out.join("vocab.txt");
    vocab.save(&vocab_path)?;
    let mut model = Model::new(run.to_model_config(vocab.len()))?;
    let train_config = run.to_train_config();

    let checkpoint_path = out.join("checkpoint.json");
    let vocab_path_str = vocab_path.to_string_lossy().into_owned();
    let mut log_file = fs::File::create(out.join("log.jsonl"))?;
    let steps_done = Cell::new(0u64);
    let mut history: Vec<f64> = Vec::new();

    let trace = train(
        &mut model,
        &items,
        &train_config,
        |stat| {
            let line = serde_json::to_string(stat).expect("stat serialization");
            writeln!(log_file, "{line}")?;
            steps_done.set(stat.step + 1);
            Ok(())
        },
        |snapshot, _epoch, mean_loss| {
            history.push(mean_loss);
            let ckpt = Checkpoint {
                model: snapshot.clone(),
                vocab_path: vocab_path_str.clone(),
                meta: CheckpointMeta {
                    step: steps_done.get(),
                    seed: train_config.seed,
                    loss_history: history.clone(),
                },
            };
            save_checkpoint(&ckpt, &checkpoint_path)
        },
    )?;
    println!(
        "trained {} steps over {} epochs -> {}",
        trace.len(),
        train_config.epochs,
        out.display()
    );
    Ok(())
}

fn cmd_generate(model_path: &Path, input: &Path, max_len: usize) -> Result<()> {
    let checkpoint = load_checkpoint(model_path)?;
    let vocab = Vocab::load(Path::new(&checkpoint.vocab_path))?;
    if vocab.len() != checkpoint.model.config().vocab_size {
        return Err(SwdError::Compatibility(format!(
            "checkpoint expects a vocabulary of {}, {:?} has {}",
            checkpoint.model.config().vocab_size,
            checkpoint.vocab_path,
            vocab.len()
        )));
    }
    let config = CorpusConfig::default();
    let text = fs::read_to_string(input)?;
    for line in text.lines() {
        if line.trim().is_empty() {
            println!();
            continue;
        }
        let doc = encode_document(line, &vocab, &config)?;
        let ids = checkpoint.model.greedy_decode(&doc, max_len)?;
        println!("{}", vocab.decode(&ids, ""));
    }
    Ok(())
}

fn cmd_evaluate(
    model_path: &Path,
    corpus: &Path,
    vocab_flag: Option<&Path>,
    max_len: usize,
) -> Result<()> {
    let checkpoint = load_checkpoint(model_path)?;
    let checkpoint_vocab = Vocab::load(Path::new(&checkpoint.vocab_path))?;
    if let Some(given) = vocab_flag {
        let corpus_vocab = Vocab::load(given)?;
        check_vocab_compatibility(
            &checkpoint,
            &checkpoint_vocab,
            &corpus_vocab,
            &given.to_string_lossy(),
        )?;
    }
    if checkpoint_vocab.len() != checkpoint.model.config().vocab_size {
        return Err(SwdError::Compatibility(format!(
            "checkpoint expects a vocabulary of {}, {:?} has {}",
            checkpoint.model.config().vocab_size,
            checkpoint.vocab_path,
            checkpoint_vocab.len()
        )));
    }
    let config = CorpusConfig::default();
    let raw = read_jsonl(corpus)?;
    let pairs = raw
        .iter()
        .map(|p| encode_pair(p, &checkpoint_vocab, &config))
        .collect::<Result<Vec<_>>>()?;
    let row = evaluate(&checkpoint.model, &pairs, max_len, 1.0)?;
    print!("{}", render_report(&[row]));
    Ok(())
}
