//! End-to-end tests of the command-line binary: exit codes, file
//! contracts, and the synth -> estimate-weights -> train -> generate ->
//! evaluate pipeline.

use std::fs;
use std::process::{Command, Output};

use swdsum::corpus::read_jsonl;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swdsum"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for sub in ["rouge", "estimate-weights", "synth", "train", "generate", "evaluate"] {
        assert!(text.contains(sub), "help does not mention {sub}: {text}");
    }
}

#[test]
fn missing_subcommand_is_usage_error() {
    let out = run(&[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["rouge", "--candidate", "a", "--reference", "b", "--bogus"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_input_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let absent = dir.path().join("absent.txt");
    let absent = absent.to_str().unwrap();
    let out = run(&["rouge", "--candidate", absent, "--reference", absent]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn rouge_identical_lines_score_hundred() {
    let dir = tempfile::tempdir().unwrap();
    let cand = dir.path().join("cand.txt");
    let refs = dir.path().join("ref.txt");
    fs::write(&cand, "甲乙丙丁\n天地人\n").unwrap();
    fs::write(&refs, "甲乙丙丁\n天地人\n").unwrap();
    let out = run(&[
        "rouge",
        "--candidate",
        cand.to_str().unwrap(),
        "--reference",
        refs.to_str().unwrap(),
        "--variant",
        "2",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mean = text.lines().last().unwrap();
    assert_eq!(mean, "mean\t100.0\t100.0\t100.0", "full output: {text}");
}

#[test]
fn rouge_line_count_mismatch_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cand = dir.path().join("cand.txt");
    let refs = dir.path().join("ref.txt");
    fs::write(&cand, "甲乙\n").unwrap();
    fs::write(&refs, "甲乙\n丙丁\n").unwrap();
    let out = run(&[
        "rouge",
        "--candidate",
        cand.to_str().unwrap(),
        "--reference",
        refs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("lines"), "stderr: {}", stderr(&out));
}

#[test]
fn invalid_synth_spec_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, "{\"vocab_size\": \"many\"}").unwrap();
    let out = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

/// Runs the whole pipeline in one temp directory. Kept as a single test
/// so the stages can hand real artifacts to each other.
#[test]
fn pipeline_synth_estimate_train_generate_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();

    let spec_path = base.join("spec.json");
    fs::write(
        &spec_path,
        concat!(
            "{\"vocab_size\": 16, \"pairs\": 12, \"sentences_per_doc\": 3,",
            " \"sentence_len\": 3, \"key_position\": \"uniform\",",
            " \"summary_transform\": \"copy\", \"noise_overlap\": 0.0, \"seed\": 7}"
        ),
    )
    .unwrap();
    let corpus_dir = base.join("corpus");
    let out = run(&[
        "synth",
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        corpus_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "synth stderr: {}", stderr(&out));
    let corpus_path = corpus_dir.join("corpus.jsonl");
    assert!(corpus_path.is_file());
    assert!(corpus_dir.join("keys.txt").is_file());
    let pairs = read_jsonl(&corpus_path).unwrap();
    assert_eq!(pairs.len(), 12);

    let weights_path = base.join("weights.jsonl");
    let out = run(&[
        "estimate-weights",
        "--corpus",
        corpus_path.to_str().unwrap(),
        "--out",
        weights_path.to_str().unwrap(),
        "--variant",
        "rouge-2-f",
    ]);
    assert_eq!(code(&out), 0, "estimate stderr: {}", stderr(&out));
    let weight_lines = fs::read_to_string(&weights_path).unwrap();
    assert_eq!(weight_lines.lines().count(), 12);

    let config_path = base.join("run.conf");
    fs::write(
        &config_path,
        concat!(
            "# tiny smoke-test run\n",
            "embed_dim = 8\n",
            "hidden_dim = 12\n",
            "position_dim = 4\n",
            "mlp_hidden = 8\n",
            "batch_size = 4\n",
            "epochs = 2\n",
            "learning_rate = 0.2\n",
            "seed = 7\n",
        ),
    )
    .unwrap();
    let train_dir = base.join("trained");
    let out = run(&[
        "train",
        "--config",
        config_path.to_str().unwrap(),
        "--corpus",
        corpus_path.to_str().unwrap(),
        "--weights",
        weights_path.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "--baseline",
        "rnn-context",
    ]);
    assert_eq!(code(&out), 0, "train stderr: {}", stderr(&out));
    let checkpoint_path = train_dir.join("checkpoint.json");
    let vocab_path = train_dir.join("vocab.txt");
    assert!(checkpoint_path.is_file());
    assert!(vocab_path.is_file());

    // 12 items at batch 4 over 2 epochs: 6 steps, all without a weight
    // loss because the baseline disables the predictor.
    let log = fs::read_to_string(train_dir.join("log.jsonl")).unwrap();
    let steps: Vec<serde_json::Value> =
        log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(steps.len(), 6, "log: {log}");
    for (i, stat) in steps.iter().enumerate() {
        assert_eq!(stat["step"].as_u64(), Some(i as u64));
        assert_eq!(stat["weight_ce"].as_f64(), Some(0.0), "step {i}: {stat}");
        assert!(stat["nll"].as_f64().unwrap().is_finite());
        assert!(stat["grad_norm"].as_f64().unwrap().is_finite());
    }

    let input_path = base.join("input.txt");
    fs::write(&input_path, format!("{}\n\n{}\n", pairs[0].text, pairs[1].text)).unwrap();
    let out = run(&[
        "generate",
        "--model",
        checkpoint_path.to_str().unwrap(),
        "--input",
        input_path.to_str().unwrap(),
        "--max-len",
        "6",
    ]);
    assert_eq!(code(&out), 0, "generate stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.split('\n').collect();
    assert_eq!(lines.len(), 4, "three input lines plus trailing newline: {text:?}");
    assert!(lines[1].is_empty(), "blank input line must stay blank");
    assert!(lines[3].is_empty());

    let out = run(&[
        "evaluate",
        "--model",
        checkpoint_path.to_str().unwrap(),
        "--corpus",
        corpus_path.to_str().unwrap(),
        "--vocab",
        vocab_path.to_str().unwrap(),
        "--max-len",
        "6",
    ]);
    assert_eq!(code(&out), 0, "evaluate stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.starts_with("model\tR-1\tR-2\tR-L"),
        "report header missing: {text}"
    );
    assert_eq!(text.lines().count(), 2, "one header plus one model row: {text}");

    // A vocabulary with any extra entry must be rejected, naming both
    // files so the operator can see which pair disagrees.
    let altered_path = base.join("altered_vocab.txt");
    let mut altered = fs::read_to_string(&vocab_path).unwrap();
    altered.push_str("zz\n");
    fs::write(&altered_path, altered).unwrap();
    let out = run(&[
        "evaluate",
        "--model",
        checkpoint_path.to_str().unwrap(),
        "--corpus",
        corpus_path.to_str().unwrap(),
        "--vocab",
        altered_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    let err = stderr(&out);
    assert!(
        err.contains(vocab_path.to_str().unwrap()) && err.contains("altered_vocab.txt"),
        "error must name both vocabulary files: {err}"
    );
}
