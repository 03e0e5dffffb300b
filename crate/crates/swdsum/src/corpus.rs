//! Corpus ingestion: sentence splitting, character-level vocabulary,
//! document encoding with word↔sentence index maps, and padded batches.
//!
//! Text is normalized by collapsing whitespace runs to a single space and
//! trimming each sentence; sentence delimiters stay attached to the
//! preceding sentence. Documents are truncated to `max_sentences`
//! sentences of at most `max_sentence_len` tokens each.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Result, SwdError};
use crate::weights::WeightDistribution;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;

const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// One raw (document, summary) pair; both sides nonempty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawPair {
    pub text: String,
    pub summary: String,
}

/// Tokenization granularity. Characters are the default; whitespace words
/// suit Latin-script or synthetic corpora.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenMode {
    Char,
    Word,
}

/// Splitting, truncation, and vocabulary-construction settings.
#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub max_sentences: usize,
    pub max_sentence_len: usize,
    pub delimiters: Vec<char>,
    pub min_count: usize,
    pub mode: TokenMode,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            max_sentences: 20,
            max_sentence_len: 150,
            delimiters: vec!['。', '！', '？', '；', '.', '!', '?', ';'],
            min_count: 1,
            mode: TokenMode::Char,
        }
    }
}

/// Token table with the four reserved entries at ids 0..=3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
}

impl Vocab {
    /// Builds a table from non-reserved tokens in id order; the four
    /// reserved entries are prepended automatically.
    pub fn from_tokens(tokens: Vec<String>) -> Vocab {
        let mut id_to_token: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        id_to_token.extend(tokens);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab {
            id_to_token,
            token_to_id,
        }
    }

    /// Total size V, including the reserved ids.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved entries are always present
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(|s| s.as_str())
    }

    /// Joins the tokens of `ids`, skipping reserved ids. `joiner` should be
    /// empty for character vocabularies and a space for word vocabularies.
    pub fn decode(&self, ids: &[u32], joiner: &str) -> String {
        let mut out = String::new();
        for &id in ids {
            if id < 4 {
                continue;
            }
            if let Some(tok) = self.token(id) {
                if !out.is_empty() {
                    out.push_str(joiner);
                }
                out.push_str(tok);
            }
        }
        out
    }

    /// One token per line; the first four lines are the reserved literals,
    /// so a token's id is its zero-based line number.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for tok in &self.id_to_token {
            writeln!(out, "{tok}").expect("string write");
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocab> {
        let content = fs::read_to_string(path)?;
        let lines: Vec<&str> = content.lines().collect();
        if lines.len() < RESERVED.len() {
            return Err(SwdError::Format(format!(
                "vocabulary file {} has only {} lines; expected at least the 4 reserved entries",
                path.display(),
                lines.len()
            )));
        }
        for (i, expected) in RESERVED.iter().enumerate() {
            if lines[i] != *expected {
                return Err(SwdError::Format(format!(
                    "vocabulary file {}: line {} is {:?}, expected the reserved literal {:?}",
                    path.display(),
                    i + 1,
                    lines[i],
                    expected
                )));
            }
        }
        Ok(Vocab::from_tokens(
            lines[RESERVED.len()..].iter().map(|s| s.to_string()).collect(),
        ))
    }
}

/// An encoded document: sentences of token ids plus the index maps tying
/// flat word positions to sentences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    sentences: Vec<Vec<u32>>,
    word2sen: Vec<usize>,
    spans: Vec<(usize, usize)>, // (start, len) of each sentence in flat order
}

impl Document {
    /// Builds a document from nonempty sentence token lists.
    pub fn from_sentences(sentences: Vec<Vec<u32>>) -> Result<Document> {
        if sentences.is_empty() || sentences.iter().any(|s| s.is_empty()) {
            return Err(SwdError::Ingestion(
                "document must have at least one nonempty sentence".into(),
            ));
        }
        let mut word2sen = Vec::new();
        let mut spans = Vec::new();
        let mut start = 0;
        for (j, s) in sentences.iter().enumerate() {
            spans.push((start, s.len()));
            word2sen.extend(std::iter::repeat_n(j, s.len()));
            start += s.len();
        }
        Ok(Document {
            sentences,
            word2sen,
            spans,
        })
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn total_words(&self) -> usize {
        self.word2sen.len()
    }

    pub fn sentences(&self) -> &[Vec<u32>] {
        &self.sentences
    }

    /// All token ids in reading order.
    pub fn flat_tokens(&self) -> Vec<u32> {
        self.sentences.iter().flatten().copied().collect()
    }

    /// Flat word indexes belonging to sentence `j`.
    pub fn sen2word(&self, j: usize) -> std::ops::Range<usize> {
        let (start, len) = self.spans[j];
        start..start + len
    }

    /// Sentence index of flat word `i`.
    pub fn word2sen(&self, i: usize) -> usize {
        self.word2sen[i]
    }

    pub fn word2sen_map(&self) -> &[usize] {
        &self.word2sen
    }
}

/// A document/summary pair encoded against one vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedPair {
    pub doc: Document,
    pub summary: Vec<u32>,
}

/// An encoded pair plus its estimated sentence weights, ready to batch.
#[derive(Clone, Debug)]
pub struct TrainItem {
    pub doc: Document,
    pub summary: Vec<u32>,
    pub weights: WeightDistribution,
}

/// A minibatch with per-batch padding. `src`/`tgt` are B equal-width rows;
/// masks hold 1.0 exactly where the token is not PAD. Targets are framed
/// as BOS, summary, EOS. Sentence structure and weights stay per item.
#[derive(Clone, Debug)]
pub struct Batch {
    pub src: Vec<Vec<u32>>,
    pub src_mask: Vec<Vec<f64>>,
    pub tgt: Vec<Vec<u32>>,
    pub tgt_mask: Vec<Vec<f64>>,
    pub docs: Vec<Document>,
    pub weights: Vec<WeightDistribution>,
}

impl Batch {
    pub fn size(&self) -> usize {
        self.src.len()
    }
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for c in s.trim().chars() {
        if c.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws && !out.is_empty() {
                out.push(' ');
            }
            in_ws = false;
            out.push(c);
        }
    }
    out
}

/// Splits `text` into cleaned sentences. A delimiter character closes the
/// sentence and stays attached; a newline closes the sentence and is
/// dropped with the rest of the surrounding whitespace. Empty sentences
/// are discarded and at most `max_sentences` are kept.
pub fn split_sentences(text: &str, config: &CorpusConfig) -> Result<Vec<String>> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, sentences: &mut Vec<String>| {
        let cleaned = collapse_whitespace(current);
        if !cleaned.is_empty() {
            sentences.push(cleaned);
        }
        current.clear();
    };
    for c in text.chars() {
        if c == '\n' {
            flush(&mut current, &mut sentences);
        } else {
            current.push(c);
            if config.delimiters.contains(&c) {
                flush(&mut current, &mut sentences);
            }
        }
    }
    flush(&mut current, &mut sentences);
    if sentences.is_empty() {
        return Err(SwdError::Ingestion(
            "text is empty after whitespace cleaning".into(),
        ));
    }
    sentences.truncate(config.max_sentences);
    Ok(sentences)
}

fn sentence_tokens(sentence: &str, mode: TokenMode) -> Vec<String> {
    match mode {
        TokenMode::Char => sentence.chars().map(String::from).collect(),
        TokenMode::Word => sentence.split_whitespace().map(String::from).collect(),
    }
}

/// Encodes one cleaned sentence, mapping unknown tokens to UNK and
/// truncating to `max_sentence_len`.
pub fn tokenize(sentence: &str, vocab: &Vocab, config: &CorpusConfig) -> Vec<u32> {
    sentence_tokens(&collapse_whitespace(sentence), config.mode)
        .iter()
        .take(config.max_sentence_len)
        .map(|t| vocab.id_or_unk(t))
        .collect()
}

/// Builds the vocabulary over both sides of every pair: tokens with
/// frequency ≥ `min_count`, ordered by frequency descending then token
/// ascending, after the four reserved ids.
pub fn build_vocab(pairs: &[RawPair], config: &CorpusConfig) -> Result<Vocab> {
    if pairs.is_empty() {
        return Err(SwdError::Ingestion("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for pair in pairs {
        for text in [&pair.text, &pair.summary] {
            for sentence in split_sentences(text, config)? {
                for tok in sentence_tokens(&sentence, config.mode) {
                    *counts.entry(tok).or_insert(0) += 1;
                }
            }
        }
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .collect();
    entries.sort_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));
    Ok(Vocab::from_tokens(entries.into_iter().map(|(t, _)| t).collect()))
}

/// Splits, tokenizes, and indexes a source document.
pub fn encode_document(text: &str, vocab: &Vocab, config: &CorpusConfig) -> Result<Document> {
    let sentences = split_sentences(text, config)?;
    let encoded: Vec<Vec<u32>> = sentences
        .iter()
        .map(|s| tokenize(s, vocab, config))
        .filter(|ids| !ids.is_empty())
        .collect();
    Document::from_sentences(encoded)
}

/// Encodes a summary as one flat token sequence (no sentence structure),
/// truncated to `max_sentence_len`.
pub fn encode_summary(text: &str, vocab: &Vocab, config: &CorpusConfig) -> Result<Vec<u32>> {
    let cleaned = collapse_whitespace(text);
    if cleaned.is_empty() {
        return Err(SwdError::Ingestion("summary is empty after whitespace cleaning".into()));
    }
    Ok(sentence_tokens(&cleaned, config.mode)
        .iter()
        .take(config.max_sentence_len)
        .map(|t| vocab.id_or_unk(t))
        .collect())
}

pub fn encode_pair(pair: &RawPair, vocab: &Vocab, config: &CorpusConfig) -> Result<EncodedPair> {
    Ok(EncodedPair {
        doc: encode_document(&pair.text, vocab, config)?,
        summary: encode_summary(&pair.summary, vocab, config)?,
    })
}

/// Shuffles items deterministically by `seed` and groups them into padded
/// batches; the final batch may be short.
pub fn make_batches(items: &[TrainItem], batch_size: usize, seed: u64) -> Result<Vec<Batch>> {
    if batch_size < 1 {
        return Err(SwdError::Argument("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut batches = Vec::new();
    for chunk in order.chunks(batch_size) {
        let members: Vec<&TrainItem> = chunk.iter().map(|&i| &items[i]).collect();
        let src_width = members
            .iter()
            .map(|it| it.doc.total_words())
            .max()
            .unwrap_or(0);
        let tgt_width = members
            .iter()
            .map(|it| it.summary.len() + 2) // BOS + summary + EOS
            .max()
            .unwrap_or(0);
        let mut batch = Batch {
            src: Vec::new(),
            src_mask: Vec::new(),
            tgt: Vec::new(),
            tgt_mask: Vec::new(),
            docs: Vec::new(),
            weights: Vec::new(),
        };
        for it in members {
            let mut src = it.doc.flat_tokens();
            let real = src.len();
            src.resize(src_width, PAD_ID);
            let mut src_mask = vec![1.0; real];
            src_mask.resize(src_width, 0.0);

            let mut tgt = Vec::with_capacity(tgt_width);
            tgt.push(BOS_ID);
            tgt.extend_from_slice(&it.summary);
            tgt.push(EOS_ID);
            let real = tgt.len();
            tgt.resize(tgt_width, PAD_ID);
            let mut tgt_mask = vec![1.0; real];
            tgt_mask.resize(tgt_width, 0.0);

            batch.src.push(src);
            batch.src_mask.push(src_mask);
            batch.tgt.push(tgt);
            batch.tgt_mask.push(tgt_mask);
            batch.docs.push(it.doc.clone());
            batch.weights.push(it.weights.clone());
        }
        batches.push(batch);
    }
    Ok(batches)
}

#[derive(Deserialize)]
struct PairLine {
    text: String,
    summary: String,
}

/// Reads a JSON-lines corpus: one object per line with string fields
/// `text` and `summary` (extra fields are ignored).
pub fn read_jsonl(path: &Path) -> Result<Vec<RawPair>> {
    let content = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PairLine = serde_json::from_str(line).map_err(|e| {
            SwdError::Format(format!("{}:{}: invalid corpus line: {e}", path.display(), i + 1))
        })?;
        push_pair(&mut pairs, parsed.text, parsed.summary, path, i + 1)?;
    }
    if pairs.is_empty() {
        return Err(SwdError::Ingestion(format!("{}: corpus has no pairs", path.display())));
    }
    Ok(pairs)
}

/// Reads a tab-separated corpus: `summary TAB text` per line.
pub fn read_tsv(path: &Path) -> Result<Vec<RawPair>> {
    let content = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (summary, text) = line.split_once('\t').ok_or_else(|| {
            SwdError::Format(format!(
                "{}:{}: expected summary TAB text",
                path.display(),
                i + 1
            ))
        })?;
        push_pair(&mut pairs, text.to_string(), summary.to_string(), path, i + 1)?;
    }
    if pairs.is_empty() {
        return Err(SwdError::Ingestion(format!("{}: corpus has no pairs", path.display())));
    }
    Ok(pairs)
}

fn push_pair(
    pairs: &mut Vec<RawPair>,
    text: String,
    summary: String,
    path: &Path,
    line: usize,
) -> Result<()> {
    if text.trim().is_empty() || summary.trim().is_empty() {
        return Err(SwdError::Ingestion(format!(
            "{}:{}: text and summary must both be nonempty",
            path.display(),
            line
        )));
    }
    pairs.push(RawPair { text, summary });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> CorpusConfig {
        CorpusConfig::default()
    }

    #[test]
    fn splits_on_cjk_delimiters() {
        let out = split_sentences("A。B！C", &cfg()).unwrap();
        assert_eq!(out, vec!["A。", "B！", "C"]);
    }

    #[test]
    fn no_delimiter_is_single_sentence() {
        let out = split_sentences("no delimiter", &cfg()).unwrap();
        assert_eq!(out, vec!["no delimiter"]);
    }

    #[test]
    fn keeps_first_twenty_sentences() {
        let text: String = (0..25).map(|i| format!("s{i}.")).collect();
        let out = split_sentences(&text, &cfg()).unwrap();
        assert_eq!(out.len(), 20);
        assert_eq!(out[0], "s0.");
        assert_eq!(out[19], "s19.");
    }

    #[test]
    fn newline_splits_without_being_kept() {
        let out = split_sentences("first\nsecond", &cfg()).unwrap();
        assert_eq!(out, vec!["first", "second"]);
    }

    #[test]
    fn whitespace_only_text_is_ingestion_error() {
        assert!(matches!(
            split_sentences("  \n \t ", &cfg()),
            Err(SwdError::Ingestion(_))
        ));
    }

    fn tiny_vocab() -> Vocab {
        // a=4, b=5 per the frequency rule on corpus "aab"/"ab".
        build_vocab(
            &[RawPair {
                text: "aab".into(),
                summary: "ab".into(),
            }],
            &cfg(),
        )
        .unwrap()
    }

    #[test]
    fn vocab_orders_by_frequency_then_codepoint() {
        let v = tiny_vocab();
        assert_eq!(v.id("a"), Some(4));
        assert_eq!(v.id("b"), Some(5));
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn min_count_filters_rare_tokens() {
        let mut config = cfg();
        config.min_count = 3;
        let v = build_vocab(
            &[RawPair {
                text: "aab".into(),
                summary: "ab".into(),
            }],
            &config,
        )
        .unwrap();
        assert_eq!(v.id("a"), Some(4));
        assert_eq!(v.id("b"), None);
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn empty_corpus_is_ingestion_error() {
        assert!(matches!(
            build_vocab(&[], &cfg()),
            Err(SwdError::Ingestion(_))
        ));
    }

    #[test]
    fn tokenize_maps_and_falls_back_to_unk() {
        let v = tiny_vocab();
        assert_eq!(tokenize("ab", &v, &cfg()), vec![4, 5]);
        assert_eq!(tokenize("az", &v, &cfg()), vec![4, UNK_ID]);
    }

    #[test]
    fn tokenize_truncates_to_max_sentence_len() {
        let v = tiny_vocab();
        let long = "a".repeat(200);
        assert_eq!(tokenize(&long, &v, &cfg()).len(), 150);
    }

    #[test]
    fn document_index_maps_partition_flat_words() {
        let doc = Document::from_sentences(vec![vec![4, 5, 4], vec![5, 4]]).unwrap();
        assert_eq!(doc.sen2word(0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(doc.sen2word(1).collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(doc.word2sen(3), 1);
        assert_eq!(doc.total_words(), 5);

        // partition property both ways
        for i in 0..doc.total_words() {
            let j = doc.word2sen(i);
            assert!(doc.sen2word(j).contains(&i));
        }
        let all: Vec<usize> = (0..doc.num_sentences()).flat_map(|j| doc.sen2word(j)).collect();
        assert_eq!(all, (0..doc.total_words()).collect::<Vec<_>>());
    }

    #[test]
    fn single_sentence_document_maps_to_zero() {
        let doc = Document::from_sentences(vec![vec![4, 4]]).unwrap();
        assert!(doc.word2sen_map().iter().all(|&j| j == 0));
    }

    #[test]
    fn corpus_limits_hold_for_oversized_documents() {
        let v = tiny_vocab();
        let text: String = (0..25)
            .map(|_| format!("{}.", "a".repeat(200)))
            .collect::<Vec<_>>()
            .join("");
        let doc = encode_document(&text, &v, &cfg()).unwrap();
        assert_eq!(doc.num_sentences(), 20);
        assert!(doc.sentences().iter().all(|s| s.len() <= 150));
    }

    #[test]
    fn decode_round_trips_covered_text() {
        let v = tiny_vocab();
        let ids = tokenize("abba", &v, &cfg());
        assert_eq!(v.decode(&ids, ""), "abba");
    }

    #[test]
    fn vocab_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = tiny_vocab();
        v.save(&path).unwrap();
        let loaded = Vocab::load(&path).unwrap();
        assert_eq!(v, loaded);

        let content = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = content.lines().collect();
        assert_eq!(&lines[..4], &["<pad>", "<unk>", "<bos>", "<eos>"]);
        assert_eq!(lines[4], "a");
    }

    #[test]
    fn vocab_file_with_wrong_reserved_lines_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        fs::write(&path, "<pad>\n<unk>\n<eos>\n<bos>\na\n").unwrap();
        assert!(matches!(Vocab::load(&path), Err(SwdError::Format(_))));
    }

    fn item(doc_sents: Vec<Vec<u32>>, summary: Vec<u32>) -> TrainItem {
        let n = doc_sents.len();
        TrainItem {
            doc: Document::from_sentences(doc_sents).unwrap(),
            summary,
            weights: WeightDistribution::uniform(n),
        }
    }

    #[test]
    fn batch_sizes_partition_items() {
        let items: Vec<TrainItem> = (0..5).map(|_| item(vec![vec![4]], vec![4])).collect();
        let batches = make_batches(&items, 2, 7).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Batch::size).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
    }

    #[test]
    fn batching_is_deterministic_and_a_permutation() {
        let items: Vec<TrainItem> = (0..7)
            .map(|i| item(vec![vec![4 + i]], vec![4 + i]))
            .collect();
        let a = make_batches(&items, 3, 42).unwrap();
        let b = make_batches(&items, 3, 42).unwrap();
        let flat = |bs: &[Batch]| -> Vec<Vec<u32>> {
            bs.iter().flat_map(|b| b.src.clone()).collect()
        };
        assert_eq!(flat(&a), flat(&b));

        let mut seen: Vec<u32> = flat(&a).iter().map(|row| row[0]).collect();
        seen.sort_unstable();
        assert_eq!(seen, (4..11).collect::<Vec<u32>>());
    }

    #[test]
    fn padding_and_masks_are_consistent() {
        let items = vec![
            item(vec![vec![4, 5, 4]], vec![4]),
            item(vec![vec![5, 4, 5, 4, 5]], vec![4, 5]),
        ];
        let batches = make_batches(&items, 2, 0).unwrap();
        let b = &batches[0];
        for row in &b.src {
            assert_eq!(row.len(), 5);
        }
        for (row, mask) in b.src.iter().zip(&b.src_mask) {
            for (tok, m) in row.iter().zip(mask) {
                assert_eq!(*m == 1.0, *tok != PAD_ID);
                assert!(*m == 0.0 || *m == 1.0);
            }
        }
        for (row, mask) in b.tgt.iter().zip(&b.tgt_mask) {
            assert_eq!(row[0], BOS_ID);
            let real = mask.iter().filter(|m| **m == 1.0).count();
            assert_eq!(row[real - 1], EOS_ID);
            for (tok, m) in row.iter().zip(mask) {
                assert_eq!(*m == 1.0, *tok != PAD_ID);
            }
        }
    }

    #[test]
    fn jsonl_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        fs::write(
            &path,
            "{\"text\":\"ab。cd\",\"summary\":\"ab\"}\n{\"text\":\"xy\",\"summary\":\"x\",\"extra\":1}\n",
        )
        .unwrap();
        let pairs = read_jsonl(&path).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].text, "ab。cd");
        assert_eq!(pairs[1].summary, "x");

        fs::write(&path, "{\"text\":\"ab\"}\n").unwrap();
        assert!(matches!(read_jsonl(&path), Err(SwdError::Format(_))));

        fs::write(&path, "{\"text\":\" \",\"summary\":\"x\"}\n").unwrap();
        assert!(matches!(read_jsonl(&path), Err(SwdError::Ingestion(_))));
    }

    #[test]
    fn tsv_parses_summary_then_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.tsv");
        fs::write(&path, "sum\tlong text here\n").unwrap();
        let pairs = read_tsv(&path).unwrap();
        assert_eq!(
            pairs[0],
            RawPair {
                text: "long text here".into(),
                summary: "sum".into()
            }
        );

        fs::write(&path, "no tab separator\n").unwrap();
        assert!(matches!(read_tsv(&path), Err(SwdError::Format(_))));
    }
}
