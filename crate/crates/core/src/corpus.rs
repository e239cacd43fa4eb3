//! Corpus ingestion: tokenization, vocabulary construction, count vectors,
//! additive smoothing and stratified train/test splits, plus the JSONL and
//! TSV loaders used by the command line.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::ops::Deref;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum allowed distance of a distribution's mass from exactly 1.
pub(crate) const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Lowercase the text before splitting.
    pub lowercase: bool,
    /// Tokens with fewer characters than this are dropped.
    pub min_token_length: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            min_token_length: 1,
        }
    }
}

/// Splits on every maximal run of non-alphanumeric characters.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let lowered;
    let text = if cfg.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && t.chars().count() >= cfg.min_token_length)
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub label: String,
    pub text: String,
}

impl LabeledDocument {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        LabeledDocument {
            label: label.into(),
            text: text.into(),
        }
    }
}

/// The token universe, sorted lexicographically; index positions are the
/// coordinates of every count vector and distribution built from it.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    fn from_sorted(words: Vec<String>, min_count: u64) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words,
            index,
            min_count,
        }
    }

    /// Rebuilds a vocabulary from an already-sorted word list (model files).
    pub(crate) fn from_words(words: Vec<String>, min_count: u64) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::SchemaError("vocab is empty".into()));
        }
        for pair in words.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::SchemaError(format!(
                    "vocab is not sorted and unique near {:?}",
                    pair[1]
                )));
            }
        }
        if words.iter().any(String::is_empty) {
            return Err(Error::SchemaError("vocab contains an empty token".into()));
        }
        Ok(Vocabulary::from_sorted(words, min_count))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.min_count == other.min_count
    }
}

/// Counts tokens over the whole corpus and keeps the ones occurring at least
/// `min_count` times, in lexicographic order. Independent of document order.
pub fn build_vocabulary(
    docs: &[LabeledDocument],
    tok: &TokenizerConfig,
    min_count: u64,
) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::InvalidConfig("min_count must be at least 1".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        for token in tokenize(&doc.text, tok) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let words: Vec<String> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(w, _)| w)
        .collect();
    if words.is_empty() {
        return Err(Error::EmptyVocabulary(min_count));
    }
    Ok(Vocabulary::from_sorted(words, min_count))
}

/// Sparse bag-of-words counts over a vocabulary; only nonzero entries are
/// stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    entries: BTreeMap<usize, u64>,
    total: u64,
}

impl CountVector {
    /// Accumulates (index, count) pairs; zero counts are dropped and
    /// duplicate indices add up. Errors if nothing remains.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u64)>) -> Result<Self> {
        let mut entries: BTreeMap<usize, u64> = BTreeMap::new();
        for (i, c) in pairs {
            if c > 0 {
                *entries.entry(i).or_insert(0) += c;
            }
        }
        if entries.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let total = entries.values().sum();
        Ok(CountVector { entries, total })
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    /// Total token count.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct vocabulary indices present.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }
}

/// Counts the in-vocabulary tokens of one document; out-of-vocabulary tokens
/// are dropped.
pub fn vectorize(
    doc: &LabeledDocument,
    vocab: &Vocabulary,
    tok: &TokenizerConfig,
) -> Result<CountVector> {
    let mut entries: BTreeMap<usize, u64> = BTreeMap::new();
    for token in tokenize(&doc.text, tok) {
        if let Some(i) = vocab.index_of(&token) {
            *entries.entry(i).or_insert(0) += 1;
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let total = entries.values().sum();
    Ok(CountVector { entries, total })
}

/// Additive (Laplace) smoothing strength; strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaRepr", into = "AlphaRepr")]
pub struct SmoothingConfig {
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct AlphaRepr {
    alpha: f64,
}

impl TryFrom<AlphaRepr> for SmoothingConfig {
    type Error = String;
    fn try_from(r: AlphaRepr) -> std::result::Result<Self, String> {
        SmoothingConfig::new(r.alpha).map_err(|e| e.to_string())
    }
}

impl From<SmoothingConfig> for AlphaRepr {
    fn from(c: SmoothingConfig) -> AlphaRepr {
        AlphaRepr { alpha: c.alpha }
    }
}

impl SmoothingConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "smoothing alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(SmoothingConfig { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { alpha: 1.0 }
    }
}

/// A strictly positive probability vector summing to 1 (within 1e-9).
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig("empty distribution".into()));
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveEntry { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(Distribution(probs))
    }

    /// For vectors the solvers have already normalized.
    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        debug_assert!(probs.iter().all(|v| *v > 0.0 && v.is_finite()));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        Distribution(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Distribution {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// probs[i] = (count_i + alpha) / (total + alpha * vocab_size), i.e. additive
/// smoothing over the full vocabulary, so every coordinate stays positive.
pub fn smooth_normalize(
    counts: &CountVector,
    vocab_size: usize,
    cfg: &SmoothingConfig,
) -> Result<Distribution> {
    if vocab_size == 0 {
        return Err(Error::InvalidConfig("vocab_size must be positive".into()));
    }
    if counts.max_index() >= vocab_size {
        return Err(Error::DimensionMismatch(counts.max_index() + 1, vocab_size));
    }
    let alpha = cfg.alpha();
    let denom = counts.total() as f64 + alpha * vocab_size as f64;
    let mut probs = vec![alpha / denom; vocab_size];
    for (i, c) in counts.entries() {
        probs[i] = (c as f64 + alpha) / denom;
    }
    Distribution::new(probs)
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
}

/// Deterministic stratified split: per label, documents are shuffled with a
/// ChaCha8 stream seeded by `seed` and `round(fraction * n)` of them go to
/// the training side. Labels are processed in sorted order, so the same
/// (corpus, fraction, seed) always yields the same split.
pub fn split_corpus(docs: &[LabeledDocument], fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, doc) in docs.iter().enumerate() {
        by_label.entry(doc.label.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut indices) in by_label {
        indices.shuffle(&mut rng);
        let n_train = (fraction * indices.len() as f64).round() as usize;
        if n_train == 0 {
            return Err(Error::InsufficientData(format!(
                "label {label:?} gets no training documents at fraction {fraction}"
            )));
        }
        for (k, idx) in indices.into_iter().enumerate() {
            if k < n_train {
                train.push(docs[idx].clone());
            } else {
                test.push(docs[idx].clone());
            }
        }
    }
    if test.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no documents left for the test side at fraction {fraction}"
        )));
    }
    Ok(DatasetSplit { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl FromStr for InputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(format!("unknown input format {other:?} (jsonl, tsv)")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Jsonl => "jsonl",
            InputFormat::Tsv => "tsv",
        })
    }
}

fn detect_format(path: &Path) -> Result<InputFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => Ok(InputFormat::Jsonl),
        Some("tsv") => Ok(InputFormat::Tsv),
        _ => Err(Error::InvalidConfig(format!(
            "cannot infer input format from {:?}; expected a .jsonl or .tsv \
             extension or an explicit format",
            path.display()
        ))),
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    label: String,
    text: String,
}

/// Loads a labeled corpus, inferring the format from the file extension when
/// none is given. Malformed lines abort with the 1-based line number.
pub fn load_corpus(path: &Path, format: Option<InputFormat>) -> Result<Vec<LabeledDocument>> {
    let format = match format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let raw = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })?;
    let name = path.display().to_string();
    match format {
        InputFormat::Jsonl => parse_jsonl(&raw, &name),
        InputFormat::Tsv => parse_tsv(&raw, &name),
    }
}

fn malformed(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

/// One JSON object per line with fields `label` and `text`; blank lines are
/// skipped.
pub fn parse_jsonl(raw: &str, path: &str) -> Result<Vec<LabeledDocument>> {
    let mut docs = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord =
            serde_json::from_str(line).map_err(|e| malformed(path, i + 1, e.to_string()))?;
        if record.label.is_empty() {
            return Err(malformed(path, i + 1, "label must be nonempty"));
        }
        docs.push(LabeledDocument {
            label: record.label,
            text: record.text,
        });
    }
    Ok(docs)
}

/// `label<TAB>text` per line; the text may itself contain further tabs.
pub fn parse_tsv(raw: &str, path: &str) -> Result<Vec<LabeledDocument>> {
    let mut docs = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| malformed(path, i + 1, "expected label<TAB>text"))?;
        if label.is_empty() {
            return Err(malformed(path, i + 1, "label must be nonempty"));
        }
        docs.push(LabeledDocument::new(label, text));
    }
    Ok(docs)
}
