//! Training and prediction.
//!
//! A trained model is a set of class priors and class centroids over a
//! shared vocabulary. Prediction minimizes `-ln P(C_j) + KL(d, c_j)` over
//! classes, which ranks identically to the multinomial naive Bayes
//! log-likelihood `ln P(C_j) + sum_i d_i ln c_{j,i}`: the two differ per
//! class by the class-independent entropy `sum_i d_i ln d_i` of the
//! document. Centroids come either from pooled counts (the classical
//! estimator) or from the symmetric-KL minimizers in [`crate::centroid`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::{mean_centroid, solve_dual, solve_flow, ClassCorpus, FlowConfig, LineGraph};
use crate::corpus::{
    build_vocabulary, smooth_normalize, vectorize, CountVector, Distribution, LabeledDocument,
    SmoothingConfig, TokenizerConfig, Vocabulary,
};
use crate::divergence::kl;
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// How class centroids are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidMethod {
    /// Pool the raw class counts and smooth once.
    Mean,
    /// Minimize the total symmetric KL divergence to the class documents.
    Skl,
}

impl CentroidMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CentroidMethod::Mean => "mean",
            CentroidMethod::Skl => "skl",
        }
    }
}

impl FromStr for CentroidMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(CentroidMethod::Mean),
            "skl" => Ok(CentroidMethod::Skl),
            other => Err(Error::InvalidConfig(format!(
                "unknown centroid method {other:?} (expected mean or skl)"
            ))),
        }
    }
}

impl fmt::Display for CentroidMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which solver computes SKL centroids. The dual route exists as an
/// independent cross-check of the flow integrator.
#[derive(Debug, Clone, PartialEq)]
pub enum SklSolver {
    Flow(FlowConfig),
    Dual { tol: f64 },
}

impl Default for SklSolver {
    fn default() -> Self {
        SklSolver::Flow(FlowConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub tokenizer: TokenizerConfig,
    pub smoothing: SmoothingConfig,
    pub min_count: u64,
    pub centroid_method: CentroidMethod,
    pub solver: SklSolver,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tokenizer: TokenizerConfig::default(),
            smoothing: SmoothingConfig::default(),
            min_count: 1,
            centroid_method: CentroidMethod::Skl,
            solver: SklSolver::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub label: String,
    pub prior: f64,
    pub centroid: Distribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub vocab: Vocabulary,
    pub tokenizer: TokenizerConfig,
    pub smoothing: SmoothingConfig,
    pub centroid_method: CentroidMethod,
    /// Sorted by label; prediction ties break toward the lowest index.
    pub classes: Vec<ClassModel>,
}

impl TrainedModel {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.label.as_str())
    }

    pub fn class(&self, label: &str) -> Option<&ClassModel> {
        self.classes
            .binary_search_by(|c| c.label.as_str().cmp(label))
            .ok()
            .map(|i| &self.classes[i])
    }
}

/// Fits priors and centroids. Documents that lose every token to the
/// vocabulary filter contribute nothing; a class whose documents all vanish
/// is an error. Priors are maximum-likelihood frequencies over the
/// documents actually used.
pub fn train(docs: &[LabeledDocument], opts: &TrainOptions) -> Result<TrainedModel> {
    let mut grouped: BTreeMap<&str, Vec<CountVector>> = BTreeMap::new();
    for d in docs {
        grouped.entry(d.label.as_str()).or_default();
    }
    if grouped.len() < 2 {
        return Err(Error::InsufficientClasses(grouped.len()));
    }
    let vocab = build_vocabulary(docs, &opts.tokenizer, opts.min_count)?;
    for d in docs {
        match vectorize(d, &vocab, &opts.tokenizer) {
            Ok(cv) => grouped.get_mut(d.label.as_str()).unwrap().push(cv),
            Err(Error::EmptyDocument) => {}
            Err(e) => return Err(e),
        }
    }
    for (label, cvs) in &grouped {
        if cvs.is_empty() {
            return Err(Error::InsufficientData(format!(
                "class {label:?} has no documents left after vocabulary filtering"
            )));
        }
    }
    let total_used: usize = grouped.values().map(Vec::len).sum();
    let dim = vocab.len();

    let jobs: Vec<(String, Vec<CountVector>)> = grouped
        .into_iter()
        .map(|(label, cvs)| (label.to_owned(), cvs))
        .collect();
    let classes: Vec<ClassModel> = jobs
        .into_par_iter()
        .map(|(label, cvs)| -> Result<ClassModel> {
            let prior = cvs.len() as f64 / total_used as f64;
            let dists = cvs
                .iter()
                .map(|cv| smooth_normalize(cv, dim, &opts.smoothing))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.for_class(&label))?;
            let corpus = ClassCorpus::new(label.clone(), dists, cvs)?;
            let centroid = match opts.centroid_method {
                CentroidMethod::Mean => mean_centroid(&corpus, &opts.smoothing),
                CentroidMethod::Skl => match &opts.solver {
                    SklSolver::Flow(cfg) => {
                        solve_flow(&corpus, &LineGraph::new(dim)?, cfg).map(|r| r.centroid)
                    }
                    SklSolver::Dual { tol } => solve_dual(&corpus, *tol).map(|r| r.centroid),
                },
            }
            .map_err(|e| e.for_class(&label))?;
            Ok(ClassModel {
                label,
                prior,
                centroid,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrainedModel {
        vocab,
        tokenizer: opts.tokenizer.clone(),
        smoothing: opts.smoothing,
        centroid_method: opts.centroid_method,
        classes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub label: String,
    pub neg_log_prior: f64,
    pub kl_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    /// One entry per model class, in model order.
    pub scores: Vec<ClassScore>,
    /// Index of the minimal total; ties break toward the lowest index.
    pub best: usize,
}

impl ScoreBreakdown {
    pub fn best(&self) -> &ClassScore {
        &self.scores[self.best]
    }
}

/// Scores a smoothed document against every class:
/// `total_j = -ln P(C_j) + KL(d, c_j)`.
pub fn score(model: &TrainedModel, doc: &Distribution) -> Result<ScoreBreakdown> {
    if doc.len() != model.vocab.len() {
        return Err(Error::DimensionMismatch(doc.len(), model.vocab.len()));
    }
    let mut scores = Vec::with_capacity(model.classes.len());
    for class in &model.classes {
        let neg_log_prior = -class.prior.ln();
        let kl_term = kl(doc, &class.centroid)?;
        scores.push(ClassScore {
            label: class.label.clone(),
            neg_log_prior,
            kl_term,
            total: neg_log_prior + kl_term,
        });
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.total < scores[best].total {
            best = i;
        }
    }
    Ok(ScoreBreakdown { scores, best })
}

/// Tokenizes, vectorizes and smooths raw text under the model's own
/// configuration. Fails with `EmptyDocument` when no token survives the
/// vocabulary.
pub fn doc_distribution(model: &TrainedModel, doc: &LabeledDocument) -> Result<Distribution> {
    let counts = vectorize(doc, &model.vocab, &model.tokenizer)?;
    smooth_normalize(&counts, model.vocab.len(), &model.smoothing)
}

/// Full pipeline for one document: text to score breakdown.
pub fn score_document(model: &TrainedModel, doc: &LabeledDocument) -> Result<ScoreBreakdown> {
    let d = doc_distribution(model, doc)?;
    score(model, &d)
}

/// Predicted label for one document.
pub fn classify(model: &TrainedModel, doc: &LabeledDocument) -> Result<String> {
    Ok(score_document(model, doc)?.best().label.clone())
}

// On-disk layout. Kept apart from the in-memory types so the file schema
// can stay stable while the internals move.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    format_version: u32,
    tokenizer: TokenizerConfig,
    smoothing: SmoothingConfig,
    min_count: u64,
    centroid_method: CentroidMethod,
    vocab: Vec<String>,
    classes: Vec<ClassRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRepr {
    label: String,
    prior: f64,
    centroid: Vec<f64>,
}

/// JSON formatter that prints every float with 17 significant digits so
/// parsing the file recovers the exact bit pattern and save/load/save is
/// byte-identical.
struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub(crate) fn write_json_sig17<W: Write, T: Serialize>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, Sig17Formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::SchemaError(e.to_string()))
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let repr = ModelRepr {
        format_version: MODEL_FORMAT_VERSION,
        tokenizer: model.tokenizer.clone(),
        smoothing: model.smoothing,
        min_count: model.vocab.min_count(),
        centroid_method: model.centroid_method,
        vocab: model.vocab.words().to_vec(),
        classes: model
            .classes
            .iter()
            .map(|c| ClassRepr {
                label: c.label.clone(),
                prior: c.prior,
                centroid: c.centroid.as_slice().to_vec(),
            })
            .collect(),
    };
    let file = File::create(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    write_json_sig17(&mut writer, &repr)?;
    writer
        .write_all(b"\n")
        .and_then(|_| writer.flush())
        .map_err(|e| Error::File {
            path: path.display().to_string(),
            source: e,
        })
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let file = File::open(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut raw = String::new();
    BufReader::new(file)
        .read_to_string(&mut raw)
        .map_err(|e| Error::File {
            path: path.display().to_string(),
            source: e,
        })?;

    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| Error::SchemaError(format!("{}: {e}", path.display())))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::SchemaError("format_version: missing or not an integer".into()))?;
    if found != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found,
            expected: u64::from(MODEL_FORMAT_VERSION),
        });
    }
    let repr: ModelRepr = serde_path_to_error::deserialize(value)
        .map_err(|e| Error::SchemaError(format!("{}: {}", e.path(), e.inner())))?;

    let vocab = Vocabulary::from_words(repr.vocab, repr.min_count)?;
    if repr.classes.len() < 2 {
        return Err(Error::SchemaError(format!(
            "classes: need at least 2, found {}",
            repr.classes.len()
        )));
    }
    let mut classes = Vec::with_capacity(repr.classes.len());
    let mut prior_sum = 0.0;
    for (i, c) in repr.classes.into_iter().enumerate() {
        if let Some(prev) = classes.last() {
            let prev: &ClassModel = prev;
            if prev.label >= c.label {
                return Err(Error::SchemaError(format!(
                    "classes[{i}].label: {:?} not strictly after {:?}",
                    c.label, prev.label
                )));
            }
        }
        if !(c.prior > 0.0 && c.prior <= 1.0) {
            return Err(Error::SchemaError(format!(
                "classes[{i}].prior: {} outside (0,1]",
                c.prior
            )));
        }
        if c.centroid.len() != vocab.len() {
            return Err(Error::SchemaError(format!(
                "classes[{i}].centroid: length {} but vocabulary has {} words",
                c.centroid.len(),
                vocab.len()
            )));
        }
        let centroid = Distribution::new(c.centroid)
            .map_err(|e| Error::SchemaError(format!("classes[{i}].centroid: {e}")))?;
        prior_sum += c.prior;
        classes.push(ClassModel {
            label: c.label,
            prior: c.prior,
            centroid,
        });
    }
    if (prior_sum - 1.0).abs() > 1e-9 {
        return Err(Error::SchemaError(format!(
            "classes: priors sum to {prior_sum}, not 1"
        )));
    }
    Ok(TrainedModel {
        vocab,
        tokenizer: repr.tokenizer,
        smoothing: repr.smoothing,
        centroid_method: repr.centroid_method,
        classes,
    })
}

#[cfg(test)]
// Expected values below keep all 17 significant digits of the oracle runs.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn docs(pairs: &[(&str, &str)]) -> Vec<LabeledDocument> {
        pairs
            .iter()
            .map(|(l, t)| LabeledDocument::new(*l, *t))
            .collect()
    }

    fn tiny_corpus() -> Vec<LabeledDocument> {
        docs(&[
            ("spam", "buy cheap pills now"),
            ("spam", "cheap pills cheap deals"),
            ("spam", "buy now deals now"),
            ("ham", "meeting notes for the project"),
        ])
    }

    fn model_from(priors: &[f64], centroids: &[&[f64]], vocab_size: usize) -> TrainedModel {
        let words: Vec<String> = (0..vocab_size).map(|i| format!("w{i:03}")).collect();
        TrainedModel {
            vocab: Vocabulary::from_words(words, 1).unwrap(),
            tokenizer: TokenizerConfig::default(),
            smoothing: SmoothingConfig::default(),
            centroid_method: CentroidMethod::Skl,
            classes: priors
                .iter()
                .zip(centroids)
                .enumerate()
                .map(|(i, (p, c))| ClassModel {
                    label: format!("c{i}"),
                    prior: *p,
                    centroid: Distribution::new(c.to_vec()).unwrap(),
                })
                .collect(),
        }
    }

    #[test]
    fn priors_are_class_frequencies() {
        let model = train(&tiny_corpus(), &TrainOptions::default()).unwrap();
        assert_eq!(model.class("spam").unwrap().prior, 0.75);
        assert_eq!(model.class("ham").unwrap().prior, 0.25);
        // classes come out sorted by label
        let labels: Vec<&str> = model.labels().collect();
        assert_eq!(labels, vec!["ham", "spam"]);
    }

    #[test]
    fn one_label_is_rejected() {
        let corpus = docs(&[("a", "x y"), ("a", "y z")]);
        assert!(matches!(
            train(&corpus, &TrainOptions::default()),
            Err(Error::InsufficientClasses(1))
        ));
    }

    #[test]
    fn class_losing_all_documents_is_reported() {
        // "rare" appears once and min_count=2 drops it, emptying class b
        let corpus = docs(&[
            ("a", "common common common"),
            ("a", "common common"),
            ("b", "rare"),
        ]);
        let opts = TrainOptions {
            min_count: 2,
            ..TrainOptions::default()
        };
        assert!(matches!(
            train(&corpus, &opts),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn mean_and_skl_agree_on_single_document_classes() {
        let corpus = docs(&[("a", "red red green"), ("b", "blue blue yellow")]);
        let mean = train(
            &corpus,
            &TrainOptions {
                centroid_method: CentroidMethod::Mean,
                ..TrainOptions::default()
            },
        )
        .unwrap();
        let skl = train(&corpus, &TrainOptions::default()).unwrap();
        for (a, b) in mean.classes.iter().zip(&skl.classes) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.prior, b.prior);
            for (x, y) in a.centroid.iter().zip(b.centroid.iter()) {
                assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn score_matches_the_frozen_kl_terms() {
        let model = model_from(&[0.5, 0.5], &[&[0.9, 0.1], &[0.1, 0.9]], 2);
        let d = Distribution::new(vec![0.8, 0.2]).unwrap();
        let b = score(&model, &d).unwrap();
        assert!((b.scores[0].kl_term - 0.044403007586882298).abs() < 1e-14);
        assert!((b.scores[1].kl_term - 1.3627377539886139).abs() < 1e-14);
        for s in &b.scores {
            assert_eq!(s.neg_log_prior, -(0.5_f64.ln()));
            assert_eq!(s.total, s.neg_log_prior + s.kl_term);
        }
        assert_eq!(b.best, 0);
        assert_eq!(b.best().label, "c0");
    }

    #[test]
    fn document_equal_to_a_centroid_wins_under_equal_priors() {
        let model = model_from(&[0.5, 0.5], &[&[0.3, 0.7], &[0.6, 0.4]], 2);
        let d = Distribution::new(vec![0.6, 0.4]).unwrap();
        assert_eq!(score(&model, &d).unwrap().best().label, "c1");
    }

    #[test]
    fn ties_break_toward_the_lowest_index() {
        let model = model_from(&[0.5, 0.5], &[&[0.5, 0.5], &[0.5, 0.5]], 2);
        let d = Distribution::new(vec![0.4, 0.6]).unwrap();
        assert_eq!(score(&model, &d).unwrap().best, 0);
    }

    #[test]
    fn score_checks_dimensions() {
        let model = model_from(&[0.5, 0.5], &[&[0.9, 0.1], &[0.1, 0.9]], 2);
        let d = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            score(&model, &d),
            Err(Error::DimensionMismatch(3, 2))
        ));
    }

    #[test]
    fn oov_only_documents_raise_empty_document() {
        let model = train(&tiny_corpus(), &TrainOptions::default()).unwrap();
        let err = classify(&model, &LabeledDocument::new("?", "zzz qqq")).unwrap_err();
        assert!(matches!(err, Error::EmptyDocument));
    }

    #[test]
    fn classify_picks_the_plausible_class() {
        // balanced priors so the documents decide
        let corpus = docs(&[
            ("spam", "buy cheap pills now"),
            ("spam", "cheap pills cheap deals"),
            ("ham", "meeting notes for the project"),
            ("ham", "project review meeting notes"),
        ]);
        let model = train(&corpus, &TrainOptions::default()).unwrap();
        let got = classify(&model, &LabeledDocument::new("?", "cheap pills")).unwrap();
        assert_eq!(got, "spam");
        let got = classify(&model, &LabeledDocument::new("?", "project meeting")).unwrap();
        assert_eq!(got, "ham");
    }

    #[test]
    fn ranking_matches_the_log_likelihood_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let v = rng.random_range(2..=20);
            let n_classes = rng.random_range(2..=5);
            let mut priors: Vec<f64> = (0..n_classes)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let sum: f64 = priors.iter().sum();
            for p in &mut priors {
                *p /= sum;
            }
            let centroids: Vec<Vec<f64>> = (0..n_classes)
                .map(|_| {
                    let c: Vec<f64> = (0..v).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                    let s: f64 = c.iter().sum();
                    c.iter().map(|x| x / s).collect()
                })
                .collect();
            let refs: Vec<&[f64]> = centroids.iter().map(|c| c.as_slice()).collect();
            let model = model_from(&priors, &refs, v);
            let mut d: Vec<f64> = (0..v).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = d.iter().sum();
            for x in &mut d {
                *x /= s;
            }
            let doc = Distribution::new(d.clone()).unwrap();
            let b = score(&model, &doc).unwrap();

            let entropy: f64 = d.iter().map(|x| x * x.ln()).sum();
            let mut best_ll = 0usize;
            for (j, class) in model.classes.iter().enumerate() {
                let ll = class.prior.ln()
                    + d.iter()
                        .zip(class.centroid.iter())
                        .map(|(di, ci)| di * ci.ln())
                        .sum::<f64>();
                assert!(
                    (b.scores[j].total + ll - entropy).abs() <= 1e-10,
                    "objectives differ by more than the entropy term"
                );
                if ll
                    > model.classes[best_ll].prior.ln()
                        + d.iter()
                            .zip(model.classes[best_ll].centroid.iter())
                            .map(|(di, ci)| di * ci.ln())
                            .sum::<f64>()
                {
                    best_ll = j;
                }
            }
            assert_eq!(b.best, best_ll);
        }
    }

    #[test]
    fn model_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = train(&tiny_corpus(), &TrainOptions::default()).unwrap();
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model, loaded);

        // save -> load -> save is byte-identical
        let again = dir.path().join("model2.json");
        save_model(&loaded, &again).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, br#"{"format_version": 999}"#).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::VersionMismatch {
                found: 999,
                expected: 1
            })
        ));
    }

    #[test]
    fn truncated_file_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = train(&tiny_corpus(), &TrainOptions::default()).unwrap();
        save_model(&model, &path).unwrap();
        let raw = std::fs::read(&path).unwrap();
        std::fs::write(&path, &raw[..raw.len() / 2]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::SchemaError(_))));
    }

    #[test]
    fn missing_model_file_is_reported_with_its_path() {
        let err = load_model(Path::new("/nonexistent/model.json")).unwrap_err();
        match err {
            Error::File { path, .. } => assert!(path.contains("nonexistent")),
            other => panic!("expected File error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_a_field_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        // centroid shorter than the vocabulary
        std::fs::write(
            &path,
            br#"{"format_version":1,"tokenizer":{"lowercase":true,"min_token_length":1},
                "smoothing":{"alpha":1.0},"min_count":1,"centroid_method":"skl",
                "vocab":["a","b"],
                "classes":[{"label":"x","prior":0.5,"centroid":[1.0]},
                           {"label":"y","prior":0.5,"centroid":[0.5,0.5]}]}"#,
        )
        .unwrap();
        match load_model(&path).unwrap_err() {
            Error::SchemaError(msg) => assert!(msg.contains("classes[0].centroid"), "{msg}"),
            other => panic!("expected SchemaError, got {other:?}"),
        }

        // unsorted class labels
        std::fs::write(
            &path,
            br#"{"format_version":1,"tokenizer":{"lowercase":true,"min_token_length":1},
                "smoothing":{"alpha":1.0},"min_count":1,"centroid_method":"skl",
                "vocab":["a","b"],
                "classes":[{"label":"y","prior":0.5,"centroid":[0.5,0.5]},
                           {"label":"x","prior":0.5,"centroid":[0.5,0.5]}]}"#,
        )
        .unwrap();
        match load_model(&path).unwrap_err() {
            Error::SchemaError(msg) => assert!(msg.contains("classes[1].label"), "{msg}"),
            other => panic!("expected SchemaError, got {other:?}"),
        }

        // priors off by more than the tolerance
        std::fs::write(
            &path,
            br#"{"format_version":1,"tokenizer":{"lowercase":true,"min_token_length":1},
                "smoothing":{"alpha":1.0},"min_count":1,"centroid_method":"skl",
                "vocab":["a","b"],
                "classes":[{"label":"x","prior":0.5,"centroid":[0.5,0.5]},
                           {"label":"y","prior":0.75,"centroid":[0.5,0.5]}]}"#,
        )
        .unwrap();
        match load_model(&path).unwrap_err() {
            Error::SchemaError(msg) => assert!(msg.contains("priors sum"), "{msg}"),
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn dual_solver_flag_produces_an_equivalent_model() {
        let corpus = tiny_corpus();
        let flow = train(&corpus, &TrainOptions::default()).unwrap();
        let dual = train(
            &corpus,
            &TrainOptions {
                solver: SklSolver::Dual { tol: 1e-12 },
                ..TrainOptions::default()
            },
        )
        .unwrap();
        for (a, b) in flow.classes.iter().zip(&dual.classes) {
            for (x, y) in a.centroid.iter().zip(b.centroid.iter()) {
                assert!((x - y).abs() <= 1e-6);
            }
        }
    }
}
