//! Accuracy reports, learning curves and inter-class distance tables.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::classifier::{score_document, train, CentroidMethod, TrainOptions, TrainedModel};
use crate::corpus::{split_corpus, LabeledDocument};
use crate::divergence::skl;
use crate::fmt_f64;
use crate::{Error, Result};

/// Label used for whole-test-set rows in curve output.
pub const OVERALL_LABEL: &str = "__overall__";

/// Seed stride between repeats; keeps repeats independent yet reproducible.
const REPEAT_SEED_STRIDE: u64 = 10_007;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassStats {
    /// Correct predictions over support.
    pub correct: u64,
    /// Number of test documents carrying this true label.
    pub support: u64,
    /// Of those, how many lost every token to the vocabulary filter. They
    /// count as misclassified, never dropped.
    pub empty_documents: u64,
}

impl ClassStats {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.support as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub overall_accuracy: f64,
    pub per_class: BTreeMap<String, ClassStats>,
    /// (true label, predicted label) -> count, over documents that could be
    /// classified at all.
    pub confusion: BTreeMap<(String, String), u64>,
    pub total_documents: u64,
    pub empty_documents: u64,
}

/// Scores every test document against the model. Preconditions: the test
/// set is nonempty and every test label is known to the model. Documents
/// that vectorize to nothing are counted as misclassified and tallied
/// separately; they do not appear in the confusion matrix (there is no
/// prediction to record).
pub fn evaluate(model: &TrainedModel, test: &[LabeledDocument]) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::InsufficientData(
            "evaluation needs at least one test document".into(),
        ));
    }
    let known: BTreeSet<&str> = model.labels().collect();
    for d in test {
        if !known.contains(d.label.as_str()) {
            return Err(Error::UnknownLabel(d.label.clone()));
        }
    }

    let outcomes: Vec<Option<String>> = test
        .par_iter()
        .map(|d| match score_document(model, d) {
            Ok(b) => Ok(Some(b.best().label.clone())),
            Err(Error::EmptyDocument) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_class: BTreeMap<String, ClassStats> = BTreeMap::new();
    let mut confusion: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut correct = 0u64;
    let mut empty = 0u64;
    for (doc, outcome) in test.iter().zip(outcomes) {
        let stats = per_class.entry(doc.label.clone()).or_insert(ClassStats {
            correct: 0,
            support: 0,
            empty_documents: 0,
        });
        stats.support += 1;
        match outcome {
            Some(predicted) => {
                if predicted == doc.label {
                    stats.correct += 1;
                    correct += 1;
                }
                *confusion.entry((doc.label.clone(), predicted)).or_insert(0) += 1;
            }
            None => {
                stats.empty_documents += 1;
                empty += 1;
            }
        }
    }

    Ok(EvaluationReport {
        overall_accuracy: correct as f64 / test.len() as f64,
        per_class,
        confusion,
        total_documents: test.len() as u64,
        empty_documents: empty,
    })
}

/// Fixed-format text rendering of an [`EvaluationReport`] for terminal use.
pub fn report_text(report: &EvaluationReport) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(out, "documents: {}", report.total_documents);
    let _ = writeln!(out, "overall_accuracy: {:.6}", report.overall_accuracy);
    let _ = writeln!(out, "empty_documents: {}", report.empty_documents);
    let _ = writeln!(out, "per-class:");
    for (label, stats) in &report.per_class {
        let _ = writeln!(
            out,
            "  {label}: accuracy {:.6} (support {}, empty {})",
            stats.accuracy(),
            stats.support,
            stats.empty_documents
        );
    }
    let _ = writeln!(out, "confusion (true -> predicted):");
    for ((t, p), n) in &report.confusion {
        let _ = writeln!(out, "  {t} -> {p}: {n}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    /// Training fractions, strictly increasing, each in (0,1).
    pub fractions: Vec<f64>,
    pub repeats: u32,
    pub seed: u64,
    pub methods: Vec<CentroidMethod>,
}

impl CurveSpec {
    fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidConfig("no fractions given".into()));
        }
        for f in &self.fractions {
            if !f.is_finite() || *f <= 0.0 || *f >= 1.0 {
                return Err(Error::InvalidConfig(format!("fraction {f} outside (0,1)")));
            }
        }
        for w in self.fractions.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidConfig(format!(
                    "fractions must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no centroid methods given".into()));
        }
        let mut seen = BTreeSet::new();
        for m in &self.methods {
            if !seen.insert(*m) {
                return Err(Error::InvalidConfig(format!(
                    "centroid method {m} listed twice"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub fraction: f64,
    pub repeat: u32,
    pub method: CentroidMethod,
    /// A class label, or [`OVERALL_LABEL`] for the whole-test-set row.
    pub label: String,
    pub accuracy: f64,
    pub empty_documents: u64,
}

/// Runs the full fraction x repeat x method grid: stratified split (seeded
/// per repeat, shared across methods so comparisons are paired), train,
/// evaluate. Rows come out ordered by (fraction, repeat, method) with the
/// overall row first in each cell, then per-class rows in label order;
/// the order is independent of scheduling.
pub fn learning_curve(
    corpus: &[LabeledDocument],
    spec: &CurveSpec,
    opts: &TrainOptions,
) -> Result<Vec<CurveRow>> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &fraction in &spec.fractions {
        for repeat in 0..spec.repeats {
            for &method in &spec.methods {
                cells.push((fraction, repeat, method));
            }
        }
    }
    let rows: Vec<Vec<CurveRow>> = cells
        .into_par_iter()
        .map(|(fraction, repeat, method)| -> Result<Vec<CurveRow>> {
            let seed = spec
                .seed
                .wrapping_add(u64::from(repeat).wrapping_mul(REPEAT_SEED_STRIDE));
            let split = split_corpus(corpus, fraction, seed)?;
            let cell_opts = TrainOptions {
                centroid_method: method,
                ..opts.clone()
            };
            let model = train(&split.train, &cell_opts)?;
            let report = evaluate(&model, &split.test)?;
            let mut rows = Vec::with_capacity(1 + report.per_class.len());
            rows.push(CurveRow {
                fraction,
                repeat,
                method,
                label: OVERALL_LABEL.to_owned(),
                accuracy: report.overall_accuracy,
                empty_documents: report.empty_documents,
            });
            for (label, stats) in &report.per_class {
                rows.push(CurveRow {
                    fraction,
                    repeat,
                    method,
                    label: label.clone(),
                    accuracy: stats.accuracy(),
                    empty_documents: stats.empty_documents,
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("fraction,repeat,method,label,accuracy,empty_documents\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(r.fraction),
            r.repeat,
            r.method,
            csv_field(&r.label),
            fmt_f64(r.accuracy),
            r.empty_documents
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTables {
    pub labels: Vec<String>,
    /// Mean symmetric KL divergence from each centroid to the others.
    pub average: Vec<f64>,
    /// Full pairwise matrix in label order; symmetric, zero diagonal.
    pub matrix: Vec<Vec<f64>>,
}

impl DistanceTables {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("label,avg_skl\n");
        for (label, avg) in self.labels.iter().zip(&self.average) {
            out.push_str(&format!("{},{}\n", csv_field(label), fmt_f64(*avg)));
        }
        out
    }

    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("label");
        for label in &self.labels {
            out.push(',');
            out.push_str(&csv_field(label));
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.matrix) {
            out.push_str(&csv_field(label));
            for v in row {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise symmetric KL divergences between class centroids, plus each
/// class's average distance to the rest.
#[allow(clippy::needless_range_loop)] // index pairs fill both triangles
pub fn class_distance_table(model: &TrainedModel) -> Result<DistanceTables> {
    let k = model.classes.len();
    if k < 2 {
        return Err(Error::InsufficientClasses(k));
    }
    let mut matrix = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = skl(&model.classes[i].centroid, &model.classes[j].centroid)?;
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    let average = matrix
        .iter()
        .map(|row| row.iter().sum::<f64>() / (k - 1) as f64)
        .collect();
    Ok(DistanceTables {
        labels: model.labels().map(str::to_owned).collect(),
        average,
        matrix,
    })
}
