//! Multinomial text classification with symmetric Kullback-Leibler class
//! centroids.
//!
//! Documents become bag-of-words count vectors, smoothed into strictly
//! positive distributions. Each class is summarized by the distribution that
//! minimizes the total symmetric KL (Jeffreys) divergence to the class
//! documents, and classification picks the class minimizing
//! `-log prior + KL(doc, centroid)`. The centroid is computed by two
//! independent routes that cross-validate each other: an upwind gradient flow
//! on the vocabulary path graph and a bisection on the Lagrangian dual of the
//! simplex constraint.

pub mod centroid;
pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod divergence;
pub mod evaluation;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vectors have different lengths: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("non-positive entry {value} at index {index}")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("no token reached the min_count={0} threshold")]
    EmptyVocabulary(u64),

    #[error("document has no in-vocabulary tokens")]
    EmptyDocument,

    #[error("{0}")]
    InsufficientData(String),

    #[error("need at least two distinct class labels, found {0}")]
    InsufficientClasses(usize),

    #[error("label {0:?} does not occur in the model")]
    UnknownLabel(String),

    #[error("step size underflowed after {halvings} halvings at iteration {iteration}")]
    Stalled { iteration: usize, halvings: u32 },

    #[error("no convergence within {0} iterations")]
    MaxIters(usize),

    #[error("could not bracket the dual variable after {0} doublings")]
    BracketFailure(u32),

    #[error("unsupported model format version {found} (this build reads {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("model schema: {0}")]
    SchemaError(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {label:?}: {source}")]
    Class {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a class label to a solver or smoothing error.
    pub(crate) fn for_class(self, label: &str) -> Error {
        Error::Class {
            label: label.to_owned(),
            source: Box::new(self),
        }
    }

    /// Stable variant name; the CLI prefixes error messages with it. A
    /// wrapped class error reports the underlying kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::NonPositiveEntry { .. } => "NonPositiveEntry",
            Error::ZeroVector => "ZeroVector",
            Error::EmptyVocabulary(_) => "EmptyVocabulary",
            Error::EmptyDocument => "EmptyDocument",
            Error::InsufficientData(_) => "InsufficientData",
            Error::InsufficientClasses(_) => "InsufficientClasses",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::Stalled { .. } => "Stalled",
            Error::MaxIters(_) => "MaxIters",
            Error::BracketFailure(_) => "BracketFailure",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::SchemaError(_) => "SchemaError",
            Error::Malformed { .. } => "Malformed",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Class { source, .. } => source.kind(),
            Error::File { .. } => "File",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Formats a float with 17 significant digits, enough to reproduce the exact
/// bit pattern when re-parsed. Used for every float in CSV and JSON output so
/// repeated runs are byte-identical.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
