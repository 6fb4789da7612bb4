use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the corpus, features, models and eval modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    MalformedFile { path: PathBuf, message: String },

    #[error("duplicate sample id after namespacing: {id}")]
    DuplicateId { id: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("fold count must be at least 2, got {k}")]
    InvalidFoldCount { k: usize },

    #[error("class {class} has {count} samples, fewer than k={k} folds")]
    ClassTooSmall {
        class: String,
        count: usize,
        k: usize,
    },

    #[error("stratification tolerance exceeded: fold {fold} abusive share {share:.4} vs global {global:.4} (tolerance {tolerance:.4})")]
    StratificationFailed {
        fold: usize,
        share: f64,
        global: f64,
        tolerance: f64,
    },

    #[error("encoder artifact not found at {path}; generate one (see README, \"Contextual encoder artifacts\") or point features.encoder_artifact at an existing directory")]
    EncoderArtifactMissing { path: PathBuf },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("non-finite value at sequence step {step}")]
    NonFiniteAtStep { step: usize },

    #[error("training set contains a single class only")]
    SingleClassTrainingSet,

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("model {model} cannot consume {features} features")]
    UnsupportedPairing { model: String, features: String },

    #[error("checksum mismatch for {file}: artifact is corrupted")]
    ChecksumMismatch { file: String },

    #[error("artifact schema version {found} is newer than supported version {supported}")]
    SchemaVersion { found: u32, supported: u32 },

    #[error("model artifact missing or incomplete at {path}: {message}")]
    ArtifactMissing { path: PathBuf, message: String },

    #[error("truth and prediction lists differ in length: {truth} vs {predictions}")]
    LengthMismatch { truth: usize, predictions: usize },

    #[error("{context} requires both classes to be present")]
    SingleClassTruth { context: String },

    #[error("{context} requires a non-empty input")]
    EmptyInput { context: String },

    #[error("fold {fold} failed: {source}")]
    FoldFailed {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            message: message.into(),
        }
    }
}
