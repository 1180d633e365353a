//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tactic has {count} accepted related snippets; at least {min} are required")]
    TacticTooSmall { count: usize, min: usize },

    #[error("unrelated pool holds {available} snippets but {needed} are needed")]
    InsufficientUnrelated { needed: usize, available: usize },

    #[error("dataset invariant violated: {0}")]
    InvalidDataset(String),

    #[error("request failed after {attempts} attempts: {message}")]
    Http { attempts: usize, message: String },

    #[error("API rejected the request: {message}")]
    Api { message: String },

    #[error("{path}:{line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("review file refers to unknown snippet id {id:?}")]
    UnknownSnippet { id: String },

    #[error("cannot pool an empty vector list")]
    EmptyVectorList,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no embedding stored for snippet {snippet_id:?} window {window_index}")]
    MissingEmbedding {
        snippet_id: String,
        window_index: usize,
    },

    #[error("class {class:?} has {size} samples, fewer than the {k} folds requested")]
    ClassTooSmall { class: String, size: usize, k: usize },

    #[error("class {class:?} is absent from the training data")]
    MissingClass { class: String },

    #[error("label {label:?} is not among the declared class labels")]
    UnknownClassLabel { label: String },

    #[error("training needs at least {min_related} related and {min_unrelated} unrelated documents, got {related}/{unrelated}")]
    TooFewDocuments {
        related: usize,
        unrelated: usize,
        min_related: usize,
        min_unrelated: usize,
    },

    #[error("training vocabulary is empty after preprocessing")]
    EmptyVocabulary,

    #[error("expected {expected} labels for {actual} samples")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sample is empty")]
    EmptySample,

    #[error("label map contains no positive paths")]
    NoPositives,

    #[error("unknown tactic {id:?}")]
    UnknownTactic { id: String },

    #[error("model file {path}: {message}")]
    InvalidModel { path: PathBuf, message: String },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
