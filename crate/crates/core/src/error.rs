use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}:{column}: malformed row: {message}")]
    MalformedRow {
        file: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{file}: schema mismatch: missing column '{column}'")]
    MissingColumn { file: String, column: String },

    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("company '{0}' has no document vector")]
    NotEmbedded(String),

    #[error("effective vocabulary is empty (all tokens below min count)")]
    EmptyVocabulary,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("feature count mismatch: model expects {expected}, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },

    #[error("non-finite values in GCN {layer}")]
    NonFinite { layer: &'static str },

    #[error("training mask is empty")]
    EmptyMask,

    #[error("AUC undefined: labels contain a single class")]
    AucUndefined,

    #[error("cohort '{0}' is empty after the train/test split")]
    EmptyCohort(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("{file}: bad magic bytes (expected {expected:?})")]
    BadMagic { file: String, expected: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage '{stage}' failed: {source}")]
    StageFailed {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("TOML parse error: {0}")]
    Toml(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
