use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location-carrying syntax error for pipelines and taxonomy documents.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid object: {0}")]
    InvalidObject(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("unknown relation category `{0}`")]
    UnknownCategory(String),

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("visibility relations need an observer")]
    NoObserver,

    #[error("observer `{0}` is not in the fact base")]
    UnknownObserver(String),

    #[error("cannot build an enclosing box from an empty list")]
    EmptyGroup,

    #[error("parse error at {0}")]
    Parse(#[from] ParseError),

    #[error("taxonomy: {0}")]
    Taxonomy(String),

    #[error("taxonomy cycle: {0}")]
    TaxonomyCycle(String),

    #[error("step {step} ({op}): {message}")]
    Runtime { step: usize, op: String, message: String },

    #[error("fact document: record {index}: {message}")]
    FactRecord { index: usize, message: String },

    #[error("fact document: {0}")]
    FactDocument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
