use thiserror::Error;

/// Errors produced by model loading, property parsing and the counting
/// algorithms. Timeouts are *not* errors; they are first-class outcomes of
/// the decision and counting procedures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("unsupported activation {0:?}; only \"relu\" and \"identity\" are accepted")]
    UnsupportedActivation(String),

    #[error("axis {0} has a single grid point and cannot be split")]
    NotSplittable(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("negated postcondition would exceed {limit} DNF terms; simplify the property")]
    NegationTooLarge { limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("budget refused: {0}")]
    BudgetRefused(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
