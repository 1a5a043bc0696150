use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("incompatible basis: {0}")]
    IncompatibleBasis(String),

    #[error("evaluation failed at t = {t}, node {node} (x = {x:?}): {msg}")]
    Evaluation {
        t: f64,
        node: usize,
        x: Vec<f64>,
        msg: String,
    },

    #[error("missing declared constants: {0}")]
    MissingConstants(String),

    #[error("step failed at t = {t} (|alpha| = {norm}): {msg}")]
    StepFailure { t: f64, norm: f64, msg: String },

    #[error("blow-up at t = {t}: |alpha|_H = {norm} exceeds threshold {threshold}")]
    BlowUp { t: f64, norm: f64, threshold: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate demo: {0}")]
    Degenerate(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
