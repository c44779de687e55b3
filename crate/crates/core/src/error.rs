//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // registries
    #[error("name must be nonempty")]
    EmptyName,
    #[error("duplicate registry name `{0}`")]
    DuplicateName(String),
    #[error("unknown backend `{0}`")]
    UnknownName(String),
    #[error("unknown optimizer `{0}`")]
    UnknownOptimizer(String),
    #[error("optimizer `{optimizer}` requires hyperparameter `{name}`")]
    MissingHyperparam { optimizer: String, name: String },
    #[error("optimizer `{optimizer}` does not accept hyperparameter `{name}`")]
    UnknownHyperparam { optimizer: String, name: String },
    #[error("optimizer `{optimizer}` cannot consume {input}")]
    UnsupportedStepInput {
        optimizer: String,
        input: &'static str,
    },
    #[error("objective returned a non-finite value")]
    NonFiniteObjective,

    // counts
    #[error("inconsistent bitstring key `{key}` (expected {expected} binary digits)")]
    InconsistentKeyLength { key: String, expected: usize },
    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    // hypercausal
    #[error("min_risk policy requires a risk functional")]
    MissingRiskFunctional,
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("cycle detected through edge {from} -> {to}")]
    CycleDetected { from: String, to: String },
    #[error("unknown graph node `{0}`")]
    UnknownNode(String),
    #[error("source node `{0}` has no explicit input")]
    MissingSourceInput(String),

    // projectors
    #[error("perturbation `{name}` produced {got} values, expected {expected}")]
    PerturbationOutputDimMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown perturbation `{0}`")]
    UnknownPerturbation(String),

    // evaluation
    #[error("cross-entropy target at index {0} is negative")]
    NegativeTarget(usize),
    #[error("labels must contain both classes")]
    DegenerateLabels,
    #[error("MAPE undefined: target at index {0} is zero")]
    ZeroTarget(usize),
    #[error("MASE undefined: naive baseline error is zero")]
    DegenerateBaseline,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("lag {lag} leaves no valid pairs for length {len}")]
    LagTooLarge { lag: usize, len: usize },

    // runtime
    #[error("event label must be nonempty")]
    EmptyLabel,
    #[error("context value `{0}` is not finite")]
    NonFiniteContext(String),
    #[error("malformed telemetry line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("callback loop aborted at epoch {epoch}: {message}")]
    Aborted { epoch: usize, message: String },

    #[error("empty epoch log")]
    EmptyLogs,

    #[error("i/o error: {0}")]
    Io(String),
    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serde(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            _ => Error::Serde(err.to_string()),
        }
    }
}
