//! Crate-wide error types.

use thiserror::Error;

/// Parameter validation failures, reported with the offending field and index.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("team size n must be at least 1")]
    EmptyTeam,
    #[error("{field} has length {got}, expected n = {expected}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}{} must be positive, got {value}", fmt_index(*.index))]
    NonPositive {
        field: &'static str,
        index: Option<usize>,
        value: f64,
    },
    #[error("correlation out of open interval (-1, 1): rho[{index}] = {value}")]
    CorrelationOutOfRange { index: usize, value: f64 },
    #[error("principal risk aversion gamma_P must be nonnegative, got {value}")]
    NegativeGammaP { value: f64 },
    #[error("{field}{} is not finite", fmt_index(*.index))]
    NotFinite {
        field: &'static str,
        index: Option<usize>,
    },
}

fn fmt_index(index: Option<usize>) -> String {
    match index {
        Some(i) => format!("[{i}]"),
        None => String::new(),
    }
}

/// Failures when reading an economy from a config document.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    /// serde_json reports unknown keys and syntax errors with line/column.
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Numerical failures in the solvers and simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    /// Should be unreachable for validated parameters; signals a bug or a
    /// boundary case such as |rho| -> 1.
    #[error("singular linear system while {context}")]
    Singular { context: &'static str },
    #[error("no convergence while {context} (condition estimate {condition:.3e})")]
    NoConvergence {
        context: &'static str,
        condition: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
