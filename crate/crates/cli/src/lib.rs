//! Experiment layer behind the `esg-incentives` binary: config resolution,
//! penalty sweeps, figure-data CSV emission, flip-threshold bisection,
//! convergence-rate tables, and Monte Carlo reports.
//!
//! Everything here is deterministic given (config, flags, seed): reports are
//! plain CSV strings assembled in a fixed order with round-trippable float
//! formatting.

// Indexed loops run over several parallel vectors and matrix rows at once.
#![allow(clippy::needless_range_loop)]

pub mod experiments;
pub mod grid;
pub mod presets;

use esg_incentives::{ConfigError, Error as CoreError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numerical(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            // Misuse of an operation is a validation problem, not a solver
            // breakdown.
            CoreError::InvalidArgument(msg) => CliError::Usage(msg),
            CoreError::Param(p) => CliError::Config(ConfigError::Param(p)),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    /// Process exit code: 2 for config/validation problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

/// Resolve a `--config` argument: an existing file path wins, otherwise a
/// bundled preset name (`table1`, `table2.json`, ...).
pub fn resolve_config(arg: &str) -> Result<esg_incentives::ModelParams64, CliError> {
    let path = std::path::Path::new(arg);
    if path.exists() {
        return Ok(esg_incentives::load_config_file(path)?);
    }
    if let Some(text) = presets::by_name(arg) {
        return Ok(esg_incentives::load_config(text)?);
    }
    Err(CliError::Usage(format!(
        "config '{arg}' is neither a file nor a bundled preset ({})",
        presets::NAMES.join(", ")
    )))
}

/// Round-trippable float formatting shared by every CSV writer.
pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}
