//! Optimal incentive schemes for teams of ESG disclosers.
//!
//! A risk-averse principal rewards `n` agents whose disclosure signals are
//! each correlated with one traded climate factor. Contracts load on every
//! signal and on the factor's log-return; the principal's problem reduces to
//! maximizing a concave quadratic over those loadings. This crate computes
//! that maximizer several independent ways and verifies everything the
//! closed forms claim:
//!
//! - [`objective`]: the reduced objective, its decompositions, gradient, and
//!   Hessian blocks.
//! - [`solver`]: the direct stationarity solve, the Sherman-Morrison-Woodbury
//!   closed form, and a finite-difference-only brute-force oracle.
//! - [`homogeneous`]: closed forms, signs, and limits for symmetric teams.
//! - [`risk_neutral`]: the row-decoupled `gamma_p -> 0` regime, sign
//!   classification, and sign-persistence scanning.
//! - [`constrained`]: the `gamma_p -> infinity` regime (market neutrality and
//!   identity pooling), solved by a bordered KKT system and by an explicit
//!   M-matrix elimination, with penalty-rate verification.
//! - [`contract`]: the optimal contract itself, exact terminal-law Monte
//!   Carlo, and equilibrium checks (participation, principal value,
//!   deviation curves).
//!
//! All numerics are generic over the scalar via [`scalar::Real`]; the
//! aliases below fix `f64`, which every documented tolerance assumes.

// Indexed loops run over several parallel vectors and matrix rows at once.
#![allow(clippy::needless_range_loop)]

pub mod constrained;
pub mod contract;
pub mod error;
pub mod homogeneous;
pub mod linalg;
pub mod numdiff;
pub mod objective;
pub mod params;
pub mod risk_neutral;
pub mod scalar;
pub mod sensitivities;
pub mod solver;
pub mod testutil;

pub use error::{ConfigError, Error, ParamError};
pub use params::{load_config, load_config_file, ModelParams};
pub use sensitivities::Sensitivities;

/// `f64` instantiations of the core types.
pub type ModelParams64 = params::ModelParams<f64>;
pub type Sensitivities64 = sensitivities::Sensitivities<f64>;
pub type FocSystem64 = objective::FocSystem<f64>;
pub type ConstrainedSolution64 = constrained::ConstrainedSolution<f64>;
pub type ContractCoefficients64 = contract::ContractCoefficients<f64>;

/// `f32` instantiations, for callers that trade precision for footprint.
pub type ModelParams32 = params::ModelParams<f32>;
pub type Sensitivities32 = sensitivities::Sensitivities<f32>;
