//! Economy parameters: validation, homogeneous construction, config I/O.
//!
//! An economy is a principal with risk aversion `gamma_p` facing `n` agents.
//! Agent `i` carries an effort-cost scale `c[i]`, a risk aversion `gamma[i]`,
//! a signal scale `nu[i]`, and a correlation `rho[i]` between its signal and
//! the traded factor. The factor itself has volatility `sigma`, drift `mu`,
//! and initial level `s0`; signals start at `q0`, the horizon is `horizon`,
//! and `reservation[i]` is agent i's participation floor (a certainty
//! equivalent).
//!
//! Values are immutable after [`ModelParams::validate`]; nothing in this
//! crate mutates a validated economy.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ParamError};
use crate::scalar::{real, to_f64, Real};

/// A validated economy. Construct through [`ModelParams::new`],
/// [`ModelParams::homogeneous`], or [`load_config`]; all three run
/// [`ModelParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub n: usize,
    pub c: Vec<T>,
    pub gamma: Vec<T>,
    pub nu: Vec<T>,
    pub rho: Vec<T>,
    pub sigma: T,
    pub mu: T,
    pub s0: T,
    pub q0: Vec<T>,
    pub gamma_p: T,
    pub horizon: T,
    pub reservation: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    /// Build and validate a fully heterogeneous economy.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c: Vec<T>,
        gamma: Vec<T>,
        nu: Vec<T>,
        rho: Vec<T>,
        sigma: T,
        mu: T,
        s0: T,
        q0: Vec<T>,
        gamma_p: T,
        horizon: T,
        reservation: Vec<T>,
    ) -> Result<Self, ParamError> {
        ModelParams {
            n: c.len(),
            c,
            gamma,
            nu,
            rho,
            sigma,
            mu,
            s0,
            q0,
            gamma_p,
            horizon,
            reservation,
        }
        .validate()
    }

    /// Replicate scalar agent parameters n times.
    #[allow(clippy::too_many_arguments)]
    pub fn homogeneous(
        n: usize,
        c: T,
        gamma: T,
        nu: T,
        rho: T,
        sigma: T,
        gamma_p: T,
        mu: T,
        s0: T,
        q0: T,
        horizon: T,
        reservation: T,
    ) -> Result<Self, ParamError> {
        ModelParams {
            n,
            c: vec![c; n],
            gamma: vec![gamma; n],
            nu: vec![nu; n],
            rho: vec![rho; n],
            sigma,
            mu,
            s0,
            q0: vec![q0; n],
            gamma_p,
            horizon,
            reservation: vec![reservation; n],
        }
        .validate()
    }

    /// Check every standing assumption; idempotent.
    pub fn validate(self) -> Result<Self, ParamError> {
        if self.n == 0 {
            return Err(ParamError::EmptyTeam);
        }
        let n = self.n;
        let check_len = |field: &'static str, len: usize| {
            if len != n {
                Err(ParamError::DimensionMismatch {
                    field,
                    expected: n,
                    got: len,
                })
            } else {
                Ok(())
            }
        };
        check_len("c", self.c.len())?;
        check_len("gamma", self.gamma.len())?;
        check_len("nu", self.nu.len())?;
        check_len("rho", self.rho.len())?;
        check_len("q0", self.q0.len())?;
        check_len("r", self.reservation.len())?;

        let check_pos_vec = |field: &'static str, v: &[T]| {
            for (i, &x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return Err(ParamError::NotFinite {
                        field,
                        index: Some(i),
                    });
                }
                if x <= T::zero() {
                    return Err(ParamError::NonPositive {
                        field,
                        index: Some(i),
                        value: to_f64(x),
                    });
                }
            }
            Ok(())
        };
        check_pos_vec("c", &self.c)?;
        check_pos_vec("gamma", &self.gamma)?;
        check_pos_vec("nu", &self.nu)?;
        let check_pos_scalar = |field: &'static str, x: T| {
            if !x.is_finite() {
                return Err(ParamError::NotFinite { field, index: None });
            }
            if x <= T::zero() {
                return Err(ParamError::NonPositive {
                    field,
                    index: None,
                    value: to_f64(x),
                });
            }
            Ok(())
        };
        check_pos_scalar("sigma", self.sigma)?;
        check_pos_scalar("s0", self.s0)?;
        check_pos_scalar("T", self.horizon)?;
        for (i, &x) in self.rho.iter().enumerate() {
            if !x.is_finite() {
                return Err(ParamError::NotFinite {
                    field: "rho",
                    index: Some(i),
                });
            }
            if x.abs() >= T::one() {
                return Err(ParamError::CorrelationOutOfRange {
                    index: i,
                    value: to_f64(x),
                });
            }
        }
        let check_finite = |field: &'static str, v: &[T]| {
            for (i, &x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return Err(ParamError::NotFinite {
                        field,
                        index: Some(i),
                    });
                }
            }
            Ok(())
        };
        check_finite("q0", &self.q0)?;
        check_finite("r", &self.reservation)?;
        if !self.mu.is_finite() {
            return Err(ParamError::NotFinite {
                field: "mu",
                index: None,
            });
        }
        if !self.gamma_p.is_finite() {
            return Err(ParamError::NotFinite {
                field: "gamma_P",
                index: None,
            });
        }
        if self.gamma_p < T::zero() {
            return Err(ParamError::NegativeGammaP {
                value: to_f64(self.gamma_p),
            });
        }
        Ok(self)
    }

    /// Same economy with a different principal risk aversion.
    pub fn with_gamma_p(&self, gamma_p: T) -> Self {
        let mut p = self.clone();
        p.gamma_p = gamma_p;
        p
    }

    /// Number of free sensitivity coordinates, n^2 + n.
    pub fn dim(&self) -> usize {
        self.n * self.n + self.n
    }

    /// Serialize to the config document format accepted by [`load_config`].
    pub fn to_config_json(&self) -> String {
        let as_f64 = |v: &[T]| -> Vec<f64> { v.iter().map(|&x| to_f64(x)).collect() };
        let raw = RawConfig {
            n: self.n,
            c: NumberOrList::List(as_f64(&self.c)),
            gamma: NumberOrList::List(as_f64(&self.gamma)),
            nu: NumberOrList::List(as_f64(&self.nu)),
            rho: NumberOrList::List(as_f64(&self.rho)),
            sigma: to_f64(self.sigma),
            mu: Some(to_f64(self.mu)),
            s0: Some(to_f64(self.s0)),
            q0: Some(NumberOrList::List(as_f64(&self.q0))),
            gamma_p: to_f64(self.gamma_p),
            horizon: Some(to_f64(self.horizon)),
            reservation: Some(NumberOrList::List(as_f64(&self.reservation))),
        };
        serde_json::to_string_pretty(&raw).expect("config serialization cannot fail")
    }
}

/// Per-agent config fields accept either a scalar (broadcast to length n)
/// or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrList {
    Number(f64),
    List(Vec<f64>),
}

impl NumberOrList {
    fn broadcast(self, n: usize) -> Vec<f64> {
        match self {
            NumberOrList::Number(x) => vec![x; n],
            NumberOrList::List(v) => v,
        }
    }
}

/// On-disk schema. Keys: `n`, `c[]`, `gamma[]`, `nu[]`, `rho[]`, `sigma`,
/// `mu`, `s0`, `q0[]`, `gamma_P`, `T`, `r[]`. Missing optional fields default
/// to `mu = 0`, `s0 = 1`, `q0 = 0`, `T = 1`, `r = 0`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    c: NumberOrList,
    gamma: NumberOrList,
    nu: NumberOrList,
    rho: NumberOrList,
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q0: Option<NumberOrList>,
    #[serde(rename = "gamma_P")]
    gamma_p: f64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    #[serde(rename = "r", default, skip_serializing_if = "Option::is_none")]
    reservation: Option<NumberOrList>,
}

/// Parse an economy from a JSON config document.
pub fn load_config<T: Real>(source: &str) -> Result<ModelParams<T>, ConfigError> {
    let raw: RawConfig = serde_json::from_str(source)?;
    let n = raw.n;
    let lift = |v: Vec<f64>| -> Vec<T> { v.into_iter().map(real).collect() };
    let params = ModelParams {
        n,
        c: lift(raw.c.broadcast(n)),
        gamma: lift(raw.gamma.broadcast(n)),
        nu: lift(raw.nu.broadcast(n)),
        rho: lift(raw.rho.broadcast(n)),
        sigma: real(raw.sigma),
        mu: real(raw.mu.unwrap_or(0.0)),
        s0: real(raw.s0.unwrap_or(1.0)),
        q0: lift(raw.q0.map_or_else(|| vec![0.0; n], |v| v.broadcast(n))),
        gamma_p: real(raw.gamma_p),
        horizon: real(raw.horizon.unwrap_or(1.0)),
        reservation: lift(
            raw.reservation
                .map_or_else(|| vec![0.0; n], |v| v.broadcast(n)),
        ),
    }
    .validate()?;
    Ok(params)
}

/// Parse an economy from a config file on disk.
pub fn load_config_file<T: Real>(path: &std::path::Path) -> Result<ModelParams<T>, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text)
}

/// Bundled benchmark calibrations. Reservation levels are not part of the
/// calibrations; they default to zero (they shift each contract by a constant
/// and leave every sensitivity unchanged).
pub mod calibrations {
    use super::ModelParams;
    use crate::scalar::{real, Real};

    /// Six-agent homogeneous benchmark (c = 1.2, gamma = 1, nu = 1,
    /// rho = 0.6, sigma = 1).
    pub fn table1<T: Real>(gamma_p: T) -> ModelParams<T> {
        ModelParams::homogeneous(
            6,
            real(1.2),
            T::one(),
            T::one(),
            real(0.6),
            T::one(),
            gamma_p,
            T::zero(),
            T::one(),
            T::zero(),
            T::one(),
            T::zero(),
        )
        .expect("bundled calibration is valid")
    }

    /// Six-agent heterogeneous calibration with one-sided positive
    /// correlations.
    pub fn table2<T: Real>(gamma_p: T) -> ModelParams<T> {
        let lift = |v: [f64; 6]| -> Vec<T> { v.iter().map(|&x| real(x)).collect() };
        ModelParams::new(
            lift([1.2, 1.0, 1.5, 1.3, 2.0, 2.5]),
            lift([1.0, 1.2, 0.9, 1.1, 1.3, 1.0]),
            lift([1.0, 0.9, 1.1, 1.0, 1.2, 0.8]),
            lift([0.75, 0.55, 0.45, 0.35, 0.15, 0.25]),
            T::one(),
            T::zero(),
            T::one(),
            vec![T::zero(); 6],
            gamma_p,
            T::one(),
            vec![T::zero(); 6],
        )
        .expect("bundled calibration is valid")
    }

    /// Four-agent calibration whose third diagonal loading changes sign as
    /// the principal's risk aversion grows.
    pub fn table3<T: Real>(gamma_p: T) -> ModelParams<T> {
        let lift = |v: [f64; 4]| -> Vec<T> { v.iter().map(|&x| real(x)).collect() };
        ModelParams::new(
            lift([0.001679, 0.021845, 25.315806, 0.009048]),
            lift([2.328781, 1.944496, 0.538463, 1.723001]),
            lift([1.404647, 1.945208, 0.480164, 1.553918]),
            lift([-0.746539, -0.894259, -0.850954, -0.605495]),
            T::one(),
            T::zero(),
            T::one(),
            vec![T::zero(); 4],
            gamma_p,
            T::one(),
            vec![T::zero(); 4],
        )
        .expect("bundled calibration is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_record_is_accepted() {
        let p = calibrations::table1::<f64>(1.0);
        assert_eq!(p.n, 6);
        assert_eq!(p.c, vec![1.2; 6]);
    }

    #[test]
    fn boundary_correlation_is_rejected() {
        let mut p = calibrations::table1::<f64>(1.0);
        p.rho[2] = 1.0;
        let err = p.validate().unwrap_err();
        assert_eq!(
            err,
            ParamError::CorrelationOutOfRange {
                index: 2,
                value: 1.0
            }
        );
        assert!(err.to_string().contains("correlation out of open interval"));
    }

    #[test]
    fn wrong_vector_length_is_rejected() {
        let mut p = calibrations::table1::<f64>(1.0);
        p.c.pop();
        let err = p.validate().unwrap_err();
        assert_eq!(
            err,
            ParamError::DimensionMismatch {
                field: "c",
                expected: 6,
                got: 5
            }
        );
    }

    #[test]
    fn nonpositive_fields_are_rejected_with_location() {
        let mut p = calibrations::table2::<f64>(1.0);
        p.nu[3] = -0.5;
        let err = p.clone().validate().unwrap_err();
        assert!(err.to_string().contains("nu[3]"));
        p.nu[3] = 1.0;
        p.sigma = 0.0;
        assert!(matches!(
            p.validate().unwrap_err(),
            ParamError::NonPositive { field: "sigma", .. }
        ));
    }

    #[test]
    fn negative_gamma_p_is_rejected_but_zero_is_fine() {
        let p = calibrations::table1::<f64>(0.0);
        assert_eq!(p.clone().validate().unwrap(), p);
        let mut bad = p;
        bad.gamma_p = -1e-9;
        assert!(matches!(
            bad.validate().unwrap_err(),
            ParamError::NegativeGammaP { .. }
        ));
    }

    #[test]
    fn validate_is_idempotent() {
        let p = calibrations::table3::<f64>(0.7);
        let once = p.clone().validate().unwrap();
        let twice = once.clone().validate().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn one_agent_and_zero_correlation_economies_are_valid() {
        assert!(ModelParams::<f64>::homogeneous(
            1, 1.2, 1.0, 1.0, 0.6, 1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 0.0
        )
        .is_ok());
        assert!(ModelParams::<f64>::homogeneous(
            4, 1.0, 1.0, 1.0, 0.0, 1.0, 0.5, 0.0, 1.0, 0.0, 1.0, 0.0
        )
        .is_ok());
    }

    #[test]
    fn config_round_trip_preserves_the_economy() {
        let p = calibrations::table2::<f64>(7.25);
        let text = p.to_config_json();
        let q: ModelParams<f64> = load_config(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn config_scalars_broadcast_and_defaults_fill() {
        let text = r#"{"n": 3, "c": 1.2, "gamma": 1.0, "nu": 1.0, "rho": 0.6,
                       "sigma": 1.0, "gamma_P": 2.0}"#;
        let p: ModelParams<f64> = load_config(text).unwrap();
        assert_eq!(p.c, vec![1.2; 3]);
        assert_eq!(p.mu, 0.0);
        assert_eq!(p.s0, 1.0);
        assert_eq!(p.q0, vec![0.0; 3]);
        assert_eq!(p.horizon, 1.0);
        assert_eq!(p.reservation, vec![0.0; 3]);
    }

    #[test]
    fn config_unknown_key_is_an_error() {
        let text = r#"{"n": 1, "c": 1.0, "gamma": 1.0, "nu": 1.0, "rho": 0.0,
                       "sigma": 1.0, "gamma_P": 1.0, "bogus": 3}"#;
        let err = load_config::<f64>(text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "got: {err}");
    }

    #[test]
    fn config_parse_error_carries_location() {
        let err = load_config::<f64>("{ not json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "got: {msg}");
    }

    #[test]
    fn config_validation_errors_propagate() {
        let text = r#"{"n": 2, "c": [1.0, 1.0], "gamma": 1.0, "nu": 1.0,
                       "rho": [0.5, 1.5], "sigma": 1.0, "gamma_P": 1.0}"#;
        let err = load_config::<f64>(text).unwrap_err();
        assert!(matches!(err, ConfigError::Param(_)));
    }
}
