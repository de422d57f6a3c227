//! Randomized economies and points for the verification suites.
//!
//! The draw spans every regime the solvers must cover: cost, risk-aversion,
//! and signal scales log-uniform on [0.2, 5], correlations uniform on
//! [-0.95, 0.95] (approaching but never touching the degenerate boundary),
//! and the principal's risk aversion log-uniform across six decades
//! [1e-3, 1e3].

use rand::Rng;
use std::ops::RangeInclusive;

use crate::linalg::Mat;
use crate::params::ModelParams;
use crate::sensitivities::Sensitivities;

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Draw a validated economy with team size in `n_range`.
pub fn random_economy(rng: &mut impl Rng, n_range: RangeInclusive<usize>) -> ModelParams<f64> {
    let n = rng.gen_range(n_range);
    let gamma_p = log_uniform(rng, 1e-3, 1e3);
    random_economy_with_gamma_p(rng, n, gamma_p)
}

pub fn random_economy_with_gamma_p(rng: &mut impl Rng, n: usize, gamma_p: f64) -> ModelParams<f64> {
    let c: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.2, 5.0)).collect();
    let gamma: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.2, 5.0)).collect();
    let nu: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.2, 5.0)).collect();
    let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.95..0.95)).collect();
    ModelParams::new(
        c,
        gamma,
        nu,
        rho,
        log_uniform(rng, 0.3, 3.0),
        rng.gen_range(-0.5..0.5),
        1.0,
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        gamma_p,
        1.0,
        vec![0.0; n],
    )
    .expect("random draw respects the parameter ranges")
}

/// A random candidate sensitivity pair with entries in [-2, 2].
pub fn random_sensitivities(rng: &mut impl Rng, n: usize) -> Sensitivities<f64> {
    Sensitivities {
        z_q: Mat::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)),
        z_s: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    }
}
