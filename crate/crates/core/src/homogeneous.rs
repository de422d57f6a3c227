//! Closed forms for the symmetric (homogeneous) team.
//!
//! When every agent shares (c, gamma, nu, rho) the maximizer collapses to
//! three numbers: a common factor tilt `z_s`, a common off-diagonal signal
//! loading `z_o`, and a common own-signal loading `z_d`. This module carries
//! the closed forms at arbitrary penalty weight, their exact risk-neutral
//! (`gamma_p = 0`) and infinite-penalty limits, and the one-agent benchmark.

use crate::scalar::{real, real_of, Real};

/// Scalars shared by the homogeneous formulas.
#[derive(Debug, Clone)]
pub struct HomogeneousIntermediates<T> {
    /// a = gamma + 1/(c nu^2).
    pub a: T,
    /// delta = 1 - gamma/a = 1/(a c nu^2).
    pub delta: T,
    /// alpha = gamma_p/(n gamma).
    pub alpha: T,
    /// beta = sigma rho / sqrt(n).
    pub beta: T,
    /// kappa_tilde = a + (gamma_p/n) ((n-1) a / gamma + 1).
    pub kappa_tilde: T,
    /// kappa = kappa_tilde / a.
    pub kappa: T,
    /// The strictly positive scalar denominator of the tilt formula.
    pub denominator: T,
    /// eta = rho^2 ((n-1) + gamma/a), in [0, n).
    pub eta: T,
    /// Signal-scale threshold where |z_s(0)| switches from increasing to
    /// decreasing in nu.
    pub nu_dagger: T,
}

/// The three sensitivities of the symmetric team plus the common column
/// residual. `z_o` is absent for a one-agent team.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSolution<T> {
    pub z_s: T,
    pub z_o: Option<T>,
    pub z_d: T,
    pub k_star: T,
}

/// Exact `gamma_p = 0` values together with the nu-monotonicity threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskNeutralHomogeneous<T> {
    pub z_s: T,
    pub z_o: Option<T>,
    pub z_d: T,
    pub nu_dagger: T,
}

/// Exact `gamma_p -> infinity` limits. The tilt limit is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledLimits<T> {
    pub z_s: T,
    pub z_o: Option<T>,
    pub z_d: T,
}

pub fn intermediates<T: Real>(
    n: usize,
    c: T,
    gamma: T,
    nu: T,
    rho: T,
    sigma: T,
    gamma_p: T,
) -> HomogeneousIntermediates<T> {
    let nf = real_of::<T>(n);
    let a = gamma + T::one() / (c * nu * nu);
    let delta = T::one() - gamma / a;
    let alpha = gamma_p / (nf * gamma);
    let beta = sigma * rho / nf.sqrt();
    let kappa_tilde = a + gamma_p / nf * ((nf - T::one()) * a / gamma + T::one());
    let kappa = kappa_tilde / a;
    let rho2 = rho * rho;
    let denominator = (gamma + gamma_p) * (T::one() - rho2)
        + gamma * rho2 * delta / nf
        + gamma_p * rho2 * delta * delta / (nf * nf * kappa);
    let eta = rho2 * ((nf - T::one()) + gamma / a);
    let one_minus_rho2 = T::one() - rho2;
    let nu_dagger = ((nf * one_minus_rho2 + rho2) / (gamma * c * nf * one_minus_rho2)).sqrt();
    HomogeneousIntermediates {
        a,
        delta,
        alpha,
        beta,
        kappa_tilde,
        kappa,
        denominator,
        eta,
        nu_dagger,
    }
}

/// The unique maximizer of the symmetric team at penalty weight `gamma_p`.
pub fn closed_form<T: Real>(
    n: usize,
    c: T,
    gamma: T,
    nu: T,
    rho: T,
    sigma: T,
    gamma_p: T,
) -> HomogeneousSolution<T> {
    let nf = real_of::<T>(n);
    let it = intermediates(n, c, gamma, nu, rho, sigma, gamma_p);
    let z_s = -(rho * gamma) / (it.a * c * sigma * nu * nf.sqrt() * it.denominator)
        * (T::one() - gamma_p / (nf * it.kappa_tilde));
    let k_star = (gamma * nu / it.a - it.beta * it.delta * z_s) / it.kappa;
    let z_o = (n >= 2).then(|| (it.alpha * k_star - it.beta * z_s) / nu);
    let z_d = (gamma_p / nf * k_star - gamma * it.beta * z_s + T::one() / (c * nu)) / (nu * it.a);
    HomogeneousSolution {
        z_s,
        z_o,
        z_d,
        k_star,
    }
}

/// Exact values in the risk-neutral regime, where the rows decouple.
pub fn risk_neutral<T: Real>(
    n: usize,
    c: T,
    gamma: T,
    nu: T,
    rho: T,
    sigma: T,
) -> RiskNeutralHomogeneous<T> {
    let nf = real_of::<T>(n);
    let it = intermediates(n, c, gamma, nu, rho, sigma, T::zero());
    let gap = nf - it.eta;
    let acnu2 = it.a * c * nu * nu;
    let z_s = -(nf.sqrt() / sigma) * rho / (it.a * c * nu * gap);
    let z_o = (n >= 2).then(|| rho * rho / (acnu2 * gap));
    let z_d = (T::one() + gamma * rho * rho / it.a / gap) / acnu2;
    RiskNeutralHomogeneous {
        z_s,
        z_o,
        z_d,
        nu_dagger: it.nu_dagger,
    }
}

/// Exact limits as the penalty weight grows without bound. Correlation and
/// factor volatility drop out entirely.
pub fn pooled_limits<T: Real>(n: usize, c: T, gamma: T, nu: T) -> PooledLimits<T> {
    let nf = real_of::<T>(n);
    let a = gamma + T::one() / (c * nu * nu);
    let den = (nf - T::one()) * a + gamma;
    let z_o = (n >= 2).then(|| gamma / den);
    let z_d = ((nf - T::one()) * a - (nf - real::<T>(2.0)) * gamma) / den;
    PooledLimits {
        z_s: T::zero(),
        z_o,
        z_d,
    }
}

/// One-agent benchmark: no peer channel, only the own-signal incentive
/// against the traded-factor hedge.
pub fn one_agent<T: Real>(c: T, gamma: T, nu: T, rho: T, sigma: T, gamma_p: T) -> (T, T) {
    let one_minus_rho2 = T::one() - rho * rho;
    let z_s = -(gamma * nu * rho)
        / (sigma
            * (gamma + gamma_p)
            * (T::one() + c * nu * nu * (gamma + gamma_p) * one_minus_rho2));
    let z_d = (T::one() + gamma_p * c * nu * nu * one_minus_rho2)
        / (T::one() + (gamma + gamma_p) * c * nu * nu * one_minus_rho2);
    (z_s, z_d)
}
