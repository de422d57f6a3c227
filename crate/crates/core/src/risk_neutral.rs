//! The risk-neutral-principal regime and its sign structure.
//!
//! As `gamma_p -> 0` the objective separates across contract rows and each
//! row solves a small system with an explicit solution: the tilt of row i
//! leans against its own correlation, the diagonal signal loading stays
//! positive, and the off-diagonal loading of row i on signal j carries the
//! sign of `rho_i * rho_j`. Those strict signs persist for small positive
//! penalty weights; [`persistence_scan`] locates how far along a penalty
//! grid a given economy keeps them.

use crate::error::Error;
use crate::linalg::Mat;
use crate::params::ModelParams;
use crate::scalar::{real, real_of, to_f64, Real};
use crate::sensitivities::Sensitivities;
use crate::solver::solve_direct;

/// Entries at or below this magnitude are treated as zero when classifying
/// signs; the persistence claims only cover strict signs.
pub const STRICT_SIGN_TOL: f64 = 1e-12;

/// The exact row-decoupled solution at `gamma_p = 0`.
#[derive(Debug, Clone)]
pub struct RiskNeutralSolution<T> {
    /// Factor tilts, one per contract row.
    pub s0: Vec<T>,
    /// Scaled signal loadings `q0[i][j] = nu_j * z_q[i][j]`.
    pub q0: Mat<T>,
    /// Row exposure shares `pi[i]`, each in [0, n).
    pub pi: Vec<T>,
    /// Per-row signal-scale thresholds for the |tilt| comparative statics.
    pub nu_dagger: Vec<T>,
}

impl<T: Real> RiskNeutralSolution<T> {
    /// Convert the scaled loadings back into plain sensitivities.
    pub fn sensitivities(&self, p: &ModelParams<T>) -> Sensitivities<T> {
        let n = p.n;
        let z_q = Mat::from_fn(n, n, |i, j| self.q0[(i, j)] / p.nu[j]);
        Sensitivities {
            z_q,
            z_s: self.s0.clone(),
        }
    }
}

/// Closed-form maximizer in the risk-neutral limit. The `gamma_p` field of
/// the economy is ignored.
pub fn risk_neutral_heterogeneous<T: Real>(p: &ModelParams<T>) -> RiskNeutralSolution<T> {
    let n = p.n;
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let rho_norm2: T = p.rho.iter().map(|&r| r * r).sum();

    let a: Vec<T> = (0..n)
        .map(|i| p.gamma[i] + T::one() / (p.c[i] * p.nu[i] * p.nu[i]))
        .collect();
    let pi: Vec<T> = (0..n)
        .map(|i| {
            let rho2 = p.rho[i] * p.rho[i];
            rho_norm2 - rho2 + p.gamma[i] / a[i] * rho2
        })
        .collect();
    let s0: Vec<T> = (0..n)
        .map(|i| -(sqrt_n / p.sigma) * p.rho[i] / (a[i] * p.c[i] * p.nu[i] * (nf - pi[i])))
        .collect();
    let q0 = Mat::from_fn(n, n, |i, j| {
        if i == j {
            (T::one() / (p.c[i] * p.nu[i]) - p.gamma[i] * p.sigma / sqrt_n * p.rho[i] * s0[i])
                / a[i]
        } else {
            -(p.sigma / sqrt_n) * s0[i] * p.rho[j]
        }
    });
    let nu_dagger: Vec<T> = (0..n)
        .map(|i| {
            let rho2 = p.rho[i] * p.rho[i];
            ((nf - rho_norm2 + rho2) / (p.gamma[i] * p.c[i] * (nf - rho_norm2))).sqrt()
        })
        .collect();
    RiskNeutralSolution {
        s0,
        q0,
        pi,
        nu_dagger,
    }
}

/// Classification of one entry against the strict-sign tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

pub fn classify<T: Real>(value: T) -> Sign {
    let tol = real::<T>(STRICT_SIGN_TOL);
    if value > tol {
        Sign::Positive
    } else if value < -tol {
        Sign::Negative
    } else {
        Sign::Zero
    }
}

/// Per-entry sign classification of a sensitivity pair plus the three
/// aggregate verdicts of the risk-neutral sign structure. Entries whose
/// correlation product vanishes are excluded ("unconstrained"): continuity
/// keeps them small but not exactly zero away from the limit.
#[derive(Debug, Clone)]
pub struct SignReport {
    pub tilt_signs: Vec<Sign>,
    pub q_signs: Vec<Vec<Sign>>,
    pub diagonal_all_positive: bool,
    pub tilt_anti_rho: bool,
    pub offdiag_matches_rho_product: bool,
    /// (i, j) pairs skipped because `rho_i * rho_j = 0`.
    pub unconstrained: Vec<(usize, usize)>,
}

pub fn sign_pattern<T: Real>(s: &Sensitivities<T>, rho: &[T]) -> SignReport {
    let n = s.n();
    assert_eq!(rho.len(), n, "rho sized for a different team");
    let tilt_signs: Vec<Sign> = s.z_s.iter().map(|&v| classify(v)).collect();
    let q_signs: Vec<Vec<Sign>> = (0..n)
        .map(|i| (0..n).map(|j| classify(s.z_q[(i, j)])).collect())
        .collect();

    let diagonal_all_positive = (0..n).all(|i| q_signs[i][i] == Sign::Positive);

    let mut unconstrained = Vec::new();
    let mut tilt_anti_rho = true;
    for i in 0..n {
        match classify(rho[i]) {
            Sign::Zero => unconstrained.push((i, i)),
            Sign::Positive => tilt_anti_rho &= tilt_signs[i] == Sign::Negative,
            Sign::Negative => tilt_anti_rho &= tilt_signs[i] == Sign::Positive,
        }
    }

    let mut offdiag_matches_rho_product = true;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            match classify(rho[i] * rho[j]) {
                Sign::Zero => unconstrained.push((i, j)),
                expected => offdiag_matches_rho_product &= q_signs[i][j] == expected,
            }
        }
    }

    SignReport {
        tilt_signs,
        q_signs,
        diagonal_all_positive,
        tilt_anti_rho,
        offdiag_matches_rho_product,
        unconstrained,
    }
}

/// Which strict signs a persistence scan tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternScope {
    /// Every strict entry of the risk-neutral solution (tilts, diagonals,
    /// off-diagonals).
    Full,
    /// Only the diagonal signal loadings (positivity of the induced
    /// actions).
    Diagonal,
}

/// Strict signs of the risk-neutral solution, the baseline for persistence.
fn strict_baseline<T: Real>(p: &ModelParams<T>, scope: PatternScope) -> Vec<(usize, Sign)> {
    let n = p.n;
    let base = risk_neutral_heterogeneous(p).sensitivities(p);
    let tracked = |k: usize| match scope {
        PatternScope::Full => true,
        PatternScope::Diagonal => (0..n).any(|i| k == Sensitivities::<T>::q_index(n, i, i)),
    };
    base.to_stacked()
        .iter()
        .enumerate()
        .filter(|&(k, _)| tracked(k))
        .filter_map(|(k, &v)| match classify(v) {
            Sign::Zero => None,
            sign => Some((k, sign)),
        })
        .collect()
}

/// Walk an increasing penalty grid and return the largest grid value at
/// which every tracked strict risk-neutral sign is unchanged (zero if even
/// the first point flips some sign). The scan is an empirical proxy: it
/// brackets the persistence radius by grid resolution, it does not compute
/// it.
pub fn persistence_scan<T: Real>(
    p: &ModelParams<T>,
    grid: &[T],
    scope: PatternScope,
) -> Result<T, Error> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "persistence scan needs a non-empty gamma_P grid".into(),
        ));
    }
    let mut prev = T::zero();
    for (k, &gamma_p) in grid.iter().enumerate() {
        if gamma_p <= prev {
            return Err(Error::InvalidArgument(format!(
                "gamma_P grid must be strictly increasing and positive (entry {k} = {})",
                to_f64(gamma_p)
            )));
        }
        prev = gamma_p;
    }

    let baseline = strict_baseline(p, scope);
    let mut last_ok = T::zero();
    for &gamma_p in grid {
        let sol = solve_direct(&p.with_gamma_p(gamma_p))?;
        let x = sol.to_stacked();
        let intact = baseline.iter().all(|&(k, sign)| classify(x[k]) == sign);
        if !intact {
            return Ok(last_ok);
        }
        last_ok = gamma_p;
    }
    Ok(last_ok)
}
