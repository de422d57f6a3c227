//! Maximizers of the principal's objective.
//!
//! Three independent routes to the same unique maximizer:
//!
//! 1. [`solve_direct`] assembles the stationarity system `H x = -b` from the
//!    analytic blocks and solves it densely.
//! 2. [`solve_closed_form`] evaluates the closed-form solution: the factor
//!    tilts come from a diagonal-plus-rank-one system inverted by the
//!    Sherman-Morrison-Woodbury identity, and the signal loadings follow
//!    row by row from the column residuals.
//! 3. [`brute_force_maximize`] never touches the analytic assembly: it
//!    rebuilds curvature and slope purely from finite differences of the
//!    objective value and Newton-iterates to stationarity.
//!
//! Their mutual agreement (1e-10 between the analytic pair, 1e-6 against the
//! finite-difference route) is asserted across randomized economies in the
//! acceptance suite.

use crate::error::Error;
use crate::linalg::{norm_inf_vec, solve, Lu, Mat};
use crate::numdiff;
use crate::objective::{eval_f, gradient, hessian_blocks};
use crate::params::ModelParams;
use crate::scalar::{real, real_of, to_f64, Real};
use crate::sensitivities::Sensitivities;

/// Scalars of the closed form. `k_affine` exposes the column residual
/// K_i(z_s) = d[i] - m[i] * z_s[i] once the tilts are known.
#[derive(Debug, Clone)]
pub struct ClosedFormIntermediates<T> {
    /// a[i] = gamma_i + 1/(c_i nu_i^2); the own-signal incentive/risk trade-off.
    pub a: Vec<T>,
    /// alpha[i] = gamma_p / (n gamma_i).
    pub alpha: Vec<T>,
    /// kappa[i] = 1 + (gamma_p/n) (sum_l 1/gamma_l - (1 - gamma_i/a_i)/gamma_i).
    pub kappa: Vec<T>,
    /// d[i] = (nu_i - 1/(c_i nu_i a_i)) / kappa[i].
    pub d: Vec<T>,
    /// m[i] = sigma rho_i (1 - gamma_i/a_i) / (sqrt(n) kappa[i]).
    pub m: Vec<T>,
    /// mu_diag[i]: diagonal of the tilt system, strictly positive.
    pub mu_diag: Vec<T>,
    /// ell[i]: right-hand side of the tilt system.
    pub ell: Vec<T>,
    /// lambda = (gamma_p sigma^2 / n^3) sum_j (1 - rho_j^2), the rank-one weight.
    pub lambda: T,
    /// s_vec[i] = 1 / mu_diag[i].
    pub s_vec: Vec<T>,
    /// y = lambda / (1 + lambda sum_i s_vec[i]), the Sherman-Morrison factor.
    pub y: T,
}

impl<T: Real> ClosedFormIntermediates<T> {
    /// Column residual as an affine map of the own tilt.
    pub fn k_affine(&self, i: usize, z_s_i: T) -> T {
        self.d[i] - self.m[i] * z_s_i
    }
}

/// Evaluate every scalar of the closed form. Valid for any `gamma_p >= 0`;
/// at zero the penalty-driven terms vanish (alpha = 0, lambda = 0, kappa = 1).
pub fn compute_intermediates<T: Real>(p: &ModelParams<T>) -> ClosedFormIntermediates<T> {
    let n = p.n;
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let n3 = nf * nf * nf;
    let n52 = nf * nf * sqrt_n;
    let n32 = nf * sqrt_n;

    let a: Vec<T> = (0..n)
        .map(|i| p.gamma[i] + T::one() / (p.c[i] * p.nu[i] * p.nu[i]))
        .collect();
    let alpha: Vec<T> = (0..n).map(|i| p.gamma_p / (nf * p.gamma[i])).collect();
    let inv_gamma_sum: T = (0..n).map(|l| T::one() / p.gamma[l]).sum();
    let kappa: Vec<T> = (0..n)
        .map(|i| {
            let residual_share = (T::one() - p.gamma[i] / a[i]) / p.gamma[i];
            T::one() + p.gamma_p / nf * (inv_gamma_sum - residual_share)
        })
        .collect();
    let d: Vec<T> = (0..n)
        .map(|i| (p.nu[i] - T::one() / (p.c[i] * p.nu[i] * a[i])) / kappa[i])
        .collect();
    let m: Vec<T> = (0..n)
        .map(|i| p.sigma / (sqrt_n * kappa[i]) * p.rho[i] * (T::one() - p.gamma[i] / a[i]))
        .collect();

    let rho2_sum: T = (0..n).map(|j| p.rho[j] * p.rho[j]).sum();
    let mu_diag: Vec<T> = (0..n)
        .map(|i| {
            let delta_i = T::one() - p.gamma[i] / a[i];
            p.gamma[i] * p.sigma * p.sigma / nf
                * (T::one() - rho2_sum / nf + delta_i * p.rho[i] * p.rho[i] / nf)
                + p.gamma_p * p.sigma * p.sigma * p.rho[i] * p.rho[i] / (kappa[i] * n3)
                    * delta_i
                    * delta_i
        })
        .collect();
    let ell: Vec<T> = (0..n)
        .map(|i| {
            let delta_i = T::one() - p.gamma[i] / a[i];
            p.gamma_p * p.sigma * p.rho[i] / n52 * delta_i * d[i]
                - p.gamma[i] * p.sigma / n32 * p.rho[i] / (a[i] * p.c[i] * p.nu[i])
        })
        .collect();

    let lambda = p.gamma_p * p.sigma * p.sigma / n3
        * (0..n).map(|j| T::one() - p.rho[j] * p.rho[j]).sum::<T>();
    let s_vec: Vec<T> = mu_diag.iter().map(|&mu| T::one() / mu).collect();
    let y = lambda / (T::one() + lambda * s_vec.iter().copied().sum::<T>());

    ClosedFormIntermediates {
        a,
        alpha,
        kappa,
        d,
        m,
        mu_diag,
        ell,
        lambda,
        s_vec,
        y,
    }
}

/// Solve the stationarity system `H x = -b` densely.
pub fn solve_direct<T: Real>(p: &ModelParams<T>) -> Result<Sensitivities<T>, Error> {
    let sys = hessian_blocks(p);
    let h = sys.assemble_hessian();
    let b = sys.assemble_rhs();
    let neg_b: Vec<T> = b.iter().map(|&v| -v).collect();
    let x = solve(&h, &neg_b, "solving the stationarity system")?;

    let hx = h.matvec(&x);
    let resid = norm_inf_vec(
        &hx.iter()
            .zip(&neg_b)
            .map(|(&l, &r)| l - r)
            .collect::<Vec<T>>(),
    );
    let tol = real::<T>(1e-10) * (T::one() + norm_inf_vec(&b));
    if resid > tol {
        return Err(Error::Singular {
            context: "solving the stationarity system (residual above tolerance)",
        });
    }
    Ok(Sensitivities::from_stacked(p.n, &x))
}

/// Evaluate the closed-form maximizer.
pub fn solve_closed_form<T: Real>(p: &ModelParams<T>) -> Sensitivities<T> {
    let inter = compute_intermediates(p);
    let n = p.n;
    let sqrt_n = real_of::<T>(n).sqrt();
    let nf = real_of::<T>(n);

    // Tilt system (D + lambda 11^T) z_s = ell, inverted as S - y s s^T.
    let s_dot_ell: T = inter
        .s_vec
        .iter()
        .zip(&inter.ell)
        .map(|(&s, &l)| s * l)
        .sum();
    let z_s: Vec<T> = (0..n)
        .map(|i| inter.s_vec[i] * inter.ell[i] - inter.y * inter.s_vec[i] * s_dot_ell)
        .collect();

    let mut z_q = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let q_ij = if i == j {
                (p.gamma_p / nf * inter.k_affine(i, z_s[i])
                    - p.gamma[i] * p.sigma / sqrt_n * p.rho[i] * z_s[i]
                    + T::one() / (p.c[i] * p.nu[i]))
                    / inter.a[i]
            } else {
                inter.alpha[i] * inter.k_affine(j, z_s[j]) - p.sigma / sqrt_n * p.rho[j] * z_s[i]
            };
            z_q[(i, j)] = q_ij / p.nu[j];
        }
    }
    Sensitivities { z_q, z_s }
}

/// Maximize the objective with no access to the analytic derivatives:
/// curvature and slope come from central differences of the value alone,
/// followed by Newton refinement until the finite-difference gradient is
/// below `tol` in sup norm.
pub fn brute_force_maximize<T: Real>(
    p: &ModelParams<T>,
    tol: T,
) -> Result<Sensitivities<T>, Error> {
    let n = p.n;
    let dim = p.dim();
    let value = |x: &[T]| eval_f(p, &Sensitivities::from_stacked(n, x));

    let origin = vec![T::zero(); dim];
    let h_fd = numdiff::hessian(value, &origin);
    let lu = Lu::factor(&h_fd, "factorizing the finite-difference curvature")?;

    // The objective is exactly quadratic, so the wide second-difference step
    // is also the right step for the internal gradient: no truncation error,
    // and the division by h stops amplifying value roundoff at large
    // penalty weights.
    let step = real::<T>(numdiff::HESSIAN_STEP);
    let mut x = origin;
    for _ in 0..12 {
        let g = numdiff::gradient_with_step(value, &x, step);
        if norm_inf_vec(&g) <= tol {
            return Ok(Sensitivities::from_stacked(n, &x));
        }
        let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
        let step = lu.solve(&neg_g);
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += *si;
        }
    }
    Err(Error::NoConvergence {
        context: "brute-force maximization",
        condition: to_f64(lu.condition_estimate()),
    })
}

/// Sup norm of the analytic gradient at a candidate point; the stationarity
/// certificate used by the verification suites.
pub fn stationarity_gap<T: Real>(p: &ModelParams<T>, s: &Sensitivities<T>) -> T {
    norm_inf_vec(&gradient(p, s).to_stacked())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::calibrations;
    use crate::testutil::{random_economy, random_sensitivities};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn intermediates_on_the_homogeneous_benchmark() {
        let p = calibrations::table1::<f64>(2.0);
        let inter = compute_intermediates(&p);
        for i in 0..p.n {
            assert!((inter.a[i] - (1.0 + 1.0 / 1.2)).abs() < 1e-12);
            assert!(inter.a[i] > p.gamma[i]);
            assert!(inter.kappa[i] >= 1.0);
            assert!(inter.mu_diag[i] > 0.0);
        }
        assert!(inter.lambda > 0.0);
    }

    #[test]
    fn intermediates_vanish_with_the_penalty() {
        let p = calibrations::table2::<f64>(0.0);
        let inter = compute_intermediates(&p);
        assert!(inter.lambda == 0.0);
        assert!(inter.y == 0.0);
        for i in 0..p.n {
            assert_eq!(inter.alpha[i], 0.0);
            assert_eq!(inter.kappa[i], 1.0);
        }
    }

    #[test]
    fn zero_correlation_zeroes_the_tilt_coupling() {
        let p = ModelParams::<f64>::homogeneous(
            5, 1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0, 0.0, 1.0, 0.0,
        )
        .unwrap();
        let inter = compute_intermediates(&p);
        for i in 0..p.n {
            assert_eq!(inter.m[i], 0.0);
            assert_eq!(inter.ell[i], 0.0);
        }
        // Decoupled block: the optimal tilt is identically zero.
        let s = solve_direct(&p).unwrap();
        assert!(norm_inf_vec(&s.z_s) < 1e-15);
    }

    #[test]
    fn homogeneous_benchmark_risk_neutral_values() {
        // Independent oracle: the rational forms with denominator
        // c*gamma*n*(1-rho^2)*nu^2 + n*(1-rho^2) + rho^2 = 8.808.
        let p = calibrations::table1::<f64>(0.0);
        let s = solve_direct(&p).unwrap();
        let den: f64 = 1.2 * 6.0 * 0.64 + 6.0 * 0.64 + 0.36;
        assert!((den - 8.808).abs() < 1e-12);
        let z_s = -(6.0f64).sqrt() * 0.6 / den;
        let z_o = 0.36 / den;
        let z_d = (6.0 * 0.64 + 0.36) / den;
        for i in 0..p.n {
            assert!((s.z_s[i] - z_s).abs() < 1e-10);
            assert!((s.z_q[(i, i)] - z_d).abs() < 1e-10);
            for j in 0..p.n {
                if j != i {
                    assert!((s.z_q[(i, j)] - z_o).abs() < 1e-10);
                }
            }
        }
        // Five-decimal desk values.
        assert!((z_s - (-0.16686)).abs() < 1e-5);
        assert!((z_o - 0.04087).abs() < 1e-5);
        assert!((z_d - 0.47684).abs() < 1e-5);
    }

    #[test]
    fn closed_form_agrees_with_direct_solve_onrandomized_economies() {
        let mut rng = StdRng::seed_from_u64(20);
        for _ in 0..60 {
            let p = random_economy(&mut rng, 1..=8);
            let direct = solve_direct(&p).unwrap();
            let closed = solve_closed_form(&p);
            let gap = direct.max_abs_diff(&closed);
            assert!(gap <= 1e-10, "closed form vs direct gap {gap}");
        }
    }

    #[test]
    fn closed_form_handles_the_risk_neutral_boundary() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.gen_range(1..=8);
            let p = crate::testutil::random_economy_with_gamma_p(&mut rng, n, 0.0);
            let direct = solve_direct(&p).unwrap();
            let closed = solve_closed_form(&p);
            assert!(direct.max_abs_diff(&closed) <= 1e-10);
        }
    }

    #[test]
    fn large_penalty_matches_the_pooled_limits() {
        let p = calibrations::table1::<f64>(1e6);
        let s = solve_closed_form(&p);
        for i in 0..p.n {
            assert!((s.z_q[(i, i)] - 0.508197).abs() < 1e-4);
            for j in 0..p.n {
                if j != i {
                    assert!((s.z_q[(i, j)] - 0.098361).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn one_agent_closed_form_matches_the_scalar_benchmark() {
        let p = ModelParams::<f64>::homogeneous(
            1, 1.2, 1.0, 1.0, 0.6, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0,
        )
        .unwrap();
        let s = solve_closed_form(&p);
        assert!((s.z_s[0] - (-0.6 / 1.768)).abs() < 1e-12);
        assert!((s.z_q[(0, 0)] - 1.0 / 1.768).abs() < 1e-12);
        assert!((s.z_s[0] - (-0.339367)).abs() < 1e-6);
        assert!((s.z_q[(0, 0)] - 0.565611).abs() < 1e-6);
    }

    #[test]
    fn brute_force_agrees_with_the_analytic_routes() {
        let p = calibrations::table1::<f64>(1.0);
        let direct = solve_direct(&p).unwrap();
        let brute = brute_force_maximize(&p, 1e-8).unwrap();
        assert!(direct.max_abs_diff(&brute) <= 1e-6);
        // Attained objective values agree too.
        let f_gap = (eval_f(&p, &direct) - eval_f(&p, &brute)).abs();
        assert!(f_gap <= 1e-8, "objective value gap {f_gap}");

        let p2 = calibrations::table2::<f64>(40.0);
        let closed = solve_closed_form(&p2);
        let brute2 = brute_force_maximize(&p2, 1e-8).unwrap();
        assert!(closed.max_abs_diff(&brute2) <= 1e-6);
        assert!((eval_f(&p2, &closed) - eval_f(&p2, &brute2)).abs() <= 1e-8);
    }

    #[test]
    fn stationarity_certificates_hold_at_the_solutions() {
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..30 {
            let p = random_economy(&mut rng, 1..=8);
            let closed = solve_closed_form(&p);
            assert!(
                stationarity_gap(&p, &closed) <= 1e-9,
                "closed-form gradient too large"
            );
            let direct = solve_direct(&p).unwrap();
            assert!(stationarity_gap(&p, &direct) <= 1e-9);
        }
    }

    #[test]
    fn flip_calibration_diagonal_vanishes_at_the_quoted_threshold() {
        let p = calibrations::table3::<f64>(0.629);
        let s = solve_direct(&p).unwrap();
        assert!(
            s.z_q[(2, 2)].abs() <= 1e-3,
            "third diagonal should sit at its crossing, got {}",
            s.z_q[(2, 2)]
        );
    }

    #[test]
    fn maximizer_beats_coordinate_probes() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..10 {
            let p = random_economy(&mut rng, 1..=5);
            let star = solve_closed_form(&p);
            let f_star = eval_f(&p, &star);
            let x = star.to_stacked();
            for k in 0..x.len() {
                for delta in [1e-3, -1e-3] {
                    let mut probe = x.clone();
                    probe[k] += delta;
                    let f_probe = eval_f(&p, &Sensitivities::from_stacked(p.n, &probe));
                    assert!(f_probe <= f_star + 1e-15);
                }
            }
        }
    }

    #[test]
    fn column_residuals_match_their_definition_at_the_solution() {
        let mut rng = StdRng::seed_from_u64(24);
        for _ in 0..20 {
            let p = random_economy(&mut rng, 1..=8);
            let inter = compute_intermediates(&p);
            let s = solve_closed_form(&p);
            let sqrt_n = (p.n as f64).sqrt();
            let tilt: f64 = s.z_s.iter().sum();
            for j in 0..p.n {
                // K_j = nu_j - sum_l q[l][j] - rho_j sigma/sqrt(n) * total tilt,
                // with q[l][j] = nu_j z_q[l][j].
                let col: f64 = (0..p.n).map(|l| p.nu[j] * s.z_q[(l, j)]).sum();
                let k_def = p.nu[j] - col - p.rho[j] * p.sigma / sqrt_n * tilt;
                let k_aff = inter.k_affine(j, s.z_s[j]);
                assert!(
                    (k_def - k_aff).abs() <= 1e-10 * (1.0 + k_def.abs()),
                    "column residual identity broken: {k_def} vs {k_aff}"
                );
            }
        }
    }

    #[test]
    fn brute_force_is_start_independent() {
        // A strictly concave quadratic has a single stationary point, so the
        // Newton route lands there regardless of where probing starts.
        let p = calibrations::table2::<f64>(5.0);
        let a = brute_force_maximize(&p, 1e-9).unwrap();
        let mut rng = StdRng::seed_from_u64(25);
        let start = random_sensitivities(&mut rng, p.n);
        // Re-run the Newton iteration by hand from the random start.
        let value = |x: &[f64]| eval_f(&p, &Sensitivities::from_stacked(p.n, x));
        let h = numdiff::hessian(value, &vec![0.0; p.dim()]);
        let lu = Lu::factor(&h, "test").unwrap();
        let mut x = start.to_stacked();
        for _ in 0..12 {
            let g = numdiff::gradient(value, &x);
            if norm_inf_vec(&g) <= 1e-9 {
                break;
            }
            let neg_g: Vec<f64> = g.iter().map(|&v| -v).collect();
            let dx = lu.solve(&neg_g);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        let b = Sensitivities::from_stacked(p.n, &x);
        assert!(a.max_abs_diff(&b) <= 1e-7);
    }
}
