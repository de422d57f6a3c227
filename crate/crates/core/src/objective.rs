//! The principal's reduced objective.
//!
//! With sensitivities `z = (z_q, z_s)`, the objective is
//!
//! ```text
//! f(z) = -(1/n) sum_i [ z_q[i][i]^2/(2 c_i)
//!                       + (gamma_i/2) sum_j nu_j^2 z_q[i][j]^2
//!                       + (gamma_i sigma^2/2) z_s[i]^2
//!                       + (gamma_i sigma/sqrt(n)) z_s[i] sum_j rho_j nu_j z_q[i][j]
//!                       - z_q[i][i]/c_i ]
//!        - (gamma_p/(2 n^2)) sum_i [ (nu_i - nu_i colsum_i(z_q)
//!                                     - (rho_i sigma/sqrt(n)) sum_k z_s[k])^2
//!                                    + ((1 - rho_i^2) sigma^2/n) (sum_k z_s[k])^2 ]
//! ```
//!
//! It is an affine-quadratic, globally concave function. This module
//! evaluates it three equivalent ways (directly, through its
//! completed-squares decomposition, and as `g - (gamma_p/2) * phi` where
//! `phi` is the aggregate-exposure penalty), and assembles its analytic
//! gradient and constant Hessian blocks.

use crate::linalg::Mat;
use crate::params::ModelParams;
use crate::scalar::{real, real_of, Real};
use crate::sensitivities::Sensitivities;

/// Hessian blocks and linear term of the objective, so that
/// `f(x) = f(0) + b.x + x.Hx/2` with `H = [[h_qq, h_qs], [h_qs^T, h_ss]]`
/// and `b = [vec(b_q); b_s]` in the stacked layout of [`Sensitivities`].
#[derive(Debug, Clone)]
pub struct FocSystem<T> {
    pub h_qq: Mat<T>,
    pub h_qs: Mat<T>,
    pub h_ss: Mat<T>,
    pub b_q: Mat<T>,
    pub b_s: Vec<T>,
}

impl<T: Real> FocSystem<T> {
    pub fn n(&self) -> usize {
        self.h_ss.rows()
    }

    /// Full (n^2 + n) x (n^2 + n) symmetric Hessian.
    pub fn assemble_hessian(&self) -> Mat<T> {
        let n = self.n();
        let nn = n * n;
        let mut h = Mat::zeros(nn + n, nn + n);
        for a in 0..nn {
            for b in 0..nn {
                h[(a, b)] = self.h_qq[(a, b)];
            }
        }
        for a in 0..nn {
            for k in 0..n {
                h[(a, nn + k)] = self.h_qs[(a, k)];
                h[(nn + k, a)] = self.h_qs[(a, k)];
            }
        }
        for i in 0..n {
            for j in 0..n {
                h[(nn + i, nn + j)] = self.h_ss[(i, j)];
            }
        }
        h
    }

    /// Linear term stacked to match the Hessian layout.
    pub fn assemble_rhs(&self) -> Vec<T> {
        let n = self.n();
        let mut b = vec![T::zero(); n * n + n];
        for j in 0..n {
            for i in 0..n {
                b[Sensitivities::<T>::q_index(n, i, j)] = self.b_q[(i, j)];
            }
        }
        b[n * n..].copy_from_slice(&self.b_s);
        b
    }
}

/// Per-signal aggregate-exposure residuals
/// `nu_i (1 - colsum_i) - (rho_i sigma / sqrt(n)) * total_tilt`.
fn exposure_residuals<T: Real>(p: &ModelParams<T>, s: &Sensitivities<T>) -> (Vec<T>, T) {
    let n = p.n;
    let sqrt_n = real_of::<T>(n).sqrt();
    let tilt = s.total_tilt();
    let colsums = s.column_sums();
    let res = (0..n)
        .map(|i| p.nu[i] * (T::one() - colsums[i]) - p.rho[i] * p.sigma / sqrt_n * tilt)
        .collect();
    (res, tilt)
}

/// Evaluate the objective in its direct double-sum form.
pub fn eval_f<T: Real>(p: &ModelParams<T>, s: &Sensitivities<T>) -> T {
    let n = p.n;
    assert_eq!(s.n(), n, "sensitivities sized for a different team");
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let half = real::<T>(0.5);

    let mut agent_cost = T::zero();
    for i in 0..n {
        let row = s.z_q.row(i);
        let zd = row[i];
        let quad: T = (0..n).map(|j| p.nu[j] * p.nu[j] * row[j] * row[j]).sum();
        let cross: T = (0..n).map(|j| p.rho[j] * p.nu[j] * row[j]).sum();
        agent_cost += zd * zd / (real::<T>(2.0) * p.c[i])
            + half * p.gamma[i] * quad
            + half * p.gamma[i] * p.sigma * p.sigma * s.z_s[i] * s.z_s[i]
            + p.gamma[i] * p.sigma / sqrt_n * s.z_s[i] * cross
            - zd / p.c[i];
    }

    let (res, tilt) = exposure_residuals(p, s);
    let mut penalty = T::zero();
    for i in 0..n {
        penalty += res[i] * res[i]
            + (T::one() - p.rho[i] * p.rho[i]) * p.sigma * p.sigma / nf * tilt * tilt;
    }

    -agent_cost / nf - half * p.gamma_p / (nf * nf) * penalty
}

/// Evaluate the objective through its completed-squares representation.
/// Must agree with [`eval_f`] to roundoff; the two routes share no code
/// beyond the penalty residuals.
pub fn eval_f_decomposed<T: Real>(p: &ModelParams<T>, s: &Sensitivities<T>) -> T {
    let n = p.n;
    assert_eq!(s.n(), n, "sensitivities sized for a different team");
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let half = real::<T>(0.5);
    let two_n = real::<T>(2.0) * nf;

    let const_term: T = (0..n).map(|i| T::one() / p.c[i]).sum::<T>() / two_n;

    let mut incentive = T::zero();
    let mut hedge_sq = T::zero();
    let mut row_quad = T::zero();
    for i in 0..n {
        let row = s.z_q.row(i);
        let dev = row[i] - T::one();
        incentive += dev * dev / p.c[i];
        // nu .* row, its rho-weighted sum, and the (I - rho rho^T / n) form.
        let cross: T = (0..n).map(|j| p.rho[j] * p.nu[j] * row[j]).sum();
        let hedge = p.sigma * s.z_s[i] + cross / sqrt_n;
        hedge_sq += p.gamma[i] * hedge * hedge;
        let quad: T = (0..n).map(|j| p.nu[j] * p.nu[j] * row[j] * row[j]).sum();
        row_quad += p.gamma[i] * (quad - cross * cross / nf);
    }

    let (res, tilt) = exposure_residuals(p, s);
    let mut penalty = T::zero();
    for i in 0..n {
        penalty += res[i] * res[i]
            + (T::one() - p.rho[i] * p.rho[i]) * p.sigma * p.sigma / nf * tilt * tilt;
    }

    const_term
        - incentive / two_n
        - hedge_sq / two_n
        - row_quad / two_n
        - half * p.gamma_p / (nf * nf) * penalty
}

/// Split the objective as `f = g - (gamma_p/2) * phi`: `g` collects the
/// row-by-row incentive and risk-sharing terms, `phi >= 0` is the squared
/// weighted distance to the market-neutral / identity-pooling constraint set
/// (zero exactly on it).
pub fn eval_g_phi<T: Real>(p: &ModelParams<T>, s: &Sensitivities<T>) -> (T, T) {
    let n = p.n;
    assert_eq!(s.n(), n, "sensitivities sized for a different team");
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let half = real::<T>(0.5);

    let mut agent_cost = T::zero();
    let mut action_value = T::zero();
    for i in 0..n {
        let row = s.z_q.row(i);
        let zd = row[i];
        let quad: T = (0..n).map(|j| p.nu[j] * p.nu[j] * row[j] * row[j]).sum();
        let cross: T = (0..n).map(|j| p.rho[j] * p.nu[j] * row[j]).sum();
        agent_cost += zd * zd / (real::<T>(2.0) * p.c[i])
            + half * p.gamma[i] * quad
            + half * p.gamma[i] * p.sigma * p.sigma * s.z_s[i] * s.z_s[i]
            + p.gamma[i] * p.sigma / sqrt_n * s.z_s[i] * cross;
        action_value += zd / p.c[i];
    }
    let g = (action_value - agent_cost) / nf;

    let (res, tilt) = exposure_residuals(p, s);
    let mut phi = T::zero();
    for i in 0..n {
        phi += res[i] * res[i]
            + (T::one() - p.rho[i] * p.rho[i]) * p.sigma * p.sigma / nf * tilt * tilt;
    }
    (g, phi / (nf * nf))
}

/// Analytic gradient, shaped like the sensitivities.
pub fn gradient<T: Real>(p: &ModelParams<T>, s: &Sensitivities<T>) -> Sensitivities<T> {
    let n = p.n;
    assert_eq!(s.n(), n, "sensitivities sized for a different team");
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let n32 = nf * sqrt_n;
    let n52 = nf * nf * sqrt_n;

    let (res, tilt) = exposure_residuals(p, s);

    let mut grad = Sensitivities::zeros(n);
    for i in 0..n {
        let row = s.z_q.row(i);
        for j in 0..n {
            let mut gij = -p.gamma[i] * p.nu[j] * p.nu[j] / nf * row[j]
                - p.gamma[i] * p.sigma * p.rho[j] * p.nu[j] / n32 * s.z_s[i]
                + p.gamma_p / (nf * nf) * p.nu[j] * res[j];
            if i == j {
                gij -= (row[i] - T::one()) / (nf * p.c[i]);
            }
            grad.z_q[(i, j)] = gij;
        }
    }

    let rho_res: T = (0..n).map(|i| p.rho[i] * res[i]).sum();
    let one_minus_rho2: T = (0..n).map(|i| T::one() - p.rho[i] * p.rho[i]).sum();
    for k in 0..n {
        let row = s.z_q.row(k);
        let cross: T = (0..n).map(|j| p.rho[j] * p.nu[j] * row[j]).sum();
        grad.z_s[k] = -p.gamma[k] * p.sigma * p.sigma / nf * s.z_s[k]
            - p.gamma[k] * p.sigma / n32 * cross
            + p.gamma_p * p.sigma / n52 * rho_res
            - p.gamma_p * p.sigma * p.sigma / (nf * nf * nf) * one_minus_rho2 * tilt;
    }
    grad
}

/// Constant Hessian blocks and the gradient at zero.
pub fn hessian_blocks<T: Real>(p: &ModelParams<T>) -> FocSystem<T> {
    let n = p.n;
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let n32 = nf * sqrt_n;
    let n52 = nf * nf * sqrt_n;
    let nn = n * n;

    // Stacked index of z_q[i][j].
    let qi = |i: usize, j: usize| Sensitivities::<T>::q_index(n, i, j);

    let mut h_qq = Mat::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let a = qi(i, j);
            // Row-wise diffusion risk.
            h_qq[(a, a)] += -p.gamma[i] * p.nu[j] * p.nu[j] / nf;
            // Column-sum penalty couples all rows within a column.
            for k in 0..n {
                h_qq[(a, qi(k, j))] += -p.gamma_p / (nf * nf) * p.nu[j] * p.nu[j];
            }
        }
        // Own-action incentive curvature on the diagonal entry.
        let a = qi(i, i);
        h_qq[(a, a)] += -T::one() / (nf * p.c[i]);
    }

    let mut h_qs = Mat::zeros(nn, n);
    for i in 0..n {
        for j in 0..n {
            let a = qi(i, j);
            for k in 0..n {
                let mut v = -p.gamma_p * p.rho[j] * p.nu[j] * p.sigma / n52;
                if i == k {
                    v -= p.gamma[i] * p.rho[j] * p.nu[j] * p.sigma / n32;
                }
                h_qs[(a, k)] = v;
            }
        }
    }

    let mut h_ss = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = -p.gamma_p * p.sigma * p.sigma / (nf * nf);
            if i == j {
                v -= p.gamma[i] * p.sigma * p.sigma / nf;
            }
            h_ss[(i, j)] = v;
        }
    }

    let mut b_q = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = p.gamma_p / (nf * nf) * p.nu[j] * p.nu[j];
            if i == j {
                v += T::one() / (nf * p.c[i]);
            }
            b_q[(i, j)] = v;
        }
    }

    let rho_nu: T = (0..n).map(|i| p.rho[i] * p.nu[i]).sum();
    let b_s = vec![p.gamma_p * p.sigma / n52 * rho_nu; n];

    FocSystem {
        h_qq,
        h_qs,
        h_ss,
        b_q,
        b_s,
    }
}
