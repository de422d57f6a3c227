//! The infinite-penalty regime.
//!
//! As the principal's risk aversion grows, the quadratic penalty forces the
//! maximizer onto the affine set where every signal column pools to one and
//! the aggregate factor tilt is zero, and the limit maximizes the penalty-free
//! part `g` there. This module builds the constraint operator, solves the
//! limiting problem two ways (a bordered KKT system and an explicit
//! column-by-column elimination whose reduced n x n system is a nonsingular
//! M-matrix), classifies the limiting signs, and measures the O(1/gamma_p)
//! penalty-convergence rates of the finite-penalty maximizers.

use crate::error::Error;
use crate::linalg::{norm2, solve, spectral_radius_nonneg, sym_eigenvalues, Mat};
use crate::objective::{eval_g_phi, hessian_blocks};
use crate::params::ModelParams;
use crate::scalar::{real, real_of, Real};
use crate::sensitivities::Sensitivities;
use crate::solver::solve_direct;

/// The weighted affine constraint system `O x = o` whose squared residual is
/// the aggregate-exposure penalty.
#[derive(Debug, Clone)]
pub struct ConstraintOperator<T> {
    pub o_mat: Mat<T>,
    pub target: Vec<T>,
    /// Diagonal of the weight matrix: 1/n^2 for the n signal rows, then
    /// (sigma^2/n^3) sum_i (1 - rho_i^2) for the tilt row.
    pub weights: Vec<T>,
}

impl<T: Real> ConstraintOperator<T> {
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        let ox = self.o_mat.matvec(x);
        ox.iter().zip(&self.target).map(|(&a, &b)| a - b).collect()
    }

    /// Squared weighted residual; identical to the `phi` of the objective
    /// split.
    pub fn phi(&self, x: &[T]) -> T {
        let r = self.residual(x);
        r.iter()
            .zip(&self.weights)
            .map(|(&ri, &wi)| wi * ri * ri)
            .sum()
    }

    /// Weighted residual norm.
    pub fn weighted_norm(&self, r: &[T]) -> T {
        r.iter()
            .zip(&self.weights)
            .map(|(&ri, &wi)| wi * ri * ri)
            .sum::<T>()
            .sqrt()
    }

    /// Singular values, for the row-rank certificate.
    pub fn singular_values(&self) -> Vec<T> {
        crate::linalg::singular_values(&self.o_mat)
    }

    pub fn has_full_row_rank(&self) -> bool {
        let s = self.singular_values();
        let largest = s[0];
        let smallest = *s.last().expect("at least one singular value");
        smallest > real::<T>(1e-10) * largest
    }

    /// Minimum-norm correction onto the feasible set:
    /// `x + O^T (O O^T)^{-1} (o - O x)`.
    pub fn project(&self, x: &[T]) -> Result<Vec<T>, Error> {
        let gram = self.o_mat.matmul(&self.o_mat.transpose());
        let gap: Vec<T> = self
            .target
            .iter()
            .zip(self.o_mat.matvec(x))
            .map(|(&t, ox)| t - ox)
            .collect();
        let y = solve(&gram, &gap, "projecting onto the constraint set")?;
        let correction = self.o_mat.matvec_t(&y);
        Ok(x.iter().zip(&correction).map(|(&a, &b)| a + b).collect())
    }
}

/// Assemble the constraint operator, target, and weights of an economy.
pub fn build_constraint_operator<T: Real>(p: &ModelParams<T>) -> ConstraintOperator<T> {
    let n = p.n;
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();
    let dim = p.dim();
    let mut o_mat = Mat::zeros(n + 1, dim);
    for i in 0..n {
        for j in 0..n {
            o_mat[(i, Sensitivities::<T>::q_index(n, j, i))] = p.nu[i];
        }
        for k in 0..n {
            o_mat[(i, Sensitivities::<T>::s_index(n, k))] = p.rho[i] * p.sigma / sqrt_n;
        }
    }
    for k in 0..n {
        o_mat[(n, Sensitivities::<T>::s_index(n, k))] = T::one();
    }
    let mut target: Vec<T> = p.nu.clone();
    target.push(T::zero());
    let mut weights = vec![T::one() / (nf * nf); n];
    let tilt_weight = p.sigma * p.sigma / (nf * nf * nf)
        * (0..n).map(|i| T::one() - p.rho[i] * p.rho[i]).sum::<T>();
    weights.push(tilt_weight);
    ConstraintOperator {
        o_mat,
        target,
        weights,
    }
}

/// The limiting maximizer with its multipliers. `mu_bar[j]` prices column
/// j's pooling constraint, `theta_star` the market-neutrality constraint;
/// `iota` is the same information in the stacked-operator coordinates.
#[derive(Debug, Clone)]
pub struct ConstrainedSolution<T> {
    pub sens: Sensitivities<T>,
    pub mu_bar: Vec<T>,
    pub theta_star: T,
    pub iota: Vec<T>,
}

impl<T: Real> ConstrainedSolution<T> {
    fn from_iota(p: &ModelParams<T>, sens: Sensitivities<T>, iota: Vec<T>) -> Self {
        let n = p.n;
        let sqrt_n = real_of::<T>(n).sqrt();
        let mu_bar: Vec<T> = (0..n).map(|j| iota[j] * p.nu[j]).collect();
        let theta_star =
            iota[n] + p.sigma / sqrt_n * (0..n).map(|j| p.rho[j] * mu_bar[j] / p.nu[j]).sum::<T>();
        ConstrainedSolution {
            sens,
            mu_bar,
            theta_star,
            iota,
        }
    }

    fn from_column_multipliers(
        p: &ModelParams<T>,
        sens: Sensitivities<T>,
        mu_bar: Vec<T>,
        theta_star: T,
    ) -> Self {
        let n = p.n;
        let sqrt_n = real_of::<T>(n).sqrt();
        let mut iota: Vec<T> = (0..n).map(|j| mu_bar[j] / p.nu[j]).collect();
        let rho_term: T = (0..n).map(|j| p.rho[j] * mu_bar[j] / p.nu[j]).sum();
        iota.push(theta_star - p.sigma / sqrt_n * rho_term);
        ConstrainedSolution {
            sens,
            mu_bar,
            theta_star,
            iota,
        }
    }
}

/// Solve the limiting problem through the bordered symmetric system
/// `[[H_g, O^T], [O, 0]] [x; iota] = [-h; o]`.
pub fn solve_kkt<T: Real>(p: &ModelParams<T>) -> Result<ConstrainedSolution<T>, Error> {
    let n = p.n;
    let dim = p.dim();
    let penalty_free = p.with_gamma_p(T::zero());
    let sys = hessian_blocks(&penalty_free);
    let h = sys.assemble_hessian();
    let rhs_lin = sys.assemble_rhs();
    let op = build_constraint_operator(p);

    let total = dim + n + 1;
    let mut bordered = Mat::zeros(total, total);
    for i in 0..dim {
        for j in 0..dim {
            bordered[(i, j)] = h[(i, j)];
        }
    }
    for r in 0..n + 1 {
        for j in 0..dim {
            bordered[(dim + r, j)] = op.o_mat[(r, j)];
            bordered[(j, dim + r)] = op.o_mat[(r, j)];
        }
    }
    let mut rhs = vec![T::zero(); total];
    for i in 0..dim {
        rhs[i] = -rhs_lin[i];
    }
    rhs[dim..].copy_from_slice(&op.target);

    let xy = solve(&bordered, &rhs, "solving the bordered limit system")?;
    let sens = Sensitivities::from_stacked(n, &xy[..dim]);
    let iota = xy[dim..].to_vec();
    Ok(ConstrainedSolution::from_iota(p, sens, iota))
}

/// Scalars of the explicit column-by-column solution.
#[derive(Debug, Clone)]
pub struct ColumnIntermediates<T> {
    /// p[i][j]: diagonal resolvent of row i's decoupled solve.
    pub p: Mat<T>,
    /// theta[j] = sum_i p[i][j], total column receptiveness.
    pub theta: Vec<T>,
    /// zeta[j] = p[j][j]/c_j, in (0, 1).
    pub zeta: Vec<T>,
    /// a[j] = rho_j zeta_j / nu_j.
    pub a: Vec<T>,
    /// m[k][j] = rho_j nu_j p[k][j].
    pub m: Mat<T>,
    /// upsilon[k] = sum_j rho_j^2 nu_j^2 p[k][j].
    pub upsilon: Vec<T>,
    /// phi[k] = 1 - (gamma_k/n) upsilon[k], in (0, 1).
    pub phi: Vec<T>,
    /// w[j] = 1/(n theta[j]).
    pub w: Vec<T>,
    /// The nonnegative feedback matrix of the reduced tilt system.
    pub l: Mat<T>,
    pub u_rhs: Vec<T>,
    pub v_rhs: Vec<T>,
    /// Resolvent images u = (I-L)^{-1} v_rhs and v = (I-L)^{-1} u_rhs.
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub c_terms: Vec<T>,
    pub r_terms: Vec<T>,
    pub theta_star: T,
}

pub fn column_intermediates<T: Real>(p: &ModelParams<T>) -> Result<ColumnIntermediates<T>, Error> {
    let n = p.n;
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();

    let pm = Mat::from_fn(n, n, |i, j| {
        if i == j {
            T::one() / (p.gamma[i] * p.nu[i] * p.nu[i] + T::one() / p.c[i])
        } else {
            T::one() / (p.gamma[i] * p.nu[j] * p.nu[j])
        }
    });
    let theta: Vec<T> = (0..n).map(|j| (0..n).map(|i| pm[(i, j)]).sum()).collect();
    let zeta: Vec<T> = (0..n).map(|j| pm[(j, j)] / p.c[j]).collect();
    let a: Vec<T> = (0..n).map(|j| p.rho[j] * zeta[j] / p.nu[j]).collect();
    let m = Mat::from_fn(n, n, |k, j| p.rho[j] * p.nu[j] * pm[(k, j)]);
    let upsilon: Vec<T> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| p.rho[j] * p.rho[j] * p.nu[j] * p.nu[j] * pm[(k, j)])
                .sum()
        })
        .collect();
    let phi: Vec<T> = (0..n)
        .map(|k| T::one() - p.gamma[k] / nf * upsilon[k])
        .collect();
    let w: Vec<T> = (0..n).map(|j| T::one() / (nf * theta[j])).collect();
    let l = Mat::from_fn(n, n, |k, j| w[j] * a[j] * m[(k, j)] / phi[k]);
    let v_rhs: Vec<T> = (0..n)
        .map(|k| nf / (p.gamma[k] * p.sigma * p.sigma * phi[k]))
        .collect();
    let c_terms: Vec<T> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| (T::one() - zeta[j]) / theta[j] * m[(k, j)])
                .sum::<T>()
                / (p.sigma * sqrt_n)
        })
        .collect();
    let r_terms: Vec<T> = (0..n)
        .map(|k| p.rho[k] * p.nu[k] / p.c[k] * pm[(k, k)] / (p.sigma * sqrt_n))
        .collect();
    let u_rhs: Vec<T> = (0..n)
        .map(|k| -(c_terms[k] + r_terms[k]) / phi[k])
        .collect();

    // Resolvent solves; (I - L) is a nonsingular M-matrix for valid
    // correlations, so failure here signals a parameter-range violation.
    let i_minus_l = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id - l[(i, j)]
    });
    let u = solve(&i_minus_l, &v_rhs, "inverting the reduced tilt system")?;
    let v = solve(&i_minus_l, &u_rhs, "inverting the reduced tilt system")?;
    let ones_u: T = u.iter().copied().sum();
    if ones_u == T::zero() {
        return Err(Error::Singular {
            context: "normalizing the reduced tilt system",
        });
    }
    let theta_star = -v.iter().copied().sum::<T>() / ones_u;

    Ok(ColumnIntermediates {
        p: pm,
        theta,
        zeta,
        a,
        m,
        upsilon,
        phi,
        w,
        l,
        u_rhs,
        v_rhs,
        u,
        v,
        c_terms,
        r_terms,
        theta_star,
    })
}

/// Solve the limiting problem by eliminating the column multipliers and
/// inverting the reduced M-matrix system for the tilts.
pub fn solve_explicit_column<T: Real>(p: &ModelParams<T>) -> Result<ConstrainedSolution<T>, Error> {
    let inter = column_intermediates(p)?;
    let n = p.n;
    let nf = real_of::<T>(n);
    let sqrt_n = nf.sqrt();

    let z_s: Vec<T> = (0..n)
        .map(|k| inter.u[k] * inter.theta_star + inter.v[k])
        .collect();
    let mu_bar: Vec<T> = (0..n)
        .map(|j| {
            (T::one() - inter.zeta[j] - p.sigma / sqrt_n * inter.a[j] * z_s[j])
                / (nf * inter.theta[j])
        })
        .collect();
    let z_q = Mat::from_fn(n, n, |i, j| {
        let own = if i == j { T::one() / p.c[i] } else { T::zero() };
        inter.p[(i, j)]
            * (nf * mu_bar[j] + own - p.gamma[i] * p.sigma / sqrt_n * z_s[i] * p.rho[j] * p.nu[j])
    });
    let sens = Sensitivities { z_q, z_s };
    Ok(ConstrainedSolution::from_column_multipliers(
        p,
        sens,
        mu_bar,
        inter.theta_star,
    ))
}

/// Structural report on the reduced tilt system.
#[derive(Debug, Clone)]
pub struct MMatrixReport<T> {
    pub spectral_radius: T,
    pub min_resolvent_entry: T,
    pub l_nonnegative: bool,
    /// phi - L^T phi entrywise; must be the constant 1 - |rho|^2/n.
    pub weighted_row_gap: Vec<T>,
    pub expected_gap: T,
    pub weighted_row_test: bool,
    /// Sup-norm gap between the direct resolvent and its 50-term Neumann sum.
    pub neumann_gap: T,
}

pub fn m_matrix_diagnostics<T: Real>(p: &ModelParams<T>) -> Result<MMatrixReport<T>, Error> {
    let inter = column_intermediates(p)?;
    let n = p.n;
    let nf = real_of::<T>(n);
    let l = &inter.l;

    let l_nonnegative = (0..n).all(|i| (0..n).all(|j| l[(i, j)] >= T::zero()));
    let spectral_radius = spectral_radius_nonneg(l);

    let i_minus_l = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id - l[(i, j)]
    });
    // Columns of the resolvent, plus the Neumann cross-check.
    let mut min_resolvent_entry = T::infinity();
    let mut resolvent = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = solve(&i_minus_l, &e, "inverting the reduced tilt system")?;
        for i in 0..n {
            resolvent[(i, j)] = col[i];
            min_resolvent_entry = min_resolvent_entry.min(col[i]);
        }
    }
    let mut neumann = Mat::identity(n);
    let mut power = Mat::identity(n);
    for _ in 0..50 {
        power = l.matmul(&power);
        for i in 0..n {
            for j in 0..n {
                neumann[(i, j)] += power[(i, j)];
            }
        }
    }
    let neumann_gap = resolvent.max_abs_diff(&neumann);

    let lt_phi = l.matvec_t(&inter.phi);
    let weighted_row_gap: Vec<T> = inter
        .phi
        .iter()
        .zip(&lt_phi)
        .map(|(&a, &b)| a - b)
        .collect();
    let rho_norm2: T = p.rho.iter().map(|&r| r * r).sum();
    let expected_gap = T::one() - rho_norm2 / nf;
    let weighted_row_test = weighted_row_gap
        .iter()
        .all(|&g| (g - expected_gap).abs() <= real(1e-12) && g > T::zero());

    Ok(MMatrixReport {
        spectral_radius,
        min_resolvent_entry,
        l_nonnegative,
        weighted_row_gap,
        expected_gap,
        weighted_row_test,
        neumann_gap,
    })
}

/// How a limiting diagonal entry got its sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagClass {
    /// rho_i = 0: the correction vanishes identically.
    ZeroCorrelation,
    /// The row's tilt vanishes in the limit; only the baseline remains.
    NeutralTilt,
    /// Tilt opposite to the correlation: the correction helps, diagonal
    /// guaranteed positive.
    StandardTilt,
    /// Tilt aligned with the correlation but below the flip threshold.
    AlignedBelowThreshold,
    /// Tilt aligned and past the threshold: the diagonal is negative and the
    /// induced action reverses sign.
    AlignedNegative,
}

/// Per-row decomposition of the limiting diagonal into its positive baseline
/// and the signed correlation-balancing correction.
#[derive(Debug, Clone)]
pub struct DiagSignRow<T> {
    pub baseline: T,
    pub correction: T,
    pub discriminant: T,
    pub diagonal: T,
    pub tilt: T,
    pub class: DiagClass,
}

pub fn diag_sign_test<T: Real>(p: &ModelParams<T>) -> Result<Vec<DiagSignRow<T>>, Error> {
    let inter = column_intermediates(p)?;
    let sol = solve_explicit_column(p)?;
    let n = p.n;
    let sqrt_n = real_of::<T>(n).sqrt();
    let tol = real::<T>(crate::risk_neutral::STRICT_SIGN_TOL);

    let rows = (0..n)
        .map(|i| {
            let tilt = sol.sens.z_s[i];
            let baseline = (T::one() - inter.zeta[i]) / inter.theta[i] + T::one() / p.c[i];
            let weight =
                p.gamma[i] * p.nu[i] + inter.p[(i, i)] / (p.c[i] * p.nu[i] * inter.theta[i]);
            let correction = p.sigma / sqrt_n * tilt * p.rho[i] * weight;
            let discriminant = baseline - correction;
            let class = if p.rho[i].abs() <= tol {
                DiagClass::ZeroCorrelation
            } else if tilt.abs() <= tol {
                DiagClass::NeutralTilt
            } else if (tilt > T::zero()) != (p.rho[i] > T::zero()) {
                DiagClass::StandardTilt
            } else {
                let threshold = sqrt_n / (p.sigma * p.rho[i].abs() * weight) * baseline;
                if tilt.abs() > threshold {
                    DiagClass::AlignedNegative
                } else {
                    DiagClass::AlignedBelowThreshold
                }
            };
            DiagSignRow {
                baseline,
                correction,
                discriminant,
                diagonal: sol.sens.z_q[(i, i)],
                tilt,
                class,
            }
        })
        .collect();
    Ok(rows)
}

/// Verdict of the one-sided-correlation tilt dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedSignVerdict {
    /// Correlations are not one-sided (or all vanish); the dichotomy says
    /// nothing.
    NotApplicable,
    AllZero,
    Mixed,
    /// A one-signed nonzero tilt vector: impossible in the limit, signals a
    /// bug.
    Violation,
}

pub fn mixed_sign_check<T: Real>(solution: &ConstrainedSolution<T>, rho: &[T]) -> MixedSignVerdict {
    let any_pos = rho.iter().any(|&r| r > T::zero());
    let any_neg = rho.iter().any(|&r| r < T::zero());
    if any_pos == any_neg {
        // Either both signs present or all exactly zero.
        return MixedSignVerdict::NotApplicable;
    }
    let tol = real::<T>(1e-10);
    let has_pos = solution.sens.z_s.iter().any(|&v| v > tol);
    let has_neg = solution.sens.z_s.iter().any(|&v| v < -tol);
    match (has_pos, has_neg) {
        (false, false) => MixedSignVerdict::AllZero,
        (true, true) => MixedSignVerdict::Mixed,
        _ => MixedSignVerdict::Violation,
    }
}

/// One row of the penalty-convergence study.
#[derive(Debug, Clone)]
pub struct PenaltyRateRow<T> {
    pub gamma_p: T,
    /// Weighted constraint residual of the penalized maximizer.
    pub residual_w: T,
    /// Euclidean distance to the limiting maximizer.
    pub error_x: T,
    /// Distance of the scaled multipliers to the limiting multipliers.
    pub error_iota: T,
    /// Objective gap |g(x*) - g(x_gamma)|.
    pub gap_g: T,
    pub scaled_residual: T,
    pub scaled_error_x: T,
    pub scaled_error_iota: T,
    pub scaled_gap_g: T,
}

/// Solve along a list of penalty weights and report every rate quantity,
/// raw and multiplied by the weight. The scaled columns should be flat for
/// weights deep in the asymptotic regime.
pub fn penalty_convergence_study<T: Real>(
    p: &ModelParams<T>,
    gamma_p_list: &[T],
) -> Result<Vec<PenaltyRateRow<T>>, Error> {
    if gamma_p_list.is_empty() {
        return Err(Error::InvalidArgument(
            "penalty study needs a non-empty gamma_P list".into(),
        ));
    }
    let mut prev = T::zero();
    for &g in gamma_p_list {
        if g <= prev {
            return Err(Error::InvalidArgument(
                "penalty study needs an increasing, positive gamma_P list".into(),
            ));
        }
        prev = g;
    }

    let op = build_constraint_operator(p);
    let limit = solve_kkt(p)?;
    let x_star = limit.sens.to_stacked();
    let (g_star, _) = eval_g_phi(p, &limit.sens);

    gamma_p_list
        .iter()
        .map(|&gamma_p| {
            let sol = solve_direct(&p.with_gamma_p(gamma_p))?;
            let x = sol.to_stacked();
            let r = op.residual(&x);
            let residual_w = op.weighted_norm(&r);
            let diff: Vec<T> = x.iter().zip(&x_star).map(|(&a, &b)| a - b).collect();
            let error_x = norm2(&diff);
            let iota_hat: Vec<T> = r
                .iter()
                .zip(&op.weights)
                .map(|(&ri, &wi)| -gamma_p * wi * ri)
                .collect();
            let iota_diff: Vec<T> = iota_hat
                .iter()
                .zip(&limit.iota)
                .map(|(&a, &b)| a - b)
                .collect();
            let error_iota = norm2(&iota_diff);
            let (g_val, _) = eval_g_phi(p, &sol);
            let gap_g = (g_star - g_val).abs();
            Ok(PenaltyRateRow {
                gamma_p,
                residual_w,
                error_x,
                error_iota,
                gap_g,
                scaled_residual: gamma_p * residual_w,
                scaled_error_x: gamma_p * error_x,
                scaled_error_iota: gamma_p * error_iota,
                scaled_gap_g: gamma_p * gap_g,
            })
        })
        .collect()
}

/// Largest eigenvalue of the penalty-free Hessian; negative for every valid
/// economy (strict concavity of `g`).
pub fn g_concavity_margin<T: Real>(p: &ModelParams<T>) -> T {
    let sys = hessian_blocks(&p.with_gamma_p(T::zero()));
    let h = sys.assemble_hessian();
    *sym_eigenvalues(&h)
        .last()
        .expect("spectrum of a nonempty matrix")
}
