//! The batch experiments and their CSV serializations.

use esg_incentives::constrained::{
    diag_sign_test, m_matrix_diagnostics, mixed_sign_check, penalty_convergence_study,
    solve_explicit_column, DiagClass, MixedSignVerdict,
};
use esg_incentives::contract::{
    agent_certainty_equivalents, contract_coefficients, nash_deviation_check, optimal_actions,
    principal_value, simulate_paths,
};
use esg_incentives::objective::eval_f;
use esg_incentives::solver::solve_direct;
use esg_incentives::{ModelParams64, Sensitivities64};

use crate::{fmt_float, CliError};

/// One solved economy: the maximizer, the induced actions, and the attained
/// objective value.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub gamma_p: f64,
    pub sens: Sensitivities64,
    pub actions: Vec<f64>,
    pub f_star: f64,
}

pub fn run_solve(params: &ModelParams64) -> Result<SolveReport, CliError> {
    let sens = solve_direct(params)?;
    let actions = optimal_actions(&sens, params);
    let f_star = eval_f(params, &sens);
    Ok(SolveReport {
        gamma_p: params.gamma_p,
        sens,
        actions,
        f_star,
    })
}

/// Long-format dump: `quantity,i,j,value` rows for the tilts, loadings,
/// actions, and the objective value.
pub fn solve_csv(report: &SolveReport) -> String {
    let n = report.sens.n();
    let mut out = String::from("quantity,i,j,value\n");
    out.push_str(&format!("gamma_P,,,{}\n", fmt_float(report.gamma_p)));
    for i in 0..n {
        out.push_str(&format!(
            "z_S,{},,{}\n",
            i + 1,
            fmt_float(report.sens.z_s[i])
        ));
    }
    for i in 0..n {
        for j in 0..n {
            out.push_str(&format!(
                "z_Q,{},{},{}\n",
                i + 1,
                j + 1,
                fmt_float(report.sens.z_q[(i, j)])
            ));
        }
    }
    for i in 0..n {
        out.push_str(&format!(
            "action,{},,{}\n",
            i + 1,
            fmt_float(report.actions[i])
        ));
    }
    out.push_str(&format!("f_star,,,{}\n", fmt_float(report.f_star)));
    out
}

/// A penalty sweep: one solved economy per grid point plus the derived
/// series used by the figure checks.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub gamma_p: Vec<f64>,
    pub points: Vec<Sensitivities64>,
    pub f_star: Vec<f64>,
    pub tilt_sums: Vec<f64>,
    pub column_sums: Vec<Vec<f64>>,
}

pub fn run_sweep(params: &ModelParams64, grid: &[f64]) -> Result<SweepResult, CliError> {
    if grid.is_empty() {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    let mut prev = f64::NEG_INFINITY;
    for &g in grid {
        if g <= prev {
            return Err(CliError::Usage("grid must increase".into()));
        }
        prev = g;
    }
    let mut result = SweepResult {
        gamma_p: Vec::new(),
        points: Vec::new(),
        f_star: Vec::new(),
        tilt_sums: Vec::new(),
        column_sums: Vec::new(),
    };
    for &gamma_p in grid {
        let p = params.with_gamma_p(gamma_p);
        let sens = solve_direct(&p)?;
        result.gamma_p.push(gamma_p);
        result.f_star.push(eval_f(&p, &sens));
        result.tilt_sums.push(sens.total_tilt());
        result.column_sums.push(sens.column_sums());
        result.points.push(sens);
    }
    Ok(result)
}

/// Fixed schema: `gamma_P, zS_1..zS_n, zQ_1_1..zQ_n_n (row-major), sum_zS,
/// colsum_1..colsum_n, f_star`.
pub fn sweep_csv(result: &SweepResult) -> String {
    let n = result.points[0].n();
    let mut header = vec!["gamma_P".to_string()];
    header.extend((1..=n).map(|i| format!("zS_{i}")));
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("zQ_{i}_{j}"));
        }
    }
    header.push("sum_zS".into());
    header.extend((1..=n).map(|j| format!("colsum_{j}")));
    header.push("f_star".into());
    let mut out = header.join(",");
    out.push('\n');

    for k in 0..result.gamma_p.len() {
        let sens = &result.points[k];
        let mut row = vec![fmt_float(result.gamma_p[k])];
        row.extend(sens.z_s.iter().map(|&v| fmt_float(v)));
        for i in 0..n {
            for j in 0..n {
                row.push(fmt_float(sens.z_q[(i, j)]));
            }
        }
        row.push(fmt_float(result.tilt_sums[k]));
        row.extend(result.column_sums[k].iter().map(|&v| fmt_float(v)));
        row.push(fmt_float(result.f_star[k]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Bisect the penalty weight at which one diagonal loading crosses zero.
///
/// Assumes a monotone crossing inside the bracket; when the endpoint signs
/// agree it falls back to a 1000-point scan for an interior sign change
/// before giving up.
pub fn flip_threshold(
    params: &ModelParams64,
    row: usize,
    bracket: (f64, f64),
    tol: f64,
    max_iter: usize,
) -> Result<f64, CliError> {
    if row >= params.n {
        return Err(CliError::Usage(format!(
            "row {} out of range for a team of {}",
            row + 1,
            params.n
        )));
    }
    if !(bracket.0 >= 0.0 && bracket.1 > bracket.0) {
        return Err(CliError::Usage(format!(
            "bracket must satisfy 0 <= a < b, got {},{}",
            bracket.0, bracket.1
        )));
    }
    if tol <= 0.0 {
        return Err(CliError::Usage("tolerance must be positive".into()));
    }
    let diag = |gamma_p: f64| -> Result<f64, CliError> {
        let sens = solve_direct(&params.with_gamma_p(gamma_p))?;
        Ok(sens.z_q[(row, row)])
    };

    let (mut lo, mut hi) = bracket;
    let mut f_lo = diag(lo)?;
    let f_hi = diag(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        // Fine scan fallback for non-monotone trajectories.
        let scan_points = 1000;
        let step = (hi - lo) / scan_points as f64;
        let mut found = None;
        let mut prev = (lo, f_lo);
        for k in 1..=scan_points {
            let g = lo + step * k as f64;
            let f = diag(g)?;
            if f == 0.0 {
                return Ok(g);
            }
            if f.signum() != prev.1.signum() {
                found = Some((prev.0, g, prev.1));
                break;
            }
            prev = (g, f);
        }
        match found {
            Some((a, b, fa)) => {
                lo = a;
                hi = b;
                f_lo = fa;
            }
            None => {
                return Err(CliError::Usage(format!(
                    "no sign change of the row-{} diagonal over bracket [{}, {}]",
                    row + 1,
                    bracket.0,
                    bracket.1
                )));
            }
        }
    }

    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = diag(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fixed schema: `gamma_P, resid_W, err_x, err_iota, gap_g, scaled_resid,
/// scaled_err, scaled_iota, scaled_gap`.
pub fn convergence_csv(params: &ModelParams64, gammas: &[f64]) -> Result<String, CliError> {
    let rows = penalty_convergence_study(params, gammas)?;
    let mut out = String::from(
        "gamma_P,resid_W,err_x,err_iota,gap_g,scaled_resid,scaled_err,scaled_iota,scaled_gap\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_float(r.gamma_p),
            fmt_float(r.residual_w),
            fmt_float(r.error_x),
            fmt_float(r.error_iota),
            fmt_float(r.gap_g),
            fmt_float(r.scaled_residual),
            fmt_float(r.scaled_error_x),
            fmt_float(r.scaled_error_iota),
            fmt_float(r.scaled_gap_g),
        ));
    }
    Ok(out)
}

/// Decade list `a:b` -> [10^a, ..., 10^b].
pub fn parse_decades(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "decades must look like a:b, got '{text}'"
        )));
    }
    let a: i32 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse decade '{}'", parts[0])))?;
    let b: i32 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse decade '{}'", parts[1])))?;
    if b < a {
        return Err(CliError::Usage("grid must increase".into()));
    }
    Ok((a..=b).map(|d| 10f64.powi(d)).collect())
}

/// The Monte Carlo participation report plus its summary lines.
#[derive(Debug, Clone)]
pub struct SimulateReport {
    /// Per agent: certainty equivalent, standard error, reservation, pass.
    pub rows: Vec<(usize, f64, f64, f64, bool)>,
    pub principal_mc: f64,
    pub principal_se: f64,
    pub principal_analytic: f64,
    pub deviation_argmax_at_zero: bool,
}

pub fn run_simulate(
    params: &ModelParams64,
    n_paths: usize,
    seed: u64,
) -> Result<SimulateReport, CliError> {
    let sens = solve_direct(params)?;
    let coeffs = contract_coefficients(params, &sens);
    let actions = optimal_actions(&sens, params);
    let bundle = simulate_paths(params, &actions, n_paths, seed)?;
    let ces = agent_certainty_equivalents(params, &coeffs, &bundle);
    let rows = ces
        .iter()
        .enumerate()
        .map(|(i, &(ce, se))| {
            let r = params.reservation[i];
            let pass = (ce - r).abs() <= 3.0 * se;
            (i + 1, ce, se, r, pass)
        })
        .collect();
    let (principal_mc, principal_se, principal_analytic) =
        principal_value(params, &coeffs, &bundle);

    let grid: Vec<f64> = (-4..=4).map(|k| 0.05 * k as f64).collect();
    let mut deviation_argmax_at_zero = true;
    for agent in 0..params.n {
        let curve = nash_deviation_check(params, &coeffs, agent, &grid, n_paths, seed)?;
        deviation_argmax_at_zero &= curve.deltas[curve.argmax].abs() <= 0.05 + 1e-12;
    }

    Ok(SimulateReport {
        rows,
        principal_mc,
        principal_se,
        principal_analytic,
        deviation_argmax_at_zero,
    })
}

/// Fixed schema: `agent, CE, SE, r, pass`.
pub fn simulate_csv(report: &SimulateReport) -> String {
    let mut out = String::from("agent,CE,SE,r,pass\n");
    for &(agent, ce, se, r, pass) in &report.rows {
        out.push_str(&format!(
            "{agent},{},{},{},{pass}\n",
            fmt_float(ce),
            fmt_float(se),
            fmt_float(r)
        ));
    }
    out
}

pub fn simulate_summary(report: &SimulateReport) -> String {
    format!(
        "principal_mc,{}\nprincipal_se,{}\nprincipal_analytic,{}\nprincipal_within_3se,{}\ndeviation_argmax_at_zero,{}\n",
        fmt_float(report.principal_mc),
        fmt_float(report.principal_se),
        fmt_float(report.principal_analytic),
        (report.principal_mc - report.principal_analytic).abs() <= 3.0 * report.principal_se,
        report.deviation_argmax_at_zero,
    )
}

fn diag_class_name(class: DiagClass) -> &'static str {
    match class {
        DiagClass::ZeroCorrelation => "zero-correlation-positive",
        DiagClass::NeutralTilt => "neutral-tilt-positive",
        DiagClass::StandardTilt => "standard-tilt-positive",
        DiagClass::AlignedBelowThreshold => "aligned-below-threshold-positive",
        DiagClass::AlignedNegative => "aligned-negative",
    }
}

fn verdict_name(verdict: MixedSignVerdict) -> &'static str {
    match verdict {
        MixedSignVerdict::NotApplicable => "not-applicable",
        MixedSignVerdict::AllZero => "all-zero",
        MixedSignVerdict::Mixed => "mixed",
        MixedSignVerdict::Violation => "violation",
    }
}

/// Per-agent table of the infinite-penalty solution and its diagnostics.
pub fn constrained_csv(params: &ModelParams64) -> Result<String, CliError> {
    let sol = solve_explicit_column(params)?;
    let rows = diag_sign_test(params)?;
    let mut out = String::from(
        "agent,zS_bar,zQ_bar_diag,mu_bar,baseline,correction,discriminant,classification\n",
    );
    for i in 0..params.n {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            i + 1,
            fmt_float(sol.sens.z_s[i]),
            fmt_float(sol.sens.z_q[(i, i)]),
            fmt_float(sol.mu_bar[i]),
            fmt_float(rows[i].baseline),
            fmt_float(rows[i].correction),
            fmt_float(rows[i].discriminant),
            diag_class_name(rows[i].class),
        ));
    }
    Ok(out)
}

/// Key/value diagnostics: structural certificates of the reduced system and
/// the one-sided-correlation verdict.
pub fn constrained_summary(params: &ModelParams64) -> Result<String, CliError> {
    let sol = solve_explicit_column(params)?;
    let report = m_matrix_diagnostics(params)?;
    let verdict = mixed_sign_check(&sol, &params.rho);
    let colsum_gap = sol
        .sens
        .column_sums()
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(format!(
        "mixed_sign_verdict,{}\ntheta_star,{}\ntilt_sum,{}\nmax_colsum_gap,{}\nspectral_radius,{}\nmin_resolvent_entry,{}\nl_nonnegative,{}\nweighted_row_test,{}\nneumann_gap,{}\n",
        verdict_name(verdict),
        fmt_float(sol.theta_star),
        fmt_float(sol.sens.total_tilt()),
        fmt_float(colsum_gap),
        fmt_float(report.spectral_radius),
        fmt_float(report.min_resolvent_entry),
        report.l_nonnegative,
        report.weighted_row_test,
        fmt_float(report.neumann_gap),
    ))
}
