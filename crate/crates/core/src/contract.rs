//! The optimal contract, exact terminal-law simulation, and Monte Carlo
//! verification of the induced equilibrium.
//!
//! Contract i pays (after settling the factor-denominated claim)
//!
//! ```text
//! payment_i = constant_i + z_q[i][:] . (Q_T - Q_0) + z_s[i] * log(S_T / S_0)
//! ```
//!
//! with the constant chosen so that agent i's certainty equivalent at the
//! induced Nash actions `a_j = z_q[j][j] / c_j` is exactly the reservation
//! level. Terminal signals and the factor log-return are jointly Gaussian
//! under constant actions, so paths are sampled exactly (no time stepping)
//! and every Monte Carlo estimate has a closed-form Gaussian comparator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::linalg::Mat;
use crate::params::ModelParams;
use crate::scalar::{real, real_of, Real};
use crate::sensitivities::Sensitivities;

/// Per-agent deterministic term plus the linear loadings of the optimal
/// contract. The delivered payment equals `constant + loadings . increments`.
#[derive(Debug, Clone)]
pub struct ContractCoefficients<T> {
    pub constant: Vec<T>,
    pub z_q: Mat<T>,
    pub z_s: Vec<T>,
}

impl<T: Real> ContractCoefficients<T> {
    pub fn n(&self) -> usize {
        self.z_s.len()
    }

    pub fn sensitivities(&self) -> Sensitivities<T> {
        Sensitivities {
            z_q: self.z_q.clone(),
            z_s: self.z_s.clone(),
        }
    }

    /// Payment to agent i given terminal signal increments and the factor
    /// log-return.
    pub fn payment(&self, i: usize, q_increment: &[T], log_s_ratio: T) -> T {
        self.constant[i]
            + crate::linalg::dot(self.z_q.row(i), q_increment)
            + self.z_s[i] * log_s_ratio
    }
}

/// Nash actions induced by a sensitivity pair: `a_i = z_q[i][i] / c_i`.
pub fn optimal_actions<T: Real>(s: &Sensitivities<T>, p: &ModelParams<T>) -> Vec<T> {
    (0..p.n).map(|i| s.z_q[(i, i)] / p.c[i]).collect()
}

/// Build the optimal contract for a sensitivity pair. The deterministic term
/// bundles the reservation level, the accumulated certainty-equivalent drift,
/// and the Ito compensator `(mu - sigma^2/2) z_s[i]` of the log-return leg.
pub fn contract_coefficients<T: Real>(
    p: &ModelParams<T>,
    s: &Sensitivities<T>,
) -> ContractCoefficients<T> {
    let n = p.n;
    let sqrt_n = real_of::<T>(n).sqrt();
    let half = real::<T>(0.5);
    let log_drift = p.mu - half * p.sigma * p.sigma;

    let constant = (0..n)
        .map(|i| {
            let row = s.z_q.row(i);
            let own = row[i] * row[i] / (real::<T>(2.0) * p.c[i]);
            let peer: T = (0..n)
                .filter(|&j| j != i)
                .map(|j| s.z_q[(j, j)] / p.c[j] * row[j])
                .sum();
            let signal_risk: T = (0..n)
                .map(|j| p.nu[j] * p.nu[j] * row[j] * row[j])
                .sum::<T>()
                * half
                * p.gamma[i];
            let factor_risk = half * p.gamma[i] * p.sigma * p.sigma * s.z_s[i] * s.z_s[i];
            let cross: T = (0..n).map(|j| p.rho[j] * p.nu[j] * row[j]).sum();
            let hedge_drift =
                log_drift * s.z_s[i] - p.gamma[i] * p.sigma / sqrt_n * cross * s.z_s[i];
            p.reservation[i] - p.horizon * (own + peer - signal_risk - factor_risk + hedge_drift)
        })
        .collect();

    ContractCoefficients {
        constant,
        z_q: s.z_q.clone(),
        z_s: s.z_s.clone(),
    }
}

/// Exactly sampled terminal data under constant actions.
#[derive(Debug, Clone)]
pub struct PathBundle<T> {
    /// Terminal signals, one row per path.
    pub q_terminal: Mat<T>,
    /// log(S_T / S_0) per path.
    pub log_s_ratio: Vec<T>,
    pub seed: u64,
    pub n_paths: usize,
    pub actions: Vec<T>,
}

/// Draw the 2n standard normals of one path. Each path owns a dedicated
/// stream of the counter-based generator, so bundles are reproducible
/// independent of evaluation order.
fn path_normals(seed: u64, path: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64 + 1);
    let signal: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let factor: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    (signal, factor)
}

/// Exact terminal sampling of the signals and the factor log-return.
pub fn simulate_paths<T: Real>(
    p: &ModelParams<T>,
    actions: &[T],
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle<T>, Error> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least one path".into(),
        ));
    }
    if actions.len() != p.n {
        return Err(Error::InvalidArgument(format!(
            "actions has length {}, expected {}",
            actions.len(),
            p.n
        )));
    }
    let n = p.n;
    let sqrt_t = p.horizon.sqrt();
    let sqrt_n = real_of::<T>(n).sqrt();
    let half = real::<T>(0.5);
    let log_drift = (p.mu - half * p.sigma * p.sigma) * p.horizon;

    let mut q_terminal = Mat::zeros(n_paths, n);
    let mut log_s_ratio = vec![T::zero(); n_paths];
    for path in 0..n_paths {
        let (signal, factor) = path_normals(seed, path, n);
        let mut factor_mix = T::zero();
        for i in 0..n {
            let b = real::<T>(signal[i]);
            q_terminal[(path, i)] = p.q0[i] + actions[i] * p.horizon + p.nu[i] * sqrt_t * b;
            let w = real::<T>(factor[i]);
            factor_mix += p.rho[i] * b + (T::one() - p.rho[i] * p.rho[i]).sqrt() * w;
        }
        log_s_ratio[path] = log_drift + p.sigma * sqrt_t / sqrt_n * factor_mix;
    }
    Ok(PathBundle {
        q_terminal,
        log_s_ratio,
        seed,
        n_paths,
        actions: actions.to_vec(),
    })
}

/// Compensated (Kahan) accumulator; path sums must not depend on ordering
/// noise.
#[derive(Clone, Copy, Default)]
struct Kahan<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Kahan<T> {
    fn add(&mut self, value: T) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn mean_and_sd<T: Real>(values: &[T]) -> (T, T) {
    let nf = real_of::<T>(values.len());
    let mut acc = Kahan::default();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.sum / nf;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let mut sq = Kahan::default();
    for &v in values {
        let d = v - mean;
        sq.add(d * d);
    }
    let var = sq.sum / (nf - T::one());
    (mean, var.max(T::zero()).sqrt())
}

/// Stable exponential-utility average: returns (E[-exp(y)], SE) for the
/// sample of exponents `y` via a max shift.
fn exp_utility_mean<T: Real>(y: &[T]) -> (T, T) {
    let shift = y.iter().fold(T::neg_infinity(), |acc, &v| acc.max(v));
    if !shift.is_finite() {
        return (T::nan(), T::nan());
    }
    let scaled: Vec<T> = y.iter().map(|&v| (v - shift).exp()).collect();
    let (mean, sd) = mean_and_sd(&scaled);
    let se = sd / real_of::<T>(y.len()).sqrt();
    (-shift.exp() * mean, shift.exp() * se)
}

/// Gaussian moments of agent i's net payoff (payment minus effort cost) when
/// the agent deviates by `delta` from the bundled actions.
pub fn payoff_moments<T: Real>(
    p: &ModelParams<T>,
    coeffs: &ContractCoefficients<T>,
    actions: &[T],
    agent: usize,
    delta: T,
) -> (T, T) {
    let n = p.n;
    let sqrt_n = real_of::<T>(n).sqrt();
    let half = real::<T>(0.5);
    let row = coeffs.z_q.row(agent);
    let own_action = actions[agent] + delta;

    let mut mean = coeffs.constant[agent];
    for j in 0..n {
        let drift = if j == agent { own_action } else { actions[j] };
        mean += row[j] * drift * p.horizon;
    }
    mean += coeffs.z_s[agent] * (p.mu - half * p.sigma * p.sigma) * p.horizon;
    mean -= half * p.c[agent] * own_action * own_action * p.horizon;

    let mut var = T::zero();
    for j in 0..n {
        let load = row[j] * p.nu[j] + coeffs.z_s[agent] * p.sigma / sqrt_n * p.rho[j];
        var += load * load;
        let resid = coeffs.z_s[agent] * p.sigma / sqrt_n * (T::one() - p.rho[j] * p.rho[j]).sqrt();
        var += resid * resid;
    }
    (mean, var * p.horizon)
}

/// Closed-form certainty equivalents at the bundled Nash actions. By
/// construction of the contract constant these equal the reservation levels
/// exactly, for any sensitivity pair.
pub fn analytic_certainty_equivalents<T: Real>(
    p: &ModelParams<T>,
    coeffs: &ContractCoefficients<T>,
    actions: &[T],
) -> Vec<T> {
    (0..p.n)
        .map(|i| {
            let (mean, var) = payoff_moments(p, coeffs, actions, i, T::zero());
            mean - real::<T>(0.5) * p.gamma[i] * var
        })
        .collect()
}

/// Closed-form expected utility of agent `agent` under a constant deviation.
pub fn analytic_deviation_utility<T: Real>(
    p: &ModelParams<T>,
    coeffs: &ContractCoefficients<T>,
    actions: &[T],
    agent: usize,
    delta: T,
) -> T {
    let (mean, var) = payoff_moments(p, coeffs, actions, agent, delta);
    let ce = mean - real::<T>(0.5) * p.gamma[agent] * var;
    -(-p.gamma[agent] * ce).exp()
}

/// Monte Carlo certainty equivalents with delta-method standard errors.
pub fn agent_certainty_equivalents<T: Real>(
    p: &ModelParams<T>,
    coeffs: &ContractCoefficients<T>,
    bundle: &PathBundle<T>,
) -> Vec<(T, T)> {
    let n = p.n;
    let half = real::<T>(0.5);
    (0..n)
        .map(|i| {
            let cost = half * p.c[i] * bundle.actions[i] * bundle.actions[i] * p.horizon;
            let exponents: Vec<T> = (0..bundle.n_paths)
                .map(|path| {
                    let inc: Vec<T> = (0..n)
                        .map(|j| bundle.q_terminal[(path, j)] - p.q0[j])
                        .collect();
                    let x = coeffs.payment(i, &inc, bundle.log_s_ratio[path]) - cost;
                    -p.gamma[i] * x
                })
                .collect();
            // CE = -(1/gamma) log mean exp(-gamma X), shifted for stability.
            let shift = exponents
                .iter()
                .fold(T::neg_infinity(), |acc, &v| acc.max(v));
            let scaled: Vec<T> = exponents.iter().map(|&v| (v - shift).exp()).collect();
            let (mean, sd) = mean_and_sd(&scaled);
            let ce = -(shift + mean.ln()) / p.gamma[i];
            let se = sd / (mean * p.gamma[i] * real_of::<T>(bundle.n_paths).sqrt());
            (ce, se.abs())
        })
        .collect()
}

/// Monte Carlo principal utility against its closed-form comparator
/// `-exp(-gamma_p (1.(q0 - r)/n + T f(z)))`.
pub fn principal_value<T: Real>(
    p: &ModelParams<T>,
    coeffs: &ContractCoefficients<T>,
    bundle: &PathBundle<T>,
) -> (T, T, T) {
    let n = p.n;
    let nf = real_of::<T>(n);
    let exponents: Vec<T> = (0..bundle.n_paths)
        .map(|path| {
            let inc: Vec<T> = (0..n)
                .map(|j| bundle.q_terminal[(path, j)] - p.q0[j])
                .collect();
            let mut net = T::zero();
            for j in 0..n {
                net += bundle.q_terminal[(path, j)];
            }
            for i in 0..n {
                net -= coeffs.payment(i, &inc, bundle.log_s_ratio[path]);
            }
            -p.gamma_p * net / nf
        })
        .collect();
    let (mc, se) = exp_utility_mean(&exponents);

    let f_star = crate::objective::eval_f(p, &coeffs.sensitivities());
    let book: T = (0..n).map(|i| p.q0[i] - p.reservation[i]).sum::<T>() / nf;
    let analytic = -(-p.gamma_p * (book + p.horizon * f_star)).exp();
    (mc, se, analytic)
}

/// One agent's Monte Carlo incentive check under common random numbers.
#[derive(Debug, Clone)]
pub struct DeviationCurve<T> {
    pub deltas: Vec<T>,
    /// Expected utility estimate per deviation.
    pub utilities: Vec<T>,
    pub standard_errors: Vec<T>,
    /// Paired difference against the zero deviation: (mean, SE).
    pub gap_vs_zero: Vec<(T, T)>,
    pub argmax: usize,
}

/// Re-simulate agent `agent`'s utility along a grid of constant deviations,
/// reusing one set of normals across the grid (the deviation only shifts the
/// drift of the agent's own signal).
pub fn nash_deviation_check<T: Real>(
    p: &ModelParams<T>,
    coeffs: &ContractCoefficients<T>,
    agent: usize,
    deviation_grid: &[T],
    n_paths: usize,
    seed: u64,
) -> Result<DeviationCurve<T>, Error> {
    if agent >= p.n {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range for a team of {}",
            p.n
        )));
    }
    let zero_pos = deviation_grid
        .iter()
        .position(|&d| d == T::zero())
        .ok_or_else(|| Error::InvalidArgument("deviation grid must contain zero".into()))?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least one path".into(),
        ));
    }

    let n = p.n;
    let actions = optimal_actions(&coeffs.sensitivities(), p);
    let bundle = simulate_paths(p, &actions, n_paths, seed)?;
    let half = real::<T>(0.5);

    // Base payoff exponent per path, then per-delta deterministic shifts:
    // the deviation moves agent's own signal drift by delta*T and the effort
    // cost by the quadratic term.
    let base: Vec<T> = (0..n_paths)
        .map(|path| {
            let inc: Vec<T> = (0..n)
                .map(|j| bundle.q_terminal[(path, j)] - p.q0[j])
                .collect();
            coeffs.payment(agent, &inc, bundle.log_s_ratio[path])
        })
        .collect();

    let mut utilities = Vec::with_capacity(deviation_grid.len());
    let mut standard_errors = Vec::with_capacity(deviation_grid.len());
    let mut per_delta_exponents: Vec<Vec<T>> = Vec::with_capacity(deviation_grid.len());
    for &delta in deviation_grid {
        let own = actions[agent] + delta;
        let cost = half * p.c[agent] * own * own * p.horizon;
        let drift_shift = coeffs.z_q[(agent, agent)] * delta * p.horizon;
        let exponents: Vec<T> = base
            .iter()
            .map(|&pay| -p.gamma[agent] * (pay + drift_shift - cost))
            .collect();
        let (mean, se) = exp_utility_mean(&exponents);
        utilities.push(mean);
        standard_errors.push(se);
        per_delta_exponents.push(exponents);
    }

    let gap_vs_zero = per_delta_exponents
        .iter()
        .map(|exps| {
            let diffs: Vec<T> = exps
                .iter()
                .zip(&per_delta_exponents[zero_pos])
                .map(|(&a, &b)| -(a.exp()) - -(b.exp()))
                .collect();
            let (mean, sd) = mean_and_sd(&diffs);
            (mean, sd / real_of::<T>(n_paths).sqrt())
        })
        .collect();

    let argmax = utilities
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).expect("utilities are comparable"))
        .map(|(k, _)| k)
        .expect("non-empty grid");

    Ok(DeviationCurve {
        deltas: deviation_grid.to_vec(),
        utilities,
        standard_errors,
        gap_vs_zero,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::calibrations;
    use crate::solver::solve_closed_form;
    use crate::testutil::{random_economy, random_sensitivities};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn actions_are_proportional_to_the_diagonal() {
        let p = calibrations::table1::<f64>(0.0);
        let s = solve_closed_form(&p);
        let actions = optimal_actions(&s, &p);
        for a in &actions {
            assert!((a - 0.47684 / 1.2).abs() < 1e-5);
        }
        let mut z = Sensitivities::zeros(p.n);
        z.z_q[(2, 2)] = 0.0;
        assert_eq!(optimal_actions(&z, &p)[2], 0.0);
    }

    #[test]
    fn action_sign_reverses_past_the_diagonal_flip() {
        let p = calibrations::table3::<f64>(1.0);
        let s = solve_closed_form(&p);
        let actions = optimal_actions(&s, &p);
        assert!(actions[2] < 0.0);
    }

    #[test]
    fn zero_sensitivities_pay_the_reservation_level() {
        let mut p = calibrations::table1::<f64>(1.0);
        p.reservation = vec![0.3; 6];
        let p = p.validate().unwrap();
        let coeffs = contract_coefficients(&p, &Sensitivities::zeros(p.n));
        for i in 0..p.n {
            assert_eq!(coeffs.constant[i], 0.3);
            let inc = vec![0.7; p.n];
            assert_eq!(coeffs.payment(i, &inc, 0.4), 0.3);
        }
    }

    #[test]
    fn log_drift_correction_vanishes_when_mu_equals_half_variance() {
        let mut p = calibrations::table1::<f64>(1.0);
        p.mu = 0.5 * p.sigma * p.sigma;
        let p = p.validate().unwrap();
        let mut s = Sensitivities::zeros(p.n);
        s.z_s = vec![0.7; p.n];
        let coeffs = contract_coefficients(&p, &s);
        // Only the factor-risk term survives in the constant.
        for i in 0..p.n {
            let expected = 0.5 * p.gamma[i] * p.sigma * p.sigma * 0.49 * p.horizon;
            assert!((coeffs.constant[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn certainty_equivalents_reconstruct_reservations_exactly() {
        // Holds for any sensitivities, not only the maximizer.
        let mut rng = StdRng::seed_from_u64(60);
        for _ in 0..40 {
            let mut p = random_economy(&mut rng, 1..=6);
            p.reservation = (0..p.n).map(|k| -0.5 + 0.3 * k as f64).collect();
            let p = p.validate().unwrap();
            let s = random_sensitivities(&mut rng, p.n);
            let coeffs = contract_coefficients(&p, &s);
            let actions = optimal_actions(&s, &p);
            let ces = analytic_certainty_equivalents(&p, &coeffs, &actions);
            for (ce, r) in ces.iter().zip(&p.reservation) {
                assert!(
                    (ce - r).abs() <= 1e-12 * (1.0 + r.abs()),
                    "certainty equivalent {ce} drifted from reservation {r}"
                );
            }
        }
    }

    #[test]
    fn bundles_are_seed_deterministic() {
        let p = calibrations::table2::<f64>(1.0);
        let actions = vec![0.1; 6];
        let a = simulate_paths(&p, &actions, 500, 99).unwrap();
        let b = simulate_paths(&p, &actions, 500, 99).unwrap();
        assert_eq!(a.q_terminal, b.q_terminal);
        assert_eq!(a.log_s_ratio, b.log_s_ratio);
        let c = simulate_paths(&p, &actions, 500, 100).unwrap();
        assert!(a.q_terminal != c.q_terminal);
    }

    #[test]
    fn terminal_moments_match_the_gaussian_law() {
        let p = calibrations::table1::<f64>(1.0);
        let n_paths = 100_000;
        let actions = vec![0.25; 6];
        let bundle = simulate_paths(&p, &actions, n_paths, 7).unwrap();
        let pf = n_paths as f64;
        for i in 0..p.n {
            let col: Vec<f64> = (0..n_paths).map(|t| bundle.q_terminal[(t, i)]).collect();
            let (mean, sd) = mean_and_sd(&col);
            let se = sd / pf.sqrt();
            let expected = p.q0[i] + actions[i] * p.horizon;
            assert!((mean - expected).abs() < 4.0 * se);
            let theoretical_sd = p.nu[i] * p.horizon.sqrt();
            assert!((sd - theoretical_sd).abs() < 4.0 * theoretical_sd / (2.0 * pf).sqrt());
        }
        let (mean_log, sd_log) = mean_and_sd(&bundle.log_s_ratio);
        let expected = (p.mu - 0.5 * p.sigma * p.sigma) * p.horizon;
        assert!((mean_log - expected).abs() < 4.0 * sd_log / pf.sqrt());

        // Cross-correlation corr(Q_i, log S) = rho_i / sqrt(n).
        for i in 0..p.n {
            let col: Vec<f64> = (0..n_paths).map(|t| bundle.q_terminal[(t, i)]).collect();
            let (mq, sq) = mean_and_sd(&col);
            let mut cov = 0.0;
            for t in 0..n_paths {
                cov += (col[t] - mq) * (bundle.log_s_ratio[t] - mean_log);
            }
            cov /= pf - 1.0;
            let corr = cov / (sq * sd_log);
            let expected = p.rho[i] / (p.n as f64).sqrt();
            // Fisher SE of a correlation estimate.
            assert!((corr - expected).abs() < 4.0 / pf.sqrt());
        }
    }

    #[test]
    fn driftless_actions_leave_the_signal_means_at_q0() {
        let mut p = calibrations::table2::<f64>(1.0);
        p.q0 = vec![0.4, -0.2, 0.0, 1.0, -1.0, 0.25];
        let p = p.validate().unwrap();
        let n_paths = 40_000;
        let bundle = simulate_paths(&p, &[0.0; 6], n_paths, 13).unwrap();
        for i in 0..p.n {
            let col: Vec<f64> = (0..n_paths).map(|t| bundle.q_terminal[(t, i)]).collect();
            let (mean, sd) = mean_and_sd(&col);
            assert!((mean - p.q0[i]).abs() < 4.0 * sd / (n_paths as f64).sqrt());
        }
    }

    #[test]
    fn simulation_rejects_bad_arguments() {
        let p = calibrations::table1::<f64>(1.0);
        assert!(simulate_paths(&p, &[0.0; 6], 0, 1).is_err());
        assert!(simulate_paths(&p, &[0.0; 5], 10, 1).is_err());
    }

    #[test]
    fn monte_carlo_certainty_equivalents_hit_the_reservations() {
        let p = calibrations::table1::<f64>(1.0);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        let actions = optimal_actions(&s, &p);
        let bundle = simulate_paths(&p, &actions, 100_000, 2024).unwrap();
        let ces = agent_certainty_equivalents(&p, &coeffs, &bundle);
        for (ce, se) in &ces {
            assert!(*se > 0.0);
            assert!(
                ce.abs() <= 3.0 * se,
                "certainty equivalent {ce} beyond 3 standard errors {se}"
            );
        }
    }

    #[test]
    fn constant_contract_has_zero_standard_error() {
        let mut p = calibrations::table1::<f64>(1.0);
        p.reservation = vec![0.2; 6];
        let p = p.validate().unwrap();
        let coeffs = contract_coefficients(&p, &Sensitivities::zeros(p.n));
        let bundle = simulate_paths(&p, &[0.0; 6], 2_000, 5).unwrap();
        let ces = agent_certainty_equivalents(&p, &coeffs, &bundle);
        for (ce, se) in ces {
            assert!((ce - 0.2).abs() < 1e-12);
            assert!(se.abs() < 1e-12);
        }
    }

    #[test]
    fn standard_error_shrinks_with_the_path_count() {
        let p = calibrations::table1::<f64>(1.0);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        let actions = optimal_actions(&s, &p);
        let small = simulate_paths(&p, &actions, 10_000, 31).unwrap();
        let large = simulate_paths(&p, &actions, 40_000, 31).unwrap();
        let se_small = agent_certainty_equivalents(&p, &coeffs, &small)[0].1;
        let se_large = agent_certainty_equivalents(&p, &coeffs, &large)[0].1;
        let ratio = se_small / se_large;
        assert!(
            (1.7..=2.4).contains(&ratio),
            "quadrupling paths should halve the standard error, ratio {ratio}"
        );
    }

    #[test]
    fn principal_utility_matches_the_closed_form() {
        let p = calibrations::table1::<f64>(1.0);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        let actions = optimal_actions(&s, &p);
        let bundle = simulate_paths(&p, &actions, 100_000, 2025).unwrap();
        let (mc, se, analytic) = principal_value(&p, &coeffs, &bundle);
        assert!(se > 0.0);
        assert!(
            (mc - analytic).abs() <= 3.0 * se,
            "principal MC {mc} vs analytic {analytic} beyond 3 SE {se}"
        );
    }

    #[test]
    fn principal_comparator_is_consistent_with_the_objective_at_zero() {
        // A zero contract is not optimal, but the comparator identity
        // -exp(-gamma_p (book/n + T f(0))) still prices it.
        let p = calibrations::table1::<f64>(1.0);
        let coeffs = contract_coefficients(&p, &Sensitivities::zeros(p.n));
        let actions = vec![0.0; p.n];
        let bundle = simulate_paths(&p, &actions, 100_000, 2026).unwrap();
        let (mc, se, analytic) = principal_value(&p, &coeffs, &bundle);
        let f0 = crate::objective::eval_f(&p, &Sensitivities::zeros(p.n));
        let expected = -(-p.gamma_p * p.horizon * f0).exp();
        assert!((analytic - expected).abs() < 1e-14);
        assert!((mc - analytic).abs() <= 3.0 * se);
    }

    #[test]
    fn nearly_risk_neutral_principal_expands_to_first_order() {
        let p = calibrations::table1::<f64>(1e-3);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        let f_star = crate::objective::eval_f(&p, &s);
        let (_, _, analytic) = principal_value(
            &p,
            &coeffs,
            &simulate_paths(&p, &optimal_actions(&s, &p), 10, 1).unwrap(),
        );
        let first_order = -(1.0 - p.gamma_p * p.horizon * f_star);
        assert!((analytic - first_order).abs() < 1e-5);
    }

    #[test]
    fn deviation_curves_peak_at_zero() {
        let p = calibrations::table1::<f64>(1.0);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        let grid: Vec<f64> = (-4..=4).map(|k| 0.05 * k as f64).collect();
        for agent in 0..p.n {
            let curve = nash_deviation_check(&p, &coeffs, agent, &grid, 20_000, 77).unwrap();
            assert_eq!(curve.deltas[curve.argmax], 0.0);
            // Large deviations lose by many paired standard errors.
            let (gap, gap_se) = curve.gap_vs_zero[0];
            assert!(gap < -3.0 * gap_se);
            let (gap, gap_se) = *curve.gap_vs_zero.last().unwrap();
            assert!(gap < -3.0 * gap_se);
        }
    }

    #[test]
    fn deviation_curves_match_the_gaussian_oracle() {
        let p = calibrations::table1::<f64>(1.0);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        let actions = optimal_actions(&s, &p);
        let grid = [-0.2, -0.1, 0.0, 0.1, 0.2];
        let curve = nash_deviation_check(&p, &coeffs, 0, &grid, 100_000, 42).unwrap();
        for (k, &delta) in grid.iter().enumerate() {
            let oracle = analytic_deviation_utility(&p, &coeffs, &actions, 0, delta);
            assert!(
                (curve.utilities[k] - oracle).abs() <= 4.0 * curve.standard_errors[k],
                "MC {} vs oracle {oracle} at delta {delta}",
                curve.utilities[k]
            );
            // The penalty is exactly quadratic: CE(delta) = r - c delta^2 T / 2.
            let expected = -(-p.gamma[0]
                * (p.reservation[0] - 0.5 * p.c[0] * delta * delta * p.horizon))
                .exp();
            assert!((oracle - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn very_risk_averse_agents_still_peak_at_zero() {
        let mut p = calibrations::table1::<f64>(1.0);
        p.gamma = vec![50.0; 6];
        let p = p.validate().unwrap();
        let s = solve_closed_form(&calibrations::table1::<f64>(1.0));
        let coeffs = contract_coefficients(&p, &s);
        let actions = optimal_actions(&s, &p);
        let grid = [-0.1, 0.0, 0.1];
        // Analytic: argmax stays at zero regardless of the agent's curvature.
        let u: Vec<f64> = grid
            .iter()
            .map(|&d| analytic_deviation_utility(&p, &coeffs, &actions, 1, d))
            .collect();
        assert!(u[1] > u[0] && u[1] > u[2]);
    }

    #[test]
    fn deviation_grid_must_contain_zero() {
        let p = calibrations::table1::<f64>(1.0);
        let s = solve_closed_form(&p);
        let coeffs = contract_coefficients(&p, &s);
        assert!(matches!(
            nash_deviation_check(&p, &coeffs, 0, &[0.1, 0.2], 100, 1),
            Err(Error::InvalidArgument(_))
        ));
    }
}
