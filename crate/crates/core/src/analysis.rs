//! Executable checks of the model's contraction conditions, the cumulative
//! state-change inequality, the population-variance bound and convergence
//! distances.

use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::meanfield::{expected_rewards_monte_carlo, fixed_point_map, mean_field_policy, solve_mfe, MfeOptions, MfeSolution};
use crate::policy::sample_arm;
use crate::profile::StateProfile;
use crate::reward::{RewardFamily, RewardKind};
use crate::rng::StreamRng;
use crate::sim::{population_profile, RunTrace};

/// Outcome of a sufficient condition of the form `constant < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCheck {
    pub satisfied: bool,
    /// `1 - constant`; positive exactly when satisfied.
    pub margin: f64,
}

impl ContractionCheck {
    fn from_constant(constant: f64) -> Self {
        let margin = 1.0 - constant;
        Self {
            satisfied: margin > 0.0,
            margin,
        }
    }

    /// The Lipschitz factor `1 - margin` the condition bounds.
    pub fn constant(&self) -> f64 {
        1.0 - self.margin
    }
}

/// Any reward that is `theta`-Lipschitz in the profile: `4 theta (1 - eta) beta < 1`.
pub fn contraction_check_general(theta: f64, beta: f64, eta: f64) -> ContractionCheck {
    ContractionCheck::from_constant(4.0 * theta * (1.0 - eta) * beta)
}

/// Linear own-arm rewards: `theta (1 - eta) beta / 2 < 1`.
pub fn contraction_check_linear(theta: f64, beta: f64, eta: f64) -> ContractionCheck {
    ContractionCheck::from_constant(theta * (1.0 - eta) * beta / 2.0)
}

/// Per-agent smoothing with vanishing exploration: the homogeneous
/// condition at `beta_max` and `eta = 0`.
pub fn contraction_check_heterogeneous(theta: f64, betas: &[f64], linear: bool) -> ContractionCheck {
    let beta_max = betas.iter().copied().fold(0.0, f64::max);
    if linear {
        contraction_check_linear(theta, beta_max, 0.0)
    } else {
        contraction_check_general(theta, beta_max, 0.0)
    }
}

/// Whether the relaxed condition for linear own-arm rewards applies.
fn uses_linear_condition(game: &Game) -> bool {
    game.reward().family == RewardFamily::Linear
}

/// The applicable condition for a game: heterogeneous when agents differ in
/// `beta` or exploration diminishes, otherwise the homogeneous one.
pub fn contraction_check_game(game: &Game) -> Result<ContractionCheck> {
    let theta = game.reward().require_analysable()?;
    let linear = uses_linear_condition(game);
    let betas = game.betas();
    let homogeneous = betas.iter().all(|&b| b == betas[0]);
    let eta = game.config().eta;
    if homogeneous && eta.limit() == eta.max() {
        let (beta, eta) = (betas[0], eta.limit());
        Ok(if linear {
            contraction_check_linear(theta, beta, eta)
        } else {
            contraction_check_general(theta, beta, eta)
        })
    } else {
        Ok(contraction_check_heterogeneous(theta, betas, linear))
    }
}

/// How the expected reward mapping is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMode {
    /// `r(f(s), j)` with the averaged-policy profile.
    MeanField,
    /// `E[r(f, j) | agent plays j]` from this many sampled action profiles.
    MonteCarlo { samples: usize },
}

/// Largest observed `||R(s_a) - R(s_b)||_inf / ||s_a - s_b||_inf` over
/// `num_pairs` uniform random profile pairs. Both sides of a Monte-Carlo
/// pair use the same random numbers.
pub fn empirical_contraction_estimate<R: Rng + ?Sized>(
    game: &Game,
    num_pairs: usize,
    rng: &mut R,
    mode: EstimateMode,
) -> Result<f64> {
    game.reward().require_analysable()?;
    if num_pairs == 0 {
        return Err(Error::InvalidArgument("at least one profile pair is needed".into()));
    }
    let evaluate = |s: &StateProfile, seed: u64| -> Result<Vec<f64>> {
        match mode {
            EstimateMode::MeanField => fixed_point_map(game, s).map(StateProfile::into_values),
            EstimateMode::MonteCarlo { samples } => {
                expected_rewards_monte_carlo(game, s, samples, &mut StreamRng::seed_from_u64(seed))
            }
        }
    };
    let mut estimate: f64 = 0.0;
    for _ in 0..num_pairs {
        let a = game.random_profile(rng);
        let b = game.random_profile(rng);
        let seed: u64 = rng.random();
        let dist = a.sup_distance(&b)?;
        if dist == 0.0 {
            continue;
        }
        let (ra, rb) = (evaluate(&a, seed)?, evaluate(&b, seed)?);
        let gap = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        estimate = estimate.max(gap / dist);
    }
    Ok(estimate)
}

/// Both sides of the cumulative state-change inequality after slot `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateChangeBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl StateChangeBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// The inequality for agent `agent` and arm `arm` at every `K = 0..T-1`:
///
/// ```text
/// lhs = beta s_0(j) + sum_{n<=K} beta ds_n(j) - ln sum_l exp(beta s_0(l))
/// rhs = sum_{n<=K} [ beta (sigma_n - eta_n/M) . ds_n / (1 - eta_n)
///                    + (e - 2) beta^2 sigma_n . ds_n^2 / (1 - eta_n) ]
/// ```
///
/// with `ds_n = s_{n+1} - s_n`, sums over the agent's arms and `M` their
/// count. The per-agent `beta` and slot exploration weight are used.
pub fn state_change_bound_series(trace: &RunTrace, agent: usize, arm: usize) -> Result<Vec<StateChangeBound>> {
    trace.require_full()?;
    let game = &trace.game;
    if agent >= game.num_agents() {
        return Err(Error::InvalidArgument(format!("agent {agent} out of range")));
    }
    if !game.is_playable(agent, arm) {
        return Err(Error::InvalidArm {
            agent: Some(agent),
            arm,
        });
    }
    let arms = game.agent_arms(agent);
    let size = arms.len() as f64;
    let beta = game.betas()[agent];
    let e2 = std::f64::consts::E - 2.0;

    let s0 = trace.initial().row(agent);
    let base = beta * s0[arm] - log_sum_exp(arms.iter().map(|&l| beta * s0[l]));
    let mut lhs = base;
    let mut rhs = 0.0;
    let mut out = Vec::with_capacity(trace.horizon());
    for (n, slot) in trace.slots.iter().enumerate() {
        let eta = game.policy_params(agent, n).eta;
        if eta >= 1.0 {
            return Err(Error::FullExploration);
        }
        let (s, s1) = (trace.snapshots[n].row(agent), trace.snapshots[n + 1].row(agent));
        let sigma = slot.sigma_row(agent);
        let mut linear = 0.0;
        let mut quadratic = 0.0;
        for &l in arms {
            let d = s1[l] - s[l];
            linear += (sigma[l] - eta / size) * d;
            quadratic += sigma[l] * d * d;
        }
        lhs += beta * (s1[arm] - s[arm]);
        rhs += (beta * linear + e2 * beta * beta * quadratic) / (1.0 - eta);
        out.push(StateChangeBound { lhs, rhs });
    }
    Ok(out)
}

/// The inequality after slot `k` (`k < T`).
pub fn state_change_bound(trace: &RunTrace, agent: usize, arm: usize, k: usize) -> Result<StateChangeBound> {
    if k >= trace.horizon() {
        return Err(Error::InvalidArgument(format!("slot {k} not below horizon {}", trace.horizon())));
    }
    Ok(state_change_bound_series(trace, agent, arm)?[k])
}

/// Sampled and exact spread of the population profile at the equilibrium.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceReport {
    /// Per-arm sample variance of `f(j)` over the drawn action profiles.
    pub empirical: Vec<f64>,
    /// Per-arm exact variance `sum_i sigma_i(j) (1 - sigma_i(j)) / N^2`.
    pub analytic: Vec<f64>,
    /// `1 / (4N)`.
    pub bound: f64,
    pub samples: usize,
    pub mfe: MfeSolution,
}

impl VarianceReport {
    pub fn empirical_within(&self, slack: f64) -> bool {
        self.empirical.iter().all(|&v| v <= slack * self.bound)
    }

    pub fn analytic_within(&self) -> bool {
        self.analytic.iter().all(|&v| v <= self.bound)
    }
}

/// Solves for the equilibrium, draws `num_samples` independent action
/// profiles from its policies and compares the spread of each arm's fraction
/// with `1 / (4N)`.
pub fn population_variance_check<R: Rng + ?Sized>(game: &Game, num_samples: usize, rng: &mut R) -> Result<VarianceReport> {
    let mfe = solve_mfe(game, 0, MfeOptions::default())?;
    variance_at(game, mfe, num_samples, rng)
}

/// [`population_variance_check`] at an already solved equilibrium.
pub fn variance_at<R: Rng + ?Sized>(game: &Game, mfe: MfeSolution, num_samples: usize, rng: &mut R) -> Result<VarianceReport> {
    if num_samples < 30 {
        return Err(Error::InvalidArgument(format!("{num_samples} samples, at least 30 needed")));
    }
    if !mfe.converged {
        return Err(Error::NotConverged {
            residual: mfe.residual,
            iterations: mfe.iterations,
        });
    }
    let (n, m) = (game.num_agents(), game.num_arms());
    let sigma = mean_field_policy(game, &mfe.state)?;

    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let mut actions = vec![0usize; n];
    for _ in 0..num_samples {
        for (i, a) in actions.iter_mut().enumerate() {
            *a = sample_arm(&sigma[i * m..(i + 1) * m], rng)?;
        }
        let f = population_profile(&actions, n, m)?;
        for (j, &x) in f.fractions().iter().enumerate() {
            sum[j] += x;
            sum_sq[j] += x * x;
        }
    }
    let k = num_samples as f64;
    let empirical = (0..m)
        .map(|j| ((sum_sq[j] - sum[j] * sum[j] / k) / (k - 1.0)).max(0.0))
        .collect();
    let analytic = (0..m)
        .map(|j| sigma.chunks_exact(m).map(|row| row[j] * (1.0 - row[j])).sum::<f64>() / (n * n) as f64)
        .collect();
    Ok(VarianceReport {
        empirical,
        analytic,
        bound: 1.0 / (4.0 * n as f64),
        samples: num_samples,
        mfe,
    })
}

/// `e_n = ||s_n - s_bar||_inf` at every kept snapshot, ending with the
/// terminal state.
pub fn convergence_distance_series(trace: &RunTrace, mfe: &StateProfile) -> Result<Vec<(usize, f64)>> {
    let mut out = trace
        .snapshot_slots()
        .zip(&trace.snapshots)
        .map(|(n, s)| Ok((n, s.sup_distance(mfe)?)))
        .collect::<Result<Vec<_>>>()?;
    if out.last().map(|&(n, _)| n) != Some(trace.horizon()) {
        out.push((trace.horizon(), trace.terminal.sup_distance(mfe)?));
    }
    Ok(out)
}

/// One row of a check report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub inputs: String,
    pub pass: bool,
    pub margin: f64,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, inputs: impl Into<String>, pass: bool, margin: f64) -> Self {
        Self {
            check: check.into(),
            inputs: inputs.into(),
            pass,
            margin,
        }
    }
}

/// Contraction verdicts for a game as report rows.
pub fn contraction_records(game: &Game) -> Result<Vec<CheckRecord>> {
    let theta = game.reward().require_analysable()?;
    let beta = game.beta_max();
    let eta = game.config().eta.limit();
    let inputs = format!("theta={theta} beta={beta} eta={eta}");
    let mut records = Vec::new();
    let general = contraction_check_general(theta, beta, eta);
    records.push(CheckRecord::new("contraction_general", &inputs, general.satisfied, general.margin));
    if game.reward().kind() == RewardKind::Linear {
        let linear = contraction_check_linear(theta, beta, eta);
        records.push(CheckRecord::new("contraction_linear", &inputs, linear.satisfied, linear.margin));
    }
    let applicable = contraction_check_game(game)?;
    records.push(CheckRecord::new(
        "contraction_applicable",
        inputs,
        applicable.satisfied,
        applicable.margin,
    ));
    Ok(records)
}

/// Writes `check,inputs,pass,margin` rows to `path`.
pub fn write_checks(path: &Path, records: &[CheckRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BetaSpec, EtaSpec, GameConfig};
    use crate::reward::{CustomReward, RewardKind};
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn general_condition_values() {
        let c = contraction_check_general(0.5, 0.5, 0.2);
        assert!(c.satisfied);
        assert!((c.margin - 0.2).abs() < 1e-15);
        let c = contraction_check_general(0.5, 30.0, 0.2);
        assert!(!c.satisfied);
        assert!((c.constant() - 48.0).abs() < 1e-12);
        assert_eq!(contraction_check_general(0.0, 100.0, 0.0).margin, 1.0);
    }

    #[test]
    fn linear_condition_values() {
        let c = contraction_check_linear(1.0, 2.0, 0.2);
        assert!(c.satisfied);
        assert!((c.constant() - 0.8).abs() < 1e-15);
        let c = contraction_check_linear(1.0, 40.0, 0.2);
        assert!(!c.satisfied);
        assert!((c.constant() - 16.0).abs() < 1e-12);
        assert!(contraction_check_linear(1.0, 1e6, 1.0).satisfied);
    }

    #[test]
    fn heterogeneous_condition_values() {
        let c = contraction_check_heterogeneous(0.5, &[0.1, 0.2], false);
        assert!(c.satisfied);
        assert!((c.constant() - 0.4).abs() < 1e-15);
        assert_eq!(
            contraction_check_heterogeneous(0.7, &[0.3, 0.3], true),
            contraction_check_linear(0.7, 0.3, 0.0)
        );
        assert!(contraction_check_heterogeneous(0.0, &[5.0, 90.0], false).satisfied);
    }

    proptest! {
        #[test]
        fn conditions_are_monotone(
            theta in 0.0f64..2.0, dt in 0.0f64..1.0,
            beta in 0.01f64..50.0, db in 0.0f64..10.0,
            eta in 0.0f64..1.0, de in 0.0f64..1.0,
        ) {
            let eta_low = eta * (1.0 - de);
            for check in [contraction_check_general, contraction_check_linear] {
                let base = check(theta, beta, eta);
                for worse in [check(theta + dt, beta, eta), check(theta, beta + db, eta), check(theta, beta, eta_low)] {
                    prop_assert!(worse.margin <= base.margin + 1e-15);
                    prop_assert!(!(worse.satisfied && !base.satisfied));
                }
            }
        }
    }

    #[derive(Debug)]
    struct Constant;

    impl CustomReward for Constant {
        fn reward(&self, _: &[f64], _: usize) -> f64 {
            0.7
        }
        fn lipschitz(&self) -> Option<f64> {
            Some(0.0)
        }
        fn output_range(&self) -> Option<(f64, f64)> {
            Some((0.7, 0.7))
        }
    }

    #[derive(Debug)]
    struct Undeclared;

    impl CustomReward for Undeclared {
        fn reward(&self, _: &[f64], _: usize) -> f64 {
            0.5
        }
    }

    fn linear_game(n: usize, beta: f64, eta: f64) -> Game {
        Game::new(GameConfig::homogeneous(n, 4, 10, RewardKind::Linear, 1.0, beta, eta, 3)).unwrap()
    }

    #[test]
    fn constant_reward_has_zero_estimate() {
        let c = GameConfig::homogeneous(5, 3, 10, RewardKind::Custom, 0.0, 2.0, 0.2, 1);
        let g = Game::with_custom_reward(c.clone(), Arc::new(Constant)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(empirical_contraction_estimate(&g, 20, &mut rng, EstimateMode::MeanField).unwrap(), 0.0);
        let mc = EstimateMode::MonteCarlo { samples: 10 };
        assert_eq!(empirical_contraction_estimate(&g, 5, &mut rng, mc).unwrap(), 0.0);

        let g = Game::with_custom_reward(c, Arc::new(Undeclared)).unwrap();
        assert!(matches!(
            empirical_contraction_estimate(&g, 5, &mut rng, EstimateMode::MeanField),
            Err(Error::UndeclaredRewardProperty(_))
        ));
        assert!(contraction_check_game(&g).is_err());
    }

    #[test]
    fn linear_mean_field_estimate_below_relaxed_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, beta, eta) in [(10, 2.0, 0.2), (3, 0.5, 0.0), (50, 1.0, 0.5)] {
            let g = linear_game(n, beta, eta);
            let bound = contraction_check_linear(1.0, beta, eta).constant();
            let est = empirical_contraction_estimate(&g, 100, &mut rng, EstimateMode::MeanField).unwrap();
            assert!(est <= bound + 1e-9, "{est} > {bound}");
            assert!(est > 0.0);
        }
    }

    #[test]
    fn general_monte_carlo_estimate_below_theorem_constant() {
        let g = Game::new(GameConfig::homogeneous(4, 3, 10, RewardKind::General, 0.5, 0.5, 0.2, 8)).unwrap();
        let samples = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = empirical_contraction_estimate(&g, 3, &mut rng, EstimateMode::MonteCarlo { samples }).unwrap();
        let bound = contraction_check_general(0.5, 0.5, 0.2).constant();
        assert!(est <= bound + 3.0 / (samples as f64).sqrt(), "{est}");
    }

    #[test]
    fn game_level_check_picks_the_condition() {
        let g = linear_game(5, 2.0, 0.2);
        assert_eq!(contraction_check_game(&g).unwrap(), contraction_check_linear(1.0, 2.0, 0.2));
        let mut c = g.config().clone();
        c.beta = BetaSpec::PerAgent(vec![0.1, 0.2, 0.3, 0.4, 2.5]);
        c.eta = EtaSpec::Diminishing { eta0: 0.2, kappa: 1.0 };
        let g = Game::new(c).unwrap();
        assert_eq!(contraction_check_game(&g).unwrap(), contraction_check_linear(1.0, 2.5, 0.0));
        assert_eq!(contraction_records(&g).unwrap().len(), 3);
    }

    /// Independent evaluation of both sides straight from the update rule.
    fn bound_oracle(trace: &RunTrace, i: usize, j: usize, k: usize) -> (f64, f64) {
        let g = &trace.game;
        let m = g.num_arms() as f64;
        let beta = g.betas()[i];
        let s0 = trace.initial().row(i);
        let w0: f64 = s0.iter().map(|v| (beta * v).exp()).sum();
        let mut lhs = beta * s0[j] - w0.ln();
        let mut rhs = 0.0;
        for n in 0..=k {
            let eta = g.eta_at(n);
            let s = trace.state_at(n).unwrap().row(i);
            let a = trace.slots[n].actions[i];
            let gamma = g.schedule().gamma(n);
            let mut delta = vec![0.0; s.len()];
            delta[a] = gamma * (trace.slots[n].arm_rewards[a] - s[a]);
            lhs += beta * delta[j];
            let sigma = trace.slots[n].sigma_row(i);
            for l in 0..s.len() {
                rhs += beta * (sigma[l] - eta / m) * delta[l] / (1.0 - eta)
                    + (std::f64::consts::E - 2.0) * beta * beta * sigma[l] * delta[l] * delta[l] / (1.0 - eta);
            }
        }
        (lhs, rhs)
    }

    #[test]
    fn state_change_bound_matches_oracle_and_holds() {
        let g = Game::new(GameConfig::homogeneous(6, 4, 60, RewardKind::General, 0.5, 0.5, 0.2, 12)).unwrap();
        let trace = g.run().unwrap();
        for i in 0..6 {
            for j in 0..4 {
                let series = state_change_bound_series(&trace, i, j).unwrap();
                for k in [0, 1, 17, 59] {
                    let (lhs, rhs) = bound_oracle(&trace, i, j, k);
                    assert!((series[k].lhs - lhs).abs() < 1e-10);
                    assert!((series[k].rhs - rhs).abs() < 1e-10);
                }
                assert!(series.iter().all(|b| b.holds(1e-9)));
            }
        }
        assert!(state_change_bound(&trace, 0, 0, 60).is_err());
    }

    #[test]
    fn frozen_dynamics_leave_a_non_positive_lhs() {
        let g = Game::new(GameConfig::homogeneous(2, 3, 3, RewardKind::General, 0.5, 0.5, 0.2, 1)).unwrap();
        let mut trace = g.simulate(3).unwrap();
        let s0 = trace.initial().clone();
        trace.snapshots = vec![s0.clone(); 4];
        let series = state_change_bound_series(&trace, 1, 2).unwrap();
        let expected = 0.5 * s0.get(1, 2) - log_sum_exp(s0.row(1).iter().map(|v| 0.5 * v));
        for b in series {
            assert_eq!(b.rhs, 0.0);
            assert!((b.lhs - expected).abs() < 1e-15);
            assert!(b.lhs <= 0.0);
        }
    }

    #[test]
    fn uniform_start_lhs_is_minus_log_m_before_changes() {
        let g = Game::new(GameConfig::homogeneous(1, 4, 1, RewardKind::General, 0.5, 0.7, 0.2, 1)).unwrap();
        let s0 = StateProfile::broadcast(1, &[0.3; 4]);
        let trace = g.simulate_from(s0, 1).unwrap();
        let b = state_change_bound(&trace, 0, 2, 0).unwrap();
        let change = 0.7 * (trace.state_at(1).unwrap().get(0, 2) - 0.3);
        assert!((b.lhs - change + 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn full_exploration_is_rejected() {
        let g = Game::new(GameConfig::homogeneous(2, 2, 3, RewardKind::General, 0.5, 0.5, 1.0, 1)).unwrap();
        let trace = g.run().unwrap();
        assert!(matches!(state_change_bound_series(&trace, 0, 0), Err(Error::FullExploration)));
    }

    #[test]
    fn variance_under_uniform_play() {
        let n = 40;
        let g = Game::new(GameConfig::homogeneous(n, 4, 10, RewardKind::General, 0.5, 0.5, 1.0, 1)).unwrap();
        let report = population_variance_check(&g, 400, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let exact = 0.25 * 0.75 / n as f64;
        for (&a, &e) in report.analytic.iter().zip(&report.empirical) {
            assert!((a - exact).abs() < 1e-15);
            assert!((e - exact).abs() < 0.3 * exact);
        }
        assert!(report.analytic_within());
        assert_eq!(report.bound, 1.0 / 160.0);
        assert!(population_variance_check(&g, 29, &mut ChaCha8Rng::seed_from_u64(6)).is_err());

        let doubled = Game::new(GameConfig::homogeneous(2 * n, 4, 10, RewardKind::General, 0.5, 0.5, 1.0, 1)).unwrap();
        let r2 = population_variance_check(&doubled, 30, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(r2.bound * 2.0, report.bound);
    }

    #[test]
    fn variance_needs_a_converged_equilibrium() {
        let g = linear_game(5, 2.0, 0.2);
        let mut mfe = solve_mfe(&g, 0, MfeOptions::default()).unwrap();
        mfe.converged = false;
        assert!(matches!(
            variance_at(&g, mfe, 50, &mut ChaCha8Rng::seed_from_u64(1)),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn distance_series_at_the_equilibrium() {
        let g = Game::new(GameConfig::homogeneous(5, 4, 10, RewardKind::General, 0.5, 0.5, 0.2, 1)).unwrap();
        let mfe = solve_mfe(&g, 0, MfeOptions::default()).unwrap();
        let trace = g.simulate_from(mfe.state.clone(), 0).unwrap();
        assert_eq!(convergence_distance_series(&trace, &mfe.state).unwrap(), vec![(0, 0.0)]);
        let trace = g.run().unwrap();
        let series = convergence_distance_series(&trace, &mfe.state).unwrap();
        assert_eq!(series.len(), 11);
        assert!(series.iter().all(|&(_, e)| (0.0..=1.0).contains(&e)));
    }

    #[test]
    fn check_report_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checks.csv");
        let g = linear_game(5, 40.0, 0.2);
        write_checks(&path, &contraction_records(&g).unwrap()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("check,inputs,pass,margin"));
        assert!(lines.next().unwrap().starts_with("contraction_general,theta=1 beta=40 eta=0.2,false,"));
    }
}
