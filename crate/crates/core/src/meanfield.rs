//! The deterministic mean-field side of the game.
//!
//! The population profile of a state is the average policy,
//! `f(s, j) = (1/N) sum_i sigma(s^i, j)`, and each agent's learned reward of
//! arm `j` relaxes toward `r(f(s), j)` at the rate it plays `j`:
//!
//! ```text
//! ds^i(j)/dt = sigma(s^i, j) (r(f(s), j) - s^i(j))
//! ```
//!
//! Using `r(f(s), j)` rather than `E[r(f_n, j)]` is exact for the linear
//! family and off by `O(1/sqrt(N))` for the general one. A Monte-Carlo
//! estimate of the expectation is available for comparison.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::policy::sample_arm;
use crate::profile::{PopulationProfile, StateProfile};
use crate::rng::Purpose;
use crate::sim::RunTrace;

/// Overshoot outside `[0, 1]` that the integrator silently clamps.
pub const CLAMP_TOL: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 50.0;

/// Time-stamped sequence of state profiles, linear between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateProfile>,
}

impl OdeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn terminal(&self) -> &StateProfile {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// State at time `t`, interpolating linearly between samples.
    pub fn at(&self, t: f64) -> Result<StateProfile> {
        let (first, last) = (self.times[0], self.end_time());
        if !(t >= first && t <= last) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside trajectory range [{first}, {last}]"
            )));
        }
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 || self.times[k - 1] == t || k == self.times.len() {
            return Ok(self.states[k.saturating_sub(1)].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        let values = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x + w * (y - x))
            .collect();
        Ok(StateProfile::from_raw(a.num_agents(), a.num_arms(), values))
    }
}

/// Fixed-point iteration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfeOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight `lambda` of the new iterate in `s <- (1 - lambda) s + lambda R(s)`.
    pub damping: f64,
}

impl Default for MfeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            damping: 0.5,
        }
    }
}

impl MfeOptions {
    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfeSolution {
    pub state: StateProfile,
    /// `||R(s) - s||_inf` at the returned state.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn policy_matrix_into(game: &Game, values: &[f64], sigma: &mut [f64]) -> Result<()> {
    let m = game.num_arms();
    for (i, (row, out)) in values.chunks_exact(m).zip(sigma.chunks_exact_mut(m)).enumerate() {
        game.agent_probabilities(row, i, game.mean_field_params(i), out)?;
    }
    Ok(())
}

fn column_means(sigma: &[f64], m: usize) -> Vec<f64> {
    let n = sigma.len() / m;
    let mut f = vec![0.0; m];
    for row in sigma.chunks_exact(m) {
        for (fj, s) in f.iter_mut().zip(row) {
            *fj += s;
        }
    }
    f.iter_mut().for_each(|x| *x /= n as f64);
    f
}

/// `N x M` policy matrix under the mean-field (long-run) parameters.
pub fn mean_field_policy(game: &Game, state: &StateProfile) -> Result<Vec<f64>> {
    game.check_shape(state)?;
    let mut sigma = vec![0.0; state.values().len()];
    policy_matrix_into(game, state.values(), &mut sigma)?;
    Ok(sigma)
}

/// `f(j) = (1/N) sum_i sigma(s^i, j)`; agents that cannot play `j` add nothing.
pub fn mean_population(game: &Game, state: &StateProfile) -> Result<PopulationProfile> {
    let sigma = mean_field_policy(game, state)?;
    Ok(PopulationProfile::new_unchecked(column_means(&sigma, game.num_arms())))
}

/// `r(f(s), j)` for every arm.
pub fn mean_field_rewards(game: &Game, state: &StateProfile) -> Result<Vec<f64>> {
    let f = mean_population(game, state)?;
    game.reward().reward_vector(f.fractions())
}

struct Rhs<'a> {
    game: &'a Game,
    sigma: Vec<f64>,
    rewards: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(game: &'a Game) -> Self {
        Self {
            game,
            sigma: vec![0.0; game.num_agents() * game.num_arms()],
            rewards: vec![0.0; game.num_arms()],
        }
    }

    fn eval(&mut self, values: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.game.num_arms();
        policy_matrix_into(self.game, values, &mut self.sigma)?;
        let f = column_means(&self.sigma, m);
        self.game.reward().reward_vector_into(&f, &mut self.rewards)?;
        for ((o, s), (sig, j)) in out
            .iter_mut()
            .zip(values)
            .zip(self.sigma.iter().zip((0..m).cycle()))
        {
            *o = sig * (self.rewards[j] - s);
        }
        Ok(())
    }
}

/// Right-hand side of the mean-field ODE as an `N x M` row-major matrix.
pub fn ode_rhs(game: &Game, state: &StateProfile) -> Result<Vec<f64>> {
    game.check_shape(state)?;
    let mut out = vec![0.0; state.values().len()];
    Rhs::new(game).eval(state.values(), &mut out)?;
    Ok(out)
}

/// Classical fourth-order Runge-Kutta from `initial` over `[0, t_end]`.
///
/// Uses `ceil(t_end / dt)` equal steps, so the step never exceeds `dt`.
/// Entries leaving `[0, 1]` by less than [`CLAMP_TOL`] are clamped; a
/// larger excursion means `dt` is too coarse and is reported as
/// [`Error::Unstable`].
pub fn integrate_ode(game: &Game, initial: &StateProfile, t_end: f64, dt: f64) -> Result<OdeTrajectory> {
    game.check_shape(initial)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end {t_end} must be positive")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt {dt} must be positive")));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let (n, m) = initial.shape();
    let len = n * m;

    let mut rhs = Rhs::new(game);
    let mut k = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let mut stage = vec![0.0; len];
    let mut y = initial.values().to_vec();

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(initial.clone());

    for step in 1..=steps {
        let [k1, k2, k3, k4] = &mut k;
        rhs.eval(&y, k1)?;
        for ((s, yv), kv) in stage.iter_mut().zip(&y).zip(k1.iter()) {
            *s = yv + 0.5 * h * kv;
        }
        rhs.eval(&stage, k2)?;
        for ((s, yv), kv) in stage.iter_mut().zip(&y).zip(k2.iter()) {
            *s = yv + 0.5 * h * kv;
        }
        rhs.eval(&stage, k3)?;
        for ((s, yv), kv) in stage.iter_mut().zip(&y).zip(k3.iter()) {
            *s = yv + h * kv;
        }
        rhs.eval(&stage, k4)?;

        let t = step as f64 * h;
        for (idx, yv) in y.iter_mut().enumerate() {
            let next = *yv + h / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
            if !next.is_finite() {
                return Err(Error::NonFinite("ode state"));
            }
            let overshoot = (-next).max(next - 1.0);
            if overshoot > 0.0 {
                if overshoot >= CLAMP_TOL {
                    return Err(Error::Unstable { t, overshoot });
                }
                *yv = next.clamp(0.0, 1.0);
            } else {
                *yv = next;
            }
        }
        times.push(t);
        states.push(StateProfile::from_raw(n, m, y.clone()));
    }
    Ok(OdeTrajectory { times, states })
}

/// `R(s)^i(j) = r(f(s), j)` on playable entries, zero elsewhere.
pub fn fixed_point_map(game: &Game, state: &StateProfile) -> Result<StateProfile> {
    let rewards = mean_field_rewards(game, state)?;
    let mut out = StateProfile::broadcast(game.num_agents(), &rewards);
    game.mask(&mut out);
    Ok(out)
}

fn iterate(
    start: Vec<f64>,
    options: MfeOptions,
    mut map: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    options.validate()?;
    let lambda = options.damping;
    let mut s = start;
    for k in 0..options.max_iter {
        let r = map(&s)?;
        let residual = s.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= options.tol {
            return Ok((s, residual, k, true));
        }
        for (a, b) in s.iter_mut().zip(&r) {
            *a = (1.0 - lambda) * *a + lambda * b;
        }
    }
    let r = map(&s)?;
    let residual = s.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let converged = residual <= options.tol;
    Ok((s, residual, options.max_iter, converged))
}

/// Damped fixed-point iteration `s <- (1 - lambda) s + lambda R(s)` from
/// `initial`. Non-convergence is reported in the solution, not as an error.
pub fn solve_mfe_from(game: &Game, initial: &StateProfile, options: MfeOptions) -> Result<MfeSolution> {
    game.check_shape(initial)?;
    let (n, m) = initial.shape();
    let (values, residual, iterations, converged) = iterate(initial.values().to_vec(), options, |v| {
        fixed_point_map(game, &StateProfile::from_raw(n, m, v.to_vec())).map(StateProfile::into_values)
    })?;
    Ok(MfeSolution {
        state: StateProfile::from_raw(n, m, values),
        residual,
        iterations,
        converged,
    })
}

/// [`solve_mfe_from`] starting at a uniform random profile drawn from the
/// game seed's solver stream `start`.
pub fn solve_mfe(game: &Game, start: u64, options: MfeOptions) -> Result<MfeSolution> {
    let initial = game.random_profile(&mut game.streams().stream(Purpose::SolverStart, start));
    solve_mfe_from(game, &initial, options)
}

/// Fixed-point iteration on a single `M`-vector shared by all agents.
///
/// Only valid for homogeneous games without arm subsets, where the fixed
/// point is agent-independent; the result is broadcast to `N x M`.
pub fn solve_mfe_symmetric(game: &Game, initial: &[f64], options: MfeOptions) -> Result<MfeSolution> {
    let betas = game.betas();
    if game.has_subsets() || betas.iter().any(|&b| b != betas[0]) {
        return Err(Error::InvalidArgument(
            "symmetric solve needs identical agents playing every arm".into(),
        ));
    }
    let m = game.num_arms();
    if initial.len() != m {
        return Err(Error::ShapeMismatch {
            expected: (1, m),
            found: (1, initial.len()),
        });
    }
    let params = game.mean_field_params(0);
    let mut sigma = vec![0.0; m];
    let (row, residual, iterations, converged) = iterate(initial.to_vec(), options, |v| {
        game.agent_probabilities(v, 0, params, &mut sigma)?;
        game.reward().reward_vector(&sigma)
    })?;
    Ok(MfeSolution {
        state: StateProfile::broadcast(game.num_agents(), &row),
        residual,
        iterations,
        converged,
    })
}

/// `V(t) = ||s_t - s_bar||_inf` at every trajectory sample.
pub fn lyapunov_series(traj: &OdeTrajectory, mfe: &StateProfile) -> Result<Vec<f64>> {
    traj.states.iter().map(|s| s.sup_distance(mfe)).collect()
}

/// Piecewise-linear embedding of a trace's states at the knots
/// `tau_n = sum_{k<n} gamma_k`. Needs every slot's state.
pub fn interpolated_process(trace: &RunTrace) -> Result<OdeTrajectory> {
    trace.require_full()?;
    let times = trace.game.schedule().knots(trace.horizon());
    let states = trace.snapshots[..=trace.horizon()].to_vec();
    Ok(OdeTrajectory { times, states })
}

/// `sup_{0 <= h <= window} ||interp(t + h) - Phi_h(interp(t))||_inf` on the
/// integrator's grid, where `Phi` is the mean-field flow.
pub fn pseudotrajectory_distance(game: &Game, interp: &OdeTrajectory, t: f64, window: f64, dt: f64) -> Result<f64> {
    if window == 0.0 {
        return Ok(0.0);
    }
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!("window {window} must be non-negative")));
    }
    if t + window > interp.end_time() {
        return Err(Error::InvalidArgument(format!(
            "window [{t}, {}] extends past the process end {}",
            t + window,
            interp.end_time()
        )));
    }
    let start = interp.at(t)?;
    let flow = integrate_ode(game, &start, window, dt)?;
    let mut sup: f64 = 0.0;
    for (h, state) in flow.times.iter().zip(&flow.states) {
        let probe = interp.at((t + h).min(interp.end_time()))?;
        sup = sup.max(probe.sup_distance(state)?);
    }
    Ok(sup)
}

/// Monte-Carlo estimate of `E[r(f, j) | agent i plays j]` for every agent
/// and arm, with the other agents drawing from their mean-field policies.
/// Returns an `N x M` row-major matrix; unplayable entries are zero.
pub fn expected_rewards_monte_carlo<R: Rng + ?Sized>(
    game: &Game,
    state: &StateProfile,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is needed".into()));
    }
    let sigma = mean_field_policy(game, state)?;
    let (n, m) = state.shape();
    let reward = game.reward();
    let own_arm = reward.own_arm_only();
    let mut acc = vec![0.0; n * m];
    let mut actions = vec![0usize; n];
    let mut counts = vec![0usize; m];
    let mut f = vec![0.0; m];
    for _ in 0..samples {
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, a) in actions.iter_mut().enumerate() {
            *a = sample_arm(&sigma[i * m..(i + 1) * m], rng)?;
            counts[*a] += 1;
        }
        for (i, &a) in actions.iter().enumerate() {
            for &j in game.agent_arms(i) {
                let value = if own_arm {
                    let c = counts[j] + usize::from(a != j);
                    f[j] = c as f64 / n as f64;
                    reward.reward(&f, j)?
                } else {
                    for (l, fl) in f.iter_mut().enumerate() {
                        let c = counts[l] - usize::from(a == l) + usize::from(j == l);
                        *fl = c as f64 / n as f64;
                    }
                    reward.reward(&f, j)?
                };
                acc[i * m + j] += value;
            }
        }
    }
    acc.iter_mut().for_each(|v| *v /= samples as f64);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GameConfig;
    use crate::game::init_state_profile;
    use crate::policy::{hedge_probabilities, PolicyParams};
    use crate::reward::RewardKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn game(kind: RewardKind, n: usize, theta: f64, beta: f64, eta: f64, thetas: Vec<f64>) -> Game {
        let mut c = GameConfig::homogeneous(n, thetas.len(), 10, kind, theta, beta, eta, 1);
        c.reward.arm_thetas = Some(thetas);
        Game::new(c).unwrap()
    }

    fn contraction(n: usize) -> Game {
        game(RewardKind::General, n, 0.5, 0.5, 0.2, vec![0.5, 0.45, 0.4, 0.42])
    }

    #[test]
    fn shared_state_population_is_the_policy() {
        let g = contraction(5);
        let row = [0.1, 0.9, 0.4, 0.3];
        let s = StateProfile::broadcast(5, &row);
        let f = mean_population(&g, &s).unwrap();
        let p = hedge_probabilities(&row, PolicyParams { beta: 0.5, eta: 0.2 }).unwrap();
        for (a, b) in f.fractions().iter().zip(&p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn full_exploration_population_is_uniform() {
        let g = game(RewardKind::Linear, 7, 1.0, 3.0, 1.0, vec![1.0, 0.9, 0.8]);
        let s = g.random_profile(&mut ChaCha8Rng::seed_from_u64(3));
        let f = mean_population(&g, &s).unwrap();
        assert!(f.fractions().iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn two_agent_population_by_hand() {
        let g = game(RewardKind::Linear, 2, 1.0, 1.0, 0.0, vec![1.0, 1.0]);
        let s = StateProfile::from_values(2, 2, vec![1.0, 0.0, 0.2, 0.6]).unwrap();
        let f = mean_population(&g, &s).unwrap();
        let e = std::f64::consts::E;
        let p1 = e / (e + 1.0);
        let p2 = (0.2f64).exp() / ((0.2f64).exp() + (0.6f64).exp());
        assert!((f.get(0) - (p1 + p2) / 2.0).abs() < 1e-15);
        assert!((f.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subset_population_divides_by_all_agents() {
        let mut c = GameConfig::homogeneous(2, 3, 10, RewardKind::General, 0.5, 0.5, 0.2, 1);
        c.arm_subsets = Some(vec![vec![1], vec![1, 2, 3]]);
        let g = Game::new(c).unwrap();
        let s = init_state_profile(&g, &g.streams());
        let f = mean_population(&g, &s).unwrap();
        assert!((f.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(f.get(0) > 0.5);
        let d = ode_rhs(&g, &s).unwrap();
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn rhs_with_uniform_play_by_hand() {
        let theta = 0.7;
        let g = game(RewardKind::Linear, 3, theta, 2.0, 1.0, vec![theta; 4]);
        let row = [0.1, 0.5, 0.9, 0.3];
        let s = StateProfile::broadcast(3, &row);
        let d = ode_rhs(&g, &s).unwrap();
        for (k, v) in d.iter().enumerate() {
            let expected = 0.25 * (1.0 - theta / 4.0 - row[k % 4]);
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_sign_follows_reward_gap() {
        let g = contraction(10);
        let s = g.random_profile(&mut ChaCha8Rng::seed_from_u64(9));
        let r = mean_field_rewards(&g, &s).unwrap();
        let d = ode_rhs(&g, &s).unwrap();
        for (k, v) in d.iter().enumerate() {
            let gap = r[k % 4] - s.values()[k];
            assert_eq!(v.signum(), gap.signum());
        }
    }

    #[test]
    fn closed_form_fixed_point_under_uniform_play() {
        let thetas = vec![1.0, 0.85, 0.9, 0.8];
        let g = game(RewardKind::Linear, 6, 1.0, 2.0, 1.0, thetas.clone());
        let sol = solve_mfe(&g, 0, MfeOptions::default()).unwrap();
        assert!(sol.converged);
        for i in 0..6 {
            for (j, t) in thetas.iter().enumerate() {
                assert!((sol.state.get(i, j) - (1.0 - t / 4.0)).abs() <= 1e-10);
            }
        }
        let sym = solve_mfe_symmetric(&g, &[0.5; 4], MfeOptions::default()).unwrap();
        assert!(sym.state.sup_distance(&sol.state).unwrap() <= 2e-10);
    }

    #[test]
    fn contraction_fixed_point_is_unique() {
        let g = contraction(20);
        let first = solve_mfe(&g, 0, MfeOptions::default()).unwrap();
        assert!(first.converged);
        for start in 1..10 {
            let other = solve_mfe(&g, start, MfeOptions::default()).unwrap();
            assert!(other.converged);
            assert!(other.state.sup_distance(&first.state).unwrap() < 1e-6);
        }
        let rhs = ode_rhs(&g, &first.state).unwrap();
        assert!(rhs.iter().all(|v| v.abs() <= 10.0 * 1e-10));
        let sym = solve_mfe_symmetric(&g, &[0.2, 0.4, 0.6, 0.8], MfeOptions::default()).unwrap();
        assert!(sym.state.sup_distance(&first.state).unwrap() < 1e-9);
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = contraction(4);
        let sol = solve_mfe(&g, 0, MfeOptions { max_iter: 1, ..Default::default() }).unwrap();
        assert!(!sol.converged);
        assert!(sol.residual > 1e-10);
        assert_eq!(sol.iterations, 1);
        assert!(solve_mfe(&g, 0, MfeOptions { damping: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn ode_reaches_the_fixed_point() {
        let g = contraction(8);
        let mfe = solve_mfe(&g, 0, MfeOptions::default()).unwrap();
        let s0 = init_state_profile(&g, &g.streams());
        let traj = integrate_ode(&g, &s0, 150.0, 0.05).unwrap();
        assert!(traj.terminal().sup_distance(&mfe.state).unwrap() < 1e-4);
        let v = lyapunov_series(&traj, &mfe.state).unwrap();
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-8));
    }

    #[test]
    fn ode_is_fourth_order() {
        let g = contraction(3);
        let s0 = init_state_profile(&g, &g.streams());
        let end = |dt: f64| integrate_ode(&g, &s0, 2.0, dt).unwrap().terminal().clone();
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let ratio = a.sup_distance(&b).unwrap() / b.sup_distance(&c).unwrap();
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn ode_at_fixed_point_stays_put() {
        let g = contraction(4);
        let mfe = solve_mfe(&g, 0, MfeOptions::default()).unwrap();
        let traj = integrate_ode(&g, &mfe.state, 5.0, 0.01).unwrap();
        assert!(lyapunov_series(&traj, &mfe.state).unwrap().iter().all(|v| *v < 1e-8));
        assert!(integrate_ode(&g, &mfe.state, 0.0, 0.01).is_err());
        assert!(integrate_ode(&g, &mfe.state, 1.0, -0.1).is_err());
    }

    #[test]
    fn coarse_step_is_unstable() {
        let g = game(RewardKind::Linear, 2, 1.0, 40.0, 0.0, vec![1.0, 1.0]);
        let s = StateProfile::from_values(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        match integrate_ode(&g, &s, 10.0, 5.0) {
            Err(Error::Unstable { .. }) => {}
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_interpolation() {
        let a = StateProfile::from_values(1, 2, vec![0.0, 1.0]).unwrap();
        let b = StateProfile::from_values(1, 2, vec![1.0, 0.0]).unwrap();
        let traj = OdeTrajectory {
            times: vec![0.0, 2.0],
            states: vec![a.clone(), b.clone()],
        };
        assert_eq!(traj.at(0.0).unwrap(), a);
        assert_eq!(traj.at(2.0).unwrap(), b);
        assert_eq!(traj.at(0.5).unwrap().values(), &[0.25, 0.75]);
        assert!(traj.at(2.5).is_err());
    }

    #[test]
    fn interpolated_process_knots_and_midpoints() {
        let g = contraction(5);
        let trace = g.simulate(6).unwrap();
        let interp = interpolated_process(&trace).unwrap();
        assert!((interp.times[3] - 11.0 / 6.0).abs() < 1e-15);
        for n in 0..6 {
            assert_eq!(&interp.at(interp.times[n]).unwrap(), trace.state_at(n).unwrap());
            let gamma = g.schedule().gamma(n);
            let mid = interp.at(interp.times[n] + gamma / 2.0).unwrap();
            let (s, s1) = (trace.state_at(n).unwrap(), trace.state_at(n + 1).unwrap());
            for k in 0..s.values().len() {
                let expected = 0.5 * (s.values()[k] + s1.values()[k]);
                assert!((mid.values()[k] - expected).abs() < 1e-12);
            }
        }

        let mut c = g.config().clone();
        c.snapshot_stride = Some(2);
        let thinned = Game::new(c).unwrap().simulate(6).unwrap();
        assert!(matches!(interpolated_process(&thinned), Err(Error::ThinnedTrace(2))));
    }

    #[test]
    fn ode_solution_is_its_own_pseudotrajectory() {
        let g = contraction(4);
        let s0 = init_state_profile(&g, &g.streams());
        let traj = integrate_ode(&g, &s0, 4.0, 0.01).unwrap();
        let d = pseudotrajectory_distance(&g, &traj, 1.0, 1.0, 0.01).unwrap();
        assert!(d < 1e-9, "{d}");
        assert_eq!(pseudotrajectory_distance(&g, &traj, 1.0, 0.0, 0.01).unwrap(), 0.0);
        assert!(pseudotrajectory_distance(&g, &traj, 3.5, 1.0, 0.01).is_err());
    }

    #[test]
    fn monte_carlo_matches_closure_for_linear_reward() {
        // For a linear own-arm reward E[r(f, j) | i on j] is available in
        // closed form: f(j) = (1 + sum_{k != i} sigma_k(j)) / N.
        let g = game(RewardKind::Linear, 6, 1.0, 2.0, 0.2, vec![1.0, 0.9, 0.8]);
        let s = g.random_profile(&mut ChaCha8Rng::seed_from_u64(4));
        let sigma = mean_field_policy(&g, &s).unwrap();
        let mc = expected_rewards_monte_carlo(&g, &s, 40_000, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for i in 0..6 {
            for j in 0..3 {
                let others: f64 = (0..6).filter(|&k| k != i).map(|k| sigma[k * 3 + j]).sum();
                let exact = 1.0 - g.reward().arm_thetas[j] * (1.0 + others) / 6.0;
                assert!((mc[i * 3 + j] - exact).abs() < 0.01, "{i} {j}");
            }
        }
    }
}
