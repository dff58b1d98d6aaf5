//! The discrete-time stochastic bandit game.
//!
//! Each slot every agent samples an arm from its Hedge policy, the empirical
//! population profile is formed from all samples at once, each agent observes
//! the reward of its own arm, and only that arm's state moves toward the
//! observed reward by the slot's stepsize.

use crate::error::{Error, Result};
use crate::game::{init_state_profile, Game};
use crate::policy::sample_arm;
use crate::profile::{PopulationProfile, StateProfile};
use crate::rng::StreamRng;

/// Everything observed in one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotRecord {
    /// 0-based arm played by each agent.
    pub actions: Vec<usize>,
    pub population: PopulationProfile,
    /// `r(f_n, j)` for every arm.
    pub arm_rewards: Vec<f64>,
    /// Realized reward of each agent.
    pub rewards: Vec<f64>,
    /// `N x M` row-major policy probabilities the actions were drawn from.
    pub sigma: Vec<f64>,
}

impl SlotRecord {
    pub fn sigma_row(&self, agent: usize) -> &[f64] {
        let m = self.arm_rewards.len();
        &self.sigma[agent * m..(agent + 1) * m]
    }
}

/// A complete run: per-slot records plus state snapshots every
/// `snapshot_stride` slots (`snapshots[k]` is the state at slot
/// `k * snapshot_stride`).
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub game: Game,
    pub slots: Vec<SlotRecord>,
    pub snapshots: Vec<StateProfile>,
    pub snapshot_stride: usize,
    pub terminal: StateProfile,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn initial(&self) -> &StateProfile {
        &self.snapshots[0]
    }

    pub fn is_full(&self) -> bool {
        self.snapshot_stride == 1
    }

    /// State at slot `n` if it was kept.
    pub fn state_at(&self, n: usize) -> Option<&StateProfile> {
        if n == self.horizon() {
            return Some(&self.terminal);
        }
        if n % self.snapshot_stride != 0 {
            return None;
        }
        self.snapshots.get(n / self.snapshot_stride)
    }

    /// Slot indices of the kept snapshots.
    pub fn snapshot_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.snapshots.len()).map(|k| k * self.snapshot_stride)
    }

    pub(crate) fn require_full(&self) -> Result<()> {
        if self.is_full() {
            Ok(())
        } else {
            Err(Error::ThinnedTrace(self.snapshot_stride))
        }
    }
}

/// `f(j) = #{i : a_i = j} / N`.
pub fn population_profile(actions: &[usize], num_agents: usize, num_arms: usize) -> Result<PopulationProfile> {
    if actions.len() != num_agents {
        return Err(Error::ShapeMismatch {
            expected: (num_agents, 1),
            found: (actions.len(), 1),
        });
    }
    let mut counts = vec![0usize; num_arms];
    for &a in actions {
        if a >= num_arms {
            return Err(Error::InvalidArm { agent: None, arm: a });
        }
        counts[a] += 1;
    }
    let n = num_agents as f64;
    Ok(PopulationProfile::new_unchecked(
        counts.into_iter().map(|c| c as f64 / n).collect(),
    ))
}

impl Game {
    /// Advances the game one slot from `state`. `rngs` holds one stream per
    /// agent.
    pub fn step(&self, state: &StateProfile, n: usize, rngs: &mut [StreamRng]) -> Result<(StateProfile, SlotRecord)> {
        self.check_shape(state)?;
        let (num_agents, m) = state.shape();
        if rngs.len() != num_agents {
            return Err(Error::InvalidArgument(format!(
                "{} generator streams for {num_agents} agents",
                rngs.len()
            )));
        }

        let sigma = self.probability_matrix(state, |i| self.policy_params(i, n))?;
        let actions = sigma
            .chunks_exact(m)
            .zip(rngs.iter_mut())
            .map(|(probs, rng)| sample_arm(probs, rng))
            .collect::<Result<Vec<_>>>()?;
        let population = population_profile(&actions, num_agents, m)?;
        let arm_rewards = self.reward().reward_vector(population.fractions())?;

        let gamma = self.schedule().gamma(n);
        let mut next = state.clone();
        let rewards: Vec<f64> = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let r = arm_rewards[a];
                let s = state.get(i, a);
                next.set(i, a, ((1.0 - gamma) * s + gamma * r).clamp(0.0, 1.0));
                r
            })
            .collect();

        Ok((
            next,
            SlotRecord {
                actions,
                population,
                arm_rewards,
                rewards,
                sigma,
            },
        ))
    }

    /// Runs the configured horizon from the seeded initial state.
    pub fn run(&self) -> Result<RunTrace> {
        self.simulate(self.horizon())
    }

    /// Runs `slots` slots from the seeded initial state.
    pub fn simulate(&self, slots: usize) -> Result<RunTrace> {
        let initial = init_state_profile(self, &self.streams());
        self.simulate_from(initial, slots)
    }

    /// Runs `slots` slots from an explicit initial state.
    pub fn simulate_from(&self, initial: StateProfile, slots: usize) -> Result<RunTrace> {
        self.check_shape(&initial)?;
        let stride = self.config().effective_snapshot_stride();
        let mut rngs = self.streams().agent_streams(self.num_agents());
        let mut records = Vec::with_capacity(slots);
        let mut snapshots = vec![initial.clone()];
        let mut state = initial;
        for n in 0..slots {
            let (next, record) = self.step(&state, n, &mut rngs)?;
            records.push(record);
            state = next;
            if (n + 1) % stride == 0 && n + 1 < slots {
                snapshots.push(state.clone());
            }
        }
        if slots > 0 && slots % stride == 0 {
            snapshots.push(state.clone());
        }
        Ok(RunTrace {
            game: self.clone(),
            slots: records,
            snapshots,
            snapshot_stride: stride,
            terminal: state,
        })
    }
}

/// Empirical regret of agent `agent`: the largest total gap between a fixed
/// playable arm's reward and the policy's expected reward,
/// `max_j sum_n (r(f_n, j) - sum_k sigma(s_n, k) r(f_n, k))`.
pub fn empirical_regret(trace: &RunTrace, agent: usize) -> Result<f64> {
    if agent >= trace.game.num_agents() {
        return Err(Error::InvalidArgument(format!("agent {agent} out of range")));
    }
    let arms = trace.game.agent_arms(agent);
    let mut fixed = vec![0.0; trace.game.num_arms()];
    let mut expected = 0.0;
    for slot in &trace.slots {
        let sigma = slot.sigma_row(agent);
        for &j in arms {
            fixed[j] += slot.arm_rewards[j];
            expected += sigma[j] * slot.arm_rewards[j];
        }
    }
    let best = arms.iter().map(|&j| fixed[j]).fold(f64::NEG_INFINITY, f64::max);
    Ok(best - expected)
}

/// Per-agent empirical regrets.
pub fn agent_regrets(trace: &RunTrace) -> Result<Vec<f64>> {
    (0..trace.game.num_agents()).map(|i| empirical_regret(trace, i)).collect()
}

/// Empirical regret averaged over agents.
pub fn mean_regret(trace: &RunTrace) -> Result<f64> {
    let regrets = agent_regrets(trace)?;
    Ok(regrets.iter().sum::<f64>() / regrets.len() as f64)
}

/// Total realized reward per agent, averaged over agents.
pub fn cumulative_reward(trace: &RunTrace) -> f64 {
    let total: f64 = trace.slots.iter().map(|s| s.rewards.iter().sum::<f64>()).sum();
    total / trace.game.num_agents() as f64
}
