//! A validated configuration with every per-run random quantity resolved.

use std::sync::Arc;

use rand::Rng;

use crate::config::{BetaSpec, GameConfig};
use crate::error::{Error, Result};
use crate::policy::{hedge_probabilities_into, hedge_probabilities_subset, PolicyParams};
use crate::profile::StateProfile;
use crate::reward::{sample_arm_thetas, CustomReward, RewardKind, RewardSpec};
use crate::rng::{Purpose, SeedStreams};
use crate::stepsize::StepsizeSchedule;

/// A game ready to simulate: arm parameters, per-agent smoothing parameters
/// and arm subsets are fixed from the config and its seed.
#[derive(Clone, Debug)]
pub struct Game {
    config: GameConfig,
    reward: RewardSpec,
    betas: Vec<f64>,
    /// 0-based playable arms per agent; `None` when every agent plays every arm.
    subsets: Option<Vec<Vec<usize>>>,
    all_arms: Vec<usize>,
    schedule: StepsizeSchedule,
    streams: SeedStreams,
}

impl Game {
    /// Resolves a built-in reward family; per-arm parameters not given in the
    /// config are drawn from the run seed.
    pub fn new(config: GameConfig) -> Result<Self> {
        config.validate()?;
        let streams = SeedStreams::new(config.seed);
        let rc = &config.reward;
        let arm_thetas = match &rc.arm_thetas {
            Some(t) => t.clone(),
            None => sample_arm_thetas(rc.theta, config.num_arms, &mut streams.stream(Purpose::ArmThetas, 0)),
        };
        let reward = match rc.kind {
            RewardKind::General => RewardSpec::general(rc.theta, arm_thetas)?,
            RewardKind::Linear => RewardSpec::linear(rc.theta, arm_thetas)?,
            RewardKind::Custom => {
                return Err(Error::config(
                    "reward.kind",
                    "a custom reward must be attached with Game::with_custom_reward",
                ))
            }
        };
        Self::assemble(config, reward)
    }

    pub fn with_custom_reward(mut config: GameConfig, reward: Arc<dyn CustomReward>) -> Result<Self> {
        config.reward.kind = RewardKind::Custom;
        config.validate()?;
        let spec = RewardSpec::custom(reward, config.num_arms);
        Self::assemble(config, spec)
    }

    fn assemble(config: GameConfig, reward: RewardSpec) -> Result<Self> {
        let streams = SeedStreams::new(config.seed);
        let betas = match &config.beta {
            BetaSpec::Uniform(b) => vec![*b; config.num_agents],
            BetaSpec::PerAgent(bs) => bs.clone(),
            BetaSpec::Random { min, max } => (0..config.num_agents)
                .map(|i| {
                    let u: f64 = streams.stream(Purpose::AgentBetas, i as u64).random();
                    min + (max - min) * u
                })
                .collect(),
        };
        let subsets = config.arm_subsets.as_ref().map(|subsets| {
            subsets
                .iter()
                .map(|s| {
                    let mut arms: Vec<usize> = s.iter().map(|a| a - 1).collect();
                    arms.sort_unstable();
                    arms
                })
                .collect()
        });
        Ok(Self {
            schedule: StepsizeSchedule::new(config.stepsize_alpha),
            all_arms: (0..config.num_arms).collect(),
            config,
            reward,
            betas,
            subsets,
            streams,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    /// The config with every seed-drawn quantity written out, so that loading
    /// it reproduces this game without relying on the draws.
    pub fn resolved_config(&self) -> GameConfig {
        let mut config = self.config.clone();
        if self.reward.kind() != RewardKind::Custom {
            config.reward.arm_thetas = Some(self.reward.arm_thetas.clone());
        }
        if let BetaSpec::Random { .. } = config.beta {
            config.beta = BetaSpec::PerAgent(self.betas.clone());
        }
        config
    }

    pub fn reward(&self) -> &RewardSpec {
        &self.reward
    }

    pub fn num_agents(&self) -> usize {
        self.config.num_agents
    }

    pub fn num_arms(&self) -> usize {
        self.config.num_arms
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn schedule(&self) -> StepsizeSchedule {
        self.schedule
    }

    pub fn streams(&self) -> SeedStreams {
        self.streams
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta_max(&self) -> f64 {
        self.betas.iter().copied().fold(0.0, f64::max)
    }

    pub fn has_subsets(&self) -> bool {
        self.subsets.is_some()
    }

    /// 0-based arms agent `agent` may play.
    pub fn agent_arms(&self, agent: usize) -> &[usize] {
        match &self.subsets {
            Some(s) => &s[agent],
            None => &self.all_arms,
        }
    }

    pub fn is_playable(&self, agent: usize, arm: usize) -> bool {
        self.agent_arms(agent).binary_search(&arm).is_ok()
    }

    /// Exploration weight in effect at slot `n`.
    pub fn eta_at(&self, n: usize) -> f64 {
        self.config.eta.at(n)
    }

    /// Policy parameters of agent `agent` at slot `n`.
    pub fn policy_params(&self, agent: usize, n: usize) -> PolicyParams {
        PolicyParams {
            beta: self.betas[agent],
            eta: self.eta_at(n),
        }
    }

    /// Policy parameters used by the continuous-time mean-field model: the
    /// long-run exploration weight (0 for a diminishing schedule).
    pub fn mean_field_params(&self, agent: usize) -> PolicyParams {
        PolicyParams {
            beta: self.betas[agent],
            eta: self.config.eta.limit(),
        }
    }

    /// Writes agent `agent`'s full-width (`M`) distribution into `out`.
    pub fn agent_probabilities(&self, row: &[f64], agent: usize, params: PolicyParams, out: &mut [f64]) -> Result<()> {
        match &self.subsets {
            Some(s) => hedge_probabilities_subset(row, &s[agent], params, out),
            None => hedge_probabilities_into(row, params, out),
        }
    }

    /// `N x M` distribution matrix for `state` under the given per-agent parameters.
    pub fn probability_matrix(
        &self,
        state: &StateProfile,
        params: impl Fn(usize) -> PolicyParams,
    ) -> Result<Vec<f64>> {
        let m = self.num_arms();
        let mut sigma = vec![0.0; self.num_agents() * m];
        for (i, out) in sigma.chunks_exact_mut(m).enumerate() {
            self.agent_probabilities(state.row(i), i, params(i), out)?;
        }
        Ok(sigma)
    }

    pub(crate) fn check_shape(&self, state: &StateProfile) -> Result<()> {
        let expected = (self.num_agents(), self.num_arms());
        if state.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: state.shape(),
            });
        }
        Ok(())
    }

    /// Uniform `[0, 1]` profile on playable entries (zero elsewhere) drawn
    /// from `rng`.
    pub fn random_profile<R: Rng + ?Sized>(&self, rng: &mut R) -> StateProfile {
        let mut state = StateProfile::zeros(self.num_agents(), self.num_arms());
        for i in 0..self.num_agents() {
            for &j in self.agent_arms(i) {
                state.set(i, j, rng.random());
            }
        }
        state
    }

    /// Zeroes entries outside each agent's arm subset.
    pub fn mask(&self, state: &mut StateProfile) {
        if let Some(subsets) = &self.subsets {
            for (i, arms) in subsets.iter().enumerate() {
                let row = state.row_mut(i);
                for (j, v) in row.iter_mut().enumerate() {
                    if arms.binary_search(&j).is_err() {
                        *v = 0.0;
                    }
                }
            }
        }
    }
}

/// Initial learned rewards: every playable entry i.i.d. uniform on `[0, 1]`,
/// drawn from a per-agent stream so profiles are reproducible per seed.
pub fn init_state_profile(game: &Game, streams: &SeedStreams) -> StateProfile {
    let mut state = StateProfile::zeros(game.num_agents(), game.num_arms());
    for i in 0..game.num_agents() {
        let mut rng = streams.stream(Purpose::InitialState, i as u64);
        for &j in game.agent_arms(i) {
            state.set(i, j, rng.random());
        }
    }
    state
}
