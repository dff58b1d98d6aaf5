//! Experiment configuration and its TOML file format.
//!
//! ```toml
//! num_agents = 100
//! num_arms = 4
//! horizon = 2000
//! beta = 0.5                 # or [b1, b2, ...] per agent, or { min = 0.1, max = 0.5 }
//! eta = 0.2                  # or { eta0 = 0.2, kappa = 0.5 }
//! stepsize_alpha = 1.0
//! seed = 1
//! arm_subsets = [[1, 2], [2, 3, 4]]   # optional, 1-based arm ids, one list per agent
//! snapshot_stride = 1                 # optional
//!
//! [reward]
//! kind = "general"           # general | linear
//! theta = 0.5
//! arm_thetas = [0.45, 0.5, 0.42, 0.48]  # optional; sampled from the seed otherwise
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::eta_schedule;
use crate::reward::RewardKind;

/// Horizons up to this length keep every state snapshot by default.
pub const FULL_SNAPSHOT_HORIZON: usize = 10_000;

/// Smoothing parameter(s) of the Hedge policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Uniform(f64),
    PerAgent(Vec<f64>),
    /// Each agent draws its own value uniformly from `[min, max]`.
    Random { min: f64, max: f64 },
}

/// Exploration weight: constant, or diminishing as `eta0 / (n + 1)^kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Constant(f64),
    Diminishing { eta0: f64, kappa: f64 },
}

impl EtaSpec {
    /// Weight used at slot `n`.
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            EtaSpec::Constant(eta) => eta,
            EtaSpec::Diminishing { eta0, kappa } => eta_schedule(n, eta0, kappa),
        }
    }

    /// Long-run weight: the constant, or 0 for a diminishing schedule.
    pub fn limit(&self) -> f64 {
        match *self {
            EtaSpec::Constant(eta) => eta,
            EtaSpec::Diminishing { .. } => 0.0,
        }
    }

    /// Largest weight the schedule ever takes.
    pub fn max(&self) -> f64 {
        match *self {
            EtaSpec::Constant(eta) => eta,
            EtaSpec::Diminishing { eta0, .. } => eta0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub kind: RewardKind,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_thetas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub num_agents: usize,
    pub num_arms: usize,
    pub horizon: usize,
    pub beta: BetaSpec,
    pub eta: EtaSpec,
    pub stepsize_alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_subsets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    pub reward: RewardConfig,
}

impl GameConfig {
    /// Homogeneous game with a constant exploration weight and harmonic stepsize.
    #[allow(clippy::too_many_arguments)]
    pub fn homogeneous(
        num_agents: usize,
        num_arms: usize,
        horizon: usize,
        kind: RewardKind,
        theta: f64,
        beta: f64,
        eta: f64,
        seed: u64,
    ) -> Self {
        Self {
            num_agents,
            num_arms,
            horizon,
            beta: BetaSpec::Uniform(beta),
            eta: EtaSpec::Constant(eta),
            stepsize_alpha: 1.0,
            seed,
            arm_subsets: None,
            snapshot_stride: None,
            reward: RewardConfig {
                kind,
                theta,
                arm_thetas: None,
            },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: GameConfig = toml::from_str(text)?;
        validate_config(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    /// Snapshot stride in effect: the configured one, or 1 up to
    /// [`FULL_SNAPSHOT_HORIZON`] slots and proportionally coarser beyond.
    pub fn effective_snapshot_stride(&self) -> usize {
        self.snapshot_stride
            .unwrap_or_else(|| self.horizon.div_ceil(FULL_SNAPSHOT_HORIZON).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_agents < 1 {
            return Err(Error::config("num_agents", "must be at least 1"));
        }
        if self.num_arms < 2 {
            return Err(Error::config("num_arms", "must be at least 2"));
        }
        if self.horizon < 1 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if !(self.stepsize_alpha > 0.5 && self.stepsize_alpha <= 1.0) {
            return Err(Error::config(
                "stepsize_alpha",
                format!("stepsize_alpha out of range (1/2, 1]: {}", self.stepsize_alpha),
            ));
        }
        match self.eta {
            EtaSpec::Constant(eta) => {
                if !(0.0..=1.0).contains(&eta) {
                    return Err(Error::config("eta", format!("eta out of range [0, 1]: {eta}")));
                }
            }
            EtaSpec::Diminishing { eta0, kappa } => {
                if !(0.0..=1.0).contains(&eta0) {
                    return Err(Error::config("eta", format!("eta0 out of range [0, 1]: {eta0}")));
                }
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(Error::config("eta", format!("kappa must be > 0: {kappa}")));
                }
            }
        }
        let positive = |b: f64| b > 0.0 && b.is_finite();
        match &self.beta {
            BetaSpec::Uniform(b) => {
                if !positive(*b) {
                    return Err(Error::config("beta", format!("beta must be > 0: {b}")));
                }
            }
            BetaSpec::PerAgent(bs) => {
                if bs.len() != self.num_agents {
                    return Err(Error::config(
                        "beta",
                        format!("{} values for {} agents", bs.len(), self.num_agents),
                    ));
                }
                if let Some(b) = bs.iter().find(|&&b| !positive(b)) {
                    return Err(Error::config("beta", format!("beta must be > 0: {b}")));
                }
            }
            BetaSpec::Random { min, max } => {
                if !(positive(*min) && positive(*max) && min <= max) {
                    return Err(Error::config("beta", format!("need 0 < min <= max, got [{min}, {max}]")));
                }
            }
        }
        self.validate_reward()?;
        if let Some(subsets) = &self.arm_subsets {
            if subsets.len() != self.num_agents {
                return Err(Error::config(
                    "arm_subsets",
                    format!("{} subsets for {} agents", subsets.len(), self.num_agents),
                ));
            }
            for (i, subset) in subsets.iter().enumerate() {
                if subset.is_empty() {
                    return Err(Error::config("arm_subsets", format!("empty arm subset for agent {}", i + 1)));
                }
                let mut seen = vec![false; self.num_arms];
                for &arm in subset {
                    if arm < 1 || arm > self.num_arms {
                        return Err(Error::config(
                            "arm_subsets",
                            format!("arm {arm} of agent {} outside 1..={}", i + 1, self.num_arms),
                        ));
                    }
                    if std::mem::replace(&mut seen[arm - 1], true) {
                        return Err(Error::config(
                            "arm_subsets",
                            format!("arm {arm} repeated for agent {}", i + 1),
                        ));
                    }
                }
            }
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::config("snapshot_stride", "must be at least 1"));
        }
        Ok(())
    }

    fn validate_reward(&self) -> Result<()> {
        let r = &self.reward;
        if r.kind == RewardKind::Custom {
            return Ok(());
        }
        if !(r.theta >= 0.0 && r.theta.is_finite()) {
            return Err(Error::config("reward.theta", format!("must be >= 0: {}", r.theta)));
        }
        if r.kind == RewardKind::Linear && r.theta > 1.0 {
            return Err(Error::config("reward.theta", format!("linear reward needs theta <= 1: {}", r.theta)));
        }
        if let Some(thetas) = &r.arm_thetas {
            if thetas.len() != self.num_arms {
                return Err(Error::config(
                    "reward.arm_thetas",
                    format!("{} values for {} arms", thetas.len(), self.num_arms),
                ));
            }
        }
        Ok(())
    }
}

/// Returns the config unchanged if every constraint holds, or the first
/// violated one.
pub fn validate_config(config: GameConfig) -> Result<GameConfig> {
    config.validate()?;
    Ok(config)
}
