//! Mean-field reward families.
//!
//! Built-in families depend only on the fraction of agents on the played arm:
//!
//! * general: `r(f, j) = 1 / (1 + theta_j f_j)`
//! * linear:  `r(f, j) = 1 - theta_j f_j`
//!
//! with per-arm parameters `theta_j` drawn from `[0.8 theta, theta]`. Both are
//! `theta`-Lipschitz in the population profile under the L1 norm.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on fractions passed to the scalar reward functions.
pub const FRACTION_TOL: f64 = 1e-9;

/// A user-supplied reward function.
///
/// Analysis checks refuse to run on a custom reward unless it declares an
/// output range inside `[0, 1]` and a Lipschitz constant.
pub trait CustomReward: Send + Sync + fmt::Debug {
    /// Reward of playing `arm` when the population profile is `profile`.
    fn reward(&self, profile: &[f64], arm: usize) -> f64;

    /// L1-Lipschitz constant in the population profile, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Declared `(min, max)` of the output.
    fn output_range(&self) -> Option<(f64, f64)> {
        None
    }

    /// Whether the reward of an arm reads other arms' fractions.
    fn reads_full_profile(&self) -> bool {
        true
    }
}

/// Shared handle to a custom reward; compares by identity.
#[derive(Clone, Debug)]
pub struct CustomRewardHandle(pub Arc<dyn CustomReward>);

impl PartialEq for CustomRewardHandle {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    General,
    Linear,
    Custom,
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::General => "general",
            RewardKind::Linear => "linear",
            RewardKind::Custom => "custom",
        })
    }
}

impl std::str::FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(RewardKind::General),
            "linear" => Ok(RewardKind::Linear),
            "custom" => Ok(RewardKind::Custom),
            other => Err(Error::InvalidArgument(format!("unknown reward kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RewardFamily {
    General,
    Linear,
    Custom(CustomRewardHandle),
}

/// A fully resolved reward: family, base parameter and per-arm parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardSpec {
    pub family: RewardFamily,
    pub theta: f64,
    pub arm_thetas: Vec<f64>,
}

impl RewardSpec {
    pub fn general(theta: f64, arm_thetas: Vec<f64>) -> Result<Self> {
        let spec = Self {
            family: RewardFamily::General,
            theta,
            arm_thetas,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear(theta: f64, arm_thetas: Vec<f64>) -> Result<Self> {
        let spec = Self {
            family: RewardFamily::Linear,
            theta,
            arm_thetas,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(reward: Arc<dyn CustomReward>, num_arms: usize) -> Self {
        let theta = reward.lipschitz().unwrap_or(f64::NAN);
        Self {
            family: RewardFamily::Custom(CustomRewardHandle(reward)),
            theta,
            arm_thetas: vec![theta; num_arms],
        }
    }

    pub fn kind(&self) -> RewardKind {
        match self.family {
            RewardFamily::General => RewardKind::General,
            RewardFamily::Linear => RewardKind::Linear,
            RewardFamily::Custom(_) => RewardKind::Custom,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arm_thetas.len()
    }

    /// Checks the per-arm parameters lie in `[0.8 theta, theta]` and, for the
    /// linear family, that `theta <= 1` so rewards stay in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        if let RewardFamily::Custom(_) = self.family {
            return Ok(());
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::config("reward.theta", format!("must be >= 0, got {}", self.theta)));
        }
        if self.family == RewardFamily::Linear && self.theta > 1.0 {
            return Err(Error::config(
                "reward.theta",
                format!("linear reward needs theta in [0, 1], got {}", self.theta),
            ));
        }
        let lo = 0.8 * self.theta;
        for &t in &self.arm_thetas {
            if !(t >= lo - 1e-12 && t <= self.theta + 1e-12) {
                return Err(Error::config(
                    "reward.arm_thetas",
                    format!("{t} outside [{lo}, {}]", self.theta),
                ));
            }
        }
        Ok(())
    }

    /// Whether the reward of arm `j` depends only on `f(j)`.
    pub fn own_arm_only(&self) -> bool {
        match &self.family {
            RewardFamily::Custom(c) => !c.0.reads_full_profile(),
            _ => true,
        }
    }

    /// Reward of arm `arm` under the (possibly unnormalised) profile `f`.
    pub fn reward(&self, f: &[f64], arm: usize) -> Result<f64> {
        match &self.family {
            RewardFamily::General => general_reward(f[arm], self.arm_thetas[arm]),
            RewardFamily::Linear => linear_reward(f[arm], self.arm_thetas[arm]),
            RewardFamily::Custom(c) => {
                let r = c.0.reward(f, arm);
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(Error::NonFinite("custom reward"))
                }
            }
        }
    }

    /// `r(f, j)` for every arm.
    pub fn reward_vector(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; f.len()];
        self.reward_vector_into(f, &mut out)?;
        Ok(out)
    }

    pub fn reward_vector_into(&self, f: &[f64], out: &mut [f64]) -> Result<()> {
        if f.len() != self.arm_thetas.len() {
            return Err(Error::ShapeMismatch {
                expected: (1, self.arm_thetas.len()),
                found: (1, f.len()),
            });
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.reward(f, j)?;
        }
        Ok(())
    }

    /// L1-Lipschitz constant of the reward in the population profile.
    ///
    /// For the general family `|dr/df_j| = theta_j / (1 + theta_j f_j)^2 <=
    /// theta`; for the linear family it is exactly `theta_j <= theta`.
    pub fn lipschitz_constant(&self) -> Result<f64> {
        match &self.family {
            RewardFamily::Custom(c) => c.0.lipschitz().ok_or(Error::UndeclaredRewardProperty("a Lipschitz constant")),
            _ => Ok(self.theta),
        }
    }

    /// Fails unless the reward declares everything the analysis checks need.
    pub fn require_analysable(&self) -> Result<f64> {
        if let RewardFamily::Custom(c) = &self.family {
            match c.0.output_range() {
                Some((lo, hi)) if lo >= 0.0 && hi <= 1.0 && lo <= hi => {}
                Some(_) => return Err(Error::UndeclaredRewardProperty("an output range inside [0, 1]")),
                None => return Err(Error::UndeclaredRewardProperty("an output range")),
            }
        }
        self.lipschitz_constant()
    }
}

fn check_fraction(f: f64) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFinite("population fraction"));
    }
    if !(-FRACTION_TOL..=1.0 + FRACTION_TOL).contains(&f) {
        return Err(Error::FractionOutOfRange(f));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// `1 / (1 + theta_j f_j)`.
pub fn general_reward(f_j: f64, theta_j: f64) -> Result<f64> {
    let f = check_fraction(f_j)?;
    Ok(1.0 / (1.0 + theta_j * f))
}

/// `1 - theta_j f_j`.
pub fn linear_reward(f_j: f64, theta_j: f64) -> Result<f64> {
    let f = check_fraction(f_j)?;
    Ok(1.0 - theta_j * f)
}

/// Per-arm parameters drawn i.i.d. uniform on `[0.8 theta, theta]`.
pub fn sample_arm_thetas<R: Rng + ?Sized>(theta: f64, num_arms: usize, rng: &mut R) -> Vec<f64> {
    let lo = 0.8 * theta;
    (0..num_arms)
        .map(|_| {
            let u: f64 = rng.random();
            lo + (theta - lo) * u
        })
        .collect()
}
