//! State and population profiles.

use crate::error::{Error, Result};

/// Tolerance on the unit-sum constraint of a population profile.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Learned rewards of every agent for every arm, stored row-major (`N x M`).
///
/// With per-agent arm subsets, entries for arms outside an agent's subset are
/// held at zero and never read.
#[derive(Clone, Debug, PartialEq)]
pub struct StateProfile {
    num_agents: usize,
    num_arms: usize,
    values: Vec<f64>,
}

impl StateProfile {
    pub fn zeros(num_agents: usize, num_arms: usize) -> Self {
        Self {
            num_agents,
            num_arms,
            values: vec![0.0; num_agents * num_arms],
        }
    }

    /// Builds a profile from row-major values, checking shape and range.
    pub fn from_values(num_agents: usize, num_arms: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_agents * num_arms {
            return Err(Error::ShapeMismatch {
                expected: (num_agents, num_arms),
                found: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state profile"));
        }
        if let Some(&v) = values.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(format!(
                "state entry {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            num_agents,
            num_arms,
            values,
        })
    }

    /// Same as [`from_values`](Self::from_values) without the range check; used
    /// for intermediate integrator stages.
    pub(crate) fn from_raw(num_agents: usize, num_arms: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), num_agents * num_arms);
        Self {
            num_agents,
            num_arms,
            values,
        }
    }

    /// The same per-arm vector for every agent.
    pub fn broadcast(num_agents: usize, row: &[f64]) -> Self {
        let mut values = Vec::with_capacity(num_agents * row.len());
        for _ in 0..num_agents {
            values.extend_from_slice(row);
        }
        Self {
            num_agents,
            num_arms: row.len(),
            values,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_agents, self.num_arms)
    }

    pub fn get(&self, agent: usize, arm: usize) -> f64 {
        self.values[agent * self.num_arms + arm]
    }

    pub fn set(&mut self, agent: usize, arm: usize, value: f64) {
        self.values[agent * self.num_arms + arm] = value;
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        let m = self.num_arms;
        &self.values[agent * m..(agent + 1) * m]
    }

    pub fn row_mut(&mut self, agent: usize) -> &mut [f64] {
        let m = self.num_arms;
        &mut self.values[agent * m..(agent + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_arms)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `||self - other||_inf`.
    pub fn sup_distance(&self, other: &StateProfile) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Agent-averaged state of each arm.
    pub fn arm_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.num_arms];
        for row in self.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.num_agents.max(1) as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }
}

/// Fraction of agents on each arm; a point of the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationProfile(Vec<f64>);

impl PopulationProfile {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        let mut min = f64::INFINITY;
        let mut sum = 0.0;
        for &f in &fractions {
            if !f.is_finite() {
                return Err(Error::NonFinite("population profile"));
            }
            min = min.min(f);
            sum += f;
        }
        if fractions.is_empty() || (sum - 1.0).abs() > SIMPLEX_TOL || min < -SIMPLEX_TOL {
            return Err(Error::NotASimplex { sum, min });
        }
        Ok(Self(fractions))
    }

    /// Skips the simplex check. Callers guarantee the invariant by construction.
    pub(crate) fn new_unchecked(fractions: Vec<f64>) -> Self {
        Self(fractions)
    }

    /// Uniform profile over `num_arms` arms.
    pub fn uniform(num_arms: usize) -> Self {
        Self(vec![1.0 / num_arms as f64; num_arms])
    }

    pub fn fractions(&self) -> &[f64] {
        &self.0
    }

    pub fn num_arms(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.0[arm]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PopulationProfile {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_state() {
        assert!(StateProfile::from_values(1, 2, vec![0.5, 1.5]).is_err());
        assert!(StateProfile::from_values(1, 2, vec![0.5, f64::NAN]).is_err());
        assert!(StateProfile::from_values(1, 3, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn sup_distance_and_means() {
        let a = StateProfile::from_values(2, 2, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        let b = StateProfile::broadcast(2, &[0.25, 0.75]);
        assert_eq!(a.sup_distance(&b).unwrap(), 0.25);
        assert_eq!(a.arm_means(), vec![0.25, 0.75]);
        assert!(a.sup_distance(&StateProfile::zeros(3, 2)).is_err());
    }

    #[test]
    fn population_must_be_simplex() {
        assert!(PopulationProfile::new(vec![0.5, 0.5]).is_ok());
        assert!(PopulationProfile::new(vec![0.5, 0.6]).is_err());
        assert!(PopulationProfile::new(vec![1.1, -0.1]).is_err());
        assert!(PopulationProfile::new(vec![]).is_err());
    }
}
