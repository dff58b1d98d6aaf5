//! Hedge stationary policy: learned state -> arm-playing distribution.
//!
//! `sigma(s, j) = (1 - eta) * exp(beta s_j) / sum_k exp(beta s_k) + eta / M`
//!
//! The softmax part is evaluated with the maximum subtracted first, so large
//! `beta` never overflows.

use rand::Rng;

use crate::error::{Error, Result};

/// Allowed deviation of a sampling distribution from the simplex.
pub const SAMPLING_SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyParams {
    /// Smoothing parameter, > 0.
    pub beta: f64,
    /// Exploration weight in `[0, 1]`.
    pub eta: f64,
}

impl PolicyParams {
    pub fn new(beta: f64, eta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("eta must be in [0, 1], got {eta}")));
        }
        Ok(Self { beta, eta })
    }
}

/// Hedge distribution over the arms of `state`.
pub fn hedge_probabilities(state: &[f64], params: PolicyParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; state.len()];
    hedge_probabilities_into(state, params, &mut out)?;
    Ok(out)
}

pub fn hedge_probabilities_into(state: &[f64], params: PolicyParams, out: &mut [f64]) -> Result<()> {
    debug_assert_eq!(state.len(), out.len());
    let max = max_finite(state.iter().copied())?;
    let mut total = 0.0;
    for (o, &s) in out.iter_mut().zip(state) {
        *o = (params.beta * (s - max)).exp();
        total += *o;
    }
    let m = state.len() as f64;
    let uniform = params.eta / m;
    let scale = (1.0 - params.eta) / total;
    for o in out.iter_mut() {
        *o = *o * scale + uniform;
    }
    Ok(())
}

/// Hedge distribution restricted to `arms`; `row` and `out` are indexed by
/// global arm id and `out` is zero outside the subset.
pub fn hedge_probabilities_subset(
    row: &[f64],
    arms: &[usize],
    params: PolicyParams,
    out: &mut [f64],
) -> Result<()> {
    debug_assert_eq!(row.len(), out.len());
    out.iter_mut().for_each(|o| *o = 0.0);
    let max = max_finite(arms.iter().map(|&a| row[a]))?;
    let mut total = 0.0;
    for &a in arms {
        out[a] = (params.beta * (row[a] - max)).exp();
        total += out[a];
    }
    let uniform = params.eta / arms.len() as f64;
    let scale = (1.0 - params.eta) / total;
    for &a in arms {
        out[a] = out[a] * scale + uniform;
    }
    Ok(())
}

fn max_finite(values: impl Iterator<Item = f64>) -> Result<f64> {
    let mut max = f64::NEG_INFINITY;
    for v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite("policy state"));
        }
        max = max.max(v);
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("empty state vector".into()));
    }
    Ok(max)
}

/// Draws an arm index distributed as `probs` by inverse-CDF sampling over
/// left-closed intervals. Zero-probability arms are never returned.
pub fn sample_arm<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for &p in probs {
        sum += p;
        min = min.min(p);
    }
    if !sum.is_finite() || (sum - 1.0).abs() > SAMPLING_SIMPLEX_TOL || min < -SAMPLING_SIMPLEX_TOL {
        return Err(Error::NotASimplex { sum, min });
    }
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = j;
            if u < cumulative {
                return Ok(j);
            }
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    Ok(last_positive)
}

/// Gradient of `sigma(x, arm)` with respect to the state vector:
/// `l -> (1 - eta) beta p(x, arm) (1{arm = l} - p(x, l))`, where `p` is the
/// softmax part of the policy (the policy itself with `eta = 0`). At `eta = 0`
/// this coincides with writing `sigma` in place of `p`.
pub fn policy_jacobian(state: &[f64], params: PolicyParams, arm: usize) -> Result<Vec<f64>> {
    if arm >= state.len() {
        return Err(Error::InvalidArm { agent: None, arm });
    }
    let softmax = hedge_probabilities(state, PolicyParams { eta: 0.0, ..params })?;
    let c = (1.0 - params.eta) * params.beta * softmax[arm];
    Ok(softmax
        .iter()
        .enumerate()
        .map(|(l, &s)| c * (if l == arm { 1.0 } else { 0.0 } - s))
        .collect())
}

/// Diminishing exploration weight `eta0 / (n + 1)^kappa`.
pub fn eta_schedule(n: usize, eta0: f64, kappa: f64) -> f64 {
    eta0 * (n as f64 + 1.0).powf(-kappa)
}
