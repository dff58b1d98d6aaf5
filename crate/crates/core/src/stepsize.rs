use serde::{Deserialize, Serialize};

/// Polynomially decaying stepsize `gamma_n = 1 / (n + 1)^alpha`.
///
/// For `alpha` in `(1/2, 1]` the steps are not summable but are square
/// summable, which is what the state recursion needs to track its ODE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepsizeSchedule {
    pub alpha: f64,
}

impl StepsizeSchedule {
    pub fn new(alpha: f64) -> Self {
        Self { alpha }
    }

    /// Stepsize used at slot `n` (slots start at 0).
    pub fn gamma(&self, n: usize) -> f64 {
        stepsize(self, n)
    }

    /// Interpolated time `tau_n = sum_{k < n} gamma_k`.
    pub fn elapsed(&self, n: usize) -> f64 {
        (0..n).map(|k| self.gamma(k)).sum()
    }

    /// All knots `tau_0 ..= tau_n`.
    pub fn knots(&self, n: usize) -> Vec<f64> {
        let mut knots = Vec::with_capacity(n + 1);
        let mut t = 0.0;
        knots.push(t);
        for k in 0..n {
            t += self.gamma(k);
            knots.push(t);
        }
        knots
    }
}

pub fn stepsize(schedule: &StepsizeSchedule, n: usize) -> f64 {
    if schedule.alpha == 1.0 {
        1.0 / (n as f64 + 1.0)
    } else {
        (n as f64 + 1.0).powf(-schedule.alpha)
    }
}
