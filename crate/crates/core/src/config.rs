use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters shared by every solver and evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Cost charged per state update.
    pub beta: f64,
    /// Cap on the elapsed-time index; every communication rule updates by then.
    pub t_max: usize,
    /// Largest update period the pull and periodic searches consider.
    pub horizon_cap: usize,
    /// Convergence tolerance for value sweeps and improvement fallbacks.
    pub tolerance: f64,
    /// Safety cap on iterations of every loop that waits for convergence.
    pub max_iterations: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { beta: 0.0, t_max: 30, horizon_cap: 30, tolerance: 1e-10, max_iterations: 1000 }
    }
}

impl SolveConfig {
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_t_max(mut self, t_max: usize) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_horizon_cap(mut self, cap: usize) -> Self {
        self.horizon_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be a finite nonnegative number, got {}", self.beta)));
        }
        if self.t_max < 1 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if self.horizon_cap < 1 {
            return Err(Error::Config("horizon_cap must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Longest admissible update period: `min(horizon_cap, t_max)`.
    pub fn max_period(&self) -> usize {
        self.horizon_cap.min(self.t_max)
    }
}

/// Relative slack under which two objective values count as tied.
pub(crate) const TIE_EPS: f64 = 1e-12;

/// Index of the maximum, preferring the lowest index among near-ties.
pub(crate) fn argmax_low<I: IntoIterator<Item = f64>>(values: I) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 + TIE_EPS * (1.0 + best.1.abs()) || best.1 == f64::NEG_INFINITY {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SolveConfig::default().validate().unwrap();
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(SolveConfig::default().with_beta(-0.1).validate().is_err());
        assert!(SolveConfig::default().with_beta(f64::NAN).validate().is_err());
    }

    #[test]
    fn zero_caps_rejected() {
        assert!(SolveConfig::default().with_t_max(0).validate().is_err());
        assert!(SolveConfig::default().with_horizon_cap(0).validate().is_err());
    }

    #[test]
    fn argmax_prefers_low_index_on_ties() {
        assert_eq!(argmax_low([1.0, 1.0 + 1e-15, 0.5]).0, 0);
        assert_eq!(argmax_low([1.0, 1.1, 1.1]).0, 1);
        assert_eq!(argmax_low([-3.0]).0, 0);
    }
}
