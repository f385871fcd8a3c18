//! Periodic (age-of-information) baseline and chain utilities.

use log::debug;

use crate::config::{argmax_low, SolveConfig};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::{ControlMap, PeriodicPolicy, PeriodicSchedule};
use crate::pull::{solve_pull_with, PullOptions};

const RESTART_WEIGHT: f64 = 1e-9;
const STATIONARY_TOL: f64 = 1e-12;

/// Stationary distribution of a row-stochastic matrix.
///
/// Iterates on the lazy chain `(I + P) / 2`, mixed with a tiny restart toward
/// `restart` (uniform when absent). Laziness removes periodicity; the restart
/// picks the class reached from `restart` when the chain is reducible.
pub fn stationary_distribution(chain: &[Vec<f64>], restart: Option<&[f64]>, max_iter: usize) -> Result<Vec<f64>> {
    let n = chain.len();
    if n == 0 {
        return Err(Error::Config("empty chain".into()));
    }
    if let Some(row) = chain.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
    }
    let mu: Vec<f64> = match restart {
        Some(r) if r.len() != n => return Err(Error::DimensionMismatch { expected: n, actual: r.len() }),
        Some(r) => {
            let total: f64 = r.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Config("restart distribution has no mass".into()));
            }
            r.iter().map(|x| x / total).collect()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut x = mu.clone();
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        for (j, v) in next.iter_mut().enumerate() {
            *v = 0.5 * x[j];
        }
        for (i, row) in chain.iter().enumerate() {
            let w = 0.5 * x[i];
            if w != 0.0 {
                for (v, p) in next.iter_mut().zip(row) {
                    *v += w * p;
                }
            }
        }
        let mut diff = 0.0f64;
        for j in 0..n {
            let v = (1.0 - RESTART_WEIGHT) * next[j] + RESTART_WEIGHT * mu[j];
            diff = diff.max((v - x[j]).abs());
            x[j] = v;
        }
        if diff < STATIONARY_TOL {
            let total: f64 = x.iter().sum();
            return Ok(x.into_iter().map(|v| v / total).collect());
        }
    }
    Err(Error::IterationLimit { what: "stationary distribution", iterations: max_iter })
}

/// Best state-independent periodic schedule and its control.
#[derive(Debug, Clone, PartialEq)]
pub struct AoiSolution {
    pub policy: PeriodicPolicy,
    /// Mean of `V(s, 0)` over states for the chosen period.
    pub objective: f64,
    /// Same objective for every candidate period `1..=max_period`.
    pub objective_by_period: Vec<f64>,
}

/// Searches every common period, optimizing the control for each, and keeps
/// the best (smallest period on ties). The schedule has phase 0.
pub fn solve_aoi_periodic(m: &Mdp, cfg: &SolveConfig) -> Result<AoiSolution> {
    cfg.validate()?;
    let n = m.num_states();
    let mut controls: Vec<ControlMap> = Vec::new();
    let mut objectives = Vec::new();
    for period in 1..=cfg.max_period() {
        let opts = PullOptions { pinned_periods: Some(vec![period; n]), ..Default::default() };
        let sol = solve_pull_with(m, cfg, &opts)?;
        let obj = sol.values.at_update().iter().sum::<f64>() / n as f64;
        debug!("aoi period {period}: objective {obj}");
        objectives.push(obj);
        controls.push(sol.policy.control);
    }
    let (best, objective) = argmax_low(objectives.iter().copied());
    Ok(AoiSolution {
        policy: PeriodicPolicy { schedule: PeriodicSchedule::new(best + 1, 0)?, control: controls.swap_remove(best) },
        objective,
        objective_by_period: objectives,
    })
}
