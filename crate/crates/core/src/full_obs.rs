//! Standard policy iteration under full observability (an update every step at no cost).

use serde::{Deserialize, Serialize};

use crate::config::{argmax_low, SolveConfig};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_resolvent};
use crate::mdp::Mdp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullObsSolution {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    pub iterations: usize,
}

/// Exact value of a deterministic stationary policy: `V = (I - γ P_π)^{-1} r_π`.
pub fn evaluate_stationary(m: &Mdp, policy: &[usize]) -> Result<Vec<f64>> {
    let n = m.num_states();
    let g = m.gamma();
    let mut kernel = vec![0.0; n * n];
    let mut r = vec![0.0; n];
    for s in 0..n {
        let a = policy[s];
        for (k, p) in kernel[s * n..(s + 1) * n].iter_mut().zip(m.row(a, s)) {
            *k = g * p;
        }
        r[s] = m.expected_reward(a, s);
    }
    Ok(solve_resolvent(n, &kernel, &[&r], "stationary policy evaluation")?.remove(0))
}

/// One-step lookahead `Q(s, a) = r̄(a, s) + γ Σ P^a[s][s'] V(s')`.
pub fn q_value(m: &Mdp, values: &[f64], state: usize, action: usize) -> f64 {
    m.expected_reward(action, state) + m.gamma() * dot(m.row(action, state), values)
}

/// Greedy policy with ties broken toward the lowest action index.
pub fn greedy_policy(m: &Mdp, values: &[f64]) -> Vec<usize> {
    (0..m.num_states())
        .map(|s| argmax_low((0..m.num_actions()).map(|a| q_value(m, values, s, a))).0)
        .collect()
}

pub fn solve_full_observability(m: &Mdp, cfg: &SolveConfig) -> Result<FullObsSolution> {
    cfg.validate()?;
    let mut policy = vec![0usize; m.num_states()];
    for it in 1..=cfg.max_iterations {
        let values = evaluate_stationary(m, &policy)?;
        let next = greedy_policy(m, &values);
        if next == policy {
            return Ok(FullObsSolution { values, policy, iterations: it });
        }
        policy = next;
    }
    Err(Error::IterationLimit { what: "full-observability policy iteration", iterations: cfg.max_iterations })
}

/// Largest Bellman optimality residual `max_s |V(s) - max_a Q(s, a)|`.
pub fn bellman_residual(m: &Mdp, values: &[f64]) -> f64 {
    (0..m.num_states())
        .map(|s| {
            let best = (0..m.num_actions()).map(|a| q_value(m, values, s, a)).fold(f64::NEG_INFINITY, f64::max);
            (values[s] - best).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_geometric_series() {
        let m = Mdp::new(0.9, vec![vec![vec![1.0]]], vec![vec![vec![1.0]]]).unwrap();
        let sol = solve_full_observability(&m, &SolveConfig::default()).unwrap();
        assert!((sol.values[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn swap_chain_closed_form() {
        // 0 <-> 1 deterministically; reward 1 only on entering state 0.
        let g: f64 = 0.8;
        let t = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]];
        let r = vec![vec![vec![0.0, 0.0], vec![1.0, 0.0]]];
        let m = Mdp::new(g, t, r).unwrap();
        let sol = solve_full_observability(&m, &SolveConfig::default()).unwrap();
        // From 1: 1 + γ² + γ⁴ + … ; from 0: γ times that.
        let v1 = 1.0 / (1.0 - g * g);
        assert!((sol.values[1] - v1).abs() < 1e-12);
        assert!((sol.values[0] - g * v1).abs() < 1e-12);
    }

    #[test]
    fn solution_satisfies_bellman() {
        let t = vec![
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.2, 0.8], vec![0.3, 0.3, 0.4]],
            vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        ];
        let r = vec![
            vec![vec![1.0, 0.0, 2.0], vec![0.0, 0.5, 0.1], vec![3.0, 0.0, 0.0]],
            vec![vec![0.0, 0.0, 0.2], vec![2.0, 0.0, 0.0], vec![0.0, 1.5, 0.0]],
        ];
        let m = Mdp::new(0.9, t, r).unwrap();
        let cfg = SolveConfig::default();
        let sol = solve_full_observability(&m, &cfg).unwrap();
        assert!(bellman_residual(&m, &sol.values) < cfg.tolerance);
        assert_eq!(sol.policy, greedy_policy(&m, &sol.values));
    }
}
