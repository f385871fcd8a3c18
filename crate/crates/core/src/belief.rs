//! A-priori beliefs over the hidden state between updates, and expected
//! discounted returns along the open-loop belief trajectory.
//!
//! Beliefs are row vectors: after observing `s` and taking actions
//! `a_0, …, a_{k-1}`, the belief is `e_s · P^{a_0} ⋯ P^{a_{k-1}}`.

use serde::{Deserialize, Serialize};

use crate::linalg::dot;
use crate::mdp::Mdp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub probs: Vec<f64>,
}

impl Belief {
    pub fn one_hot(n: usize, state: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[state] = 1.0;
        Self { probs }
    }

    /// Total mass; 1 for a normalized belief, at most 1 for a
    /// silence-conditioned one.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn normalized(&self) -> Option<Self> {
        let m = self.mass();
        (m > 0.0).then(|| Self { probs: self.probs.iter().map(|p| p / m).collect() })
    }

    pub fn step(&self, m: &Mdp, action: usize) -> Self {
        let mut probs = vec![0.0; self.probs.len()];
        m.push_forward(&self.probs, action, &mut probs);
        Self { probs }
    }
}

/// Action a control row prescribes at elapsed `k`; rows are clamped at their last entry.
#[inline]
pub fn action_at(control_row: &[usize], k: usize) -> usize {
    control_row[k.min(control_row.len() - 1)]
}

/// Distribution of the state after applying `actions` from a one-hot at `start`.
pub fn propagate_belief(m: &Mdp, start: usize, actions: &[usize]) -> Belief {
    actions.iter().fold(Belief::one_hot(m.num_states(), start), |b, &a| b.step(m, a))
}

/// Belief at elapsed `offset` after observing `anchor` and following `control_row`.
pub fn belief_at(m: &Mdp, control_row: &[usize], anchor: usize, offset: usize) -> Belief {
    let mut b = Belief::one_hot(m.num_states(), anchor);
    for k in 0..offset {
        b = b.step(m, action_at(control_row, k));
    }
    b
}

/// Probability of the state sequence `seq`, whose first element is the
/// state at elapsed `offset` after observing `anchor`, when the actuator
/// follows `control_row`.
pub fn sequence_probability(
    m: &Mdp,
    control_row: &[usize],
    anchor: usize,
    offset: usize,
    seq: &[usize],
) -> f64 {
    let Some((&first, rest)) = seq.split_first() else {
        return 0.0;
    };
    let mut p = belief_at(m, control_row, anchor, offset).probs[first];
    let mut prev = first;
    for (l, &next) in rest.iter().enumerate() {
        if p == 0.0 {
            return 0.0;
        }
        p *= m.prob(action_at(control_row, offset + l), prev, next);
        prev = next;
    }
    p
}

/// Expected discounted return of `actions` applied open-loop from `belief`,
/// followed by `terminal - beta` at the state reached after the last action.
pub fn path_return_from_belief(
    m: &Mdp,
    belief: &[f64],
    actions: &[usize],
    terminal: &[f64],
    beta: f64,
) -> f64 {
    let n = m.num_states();
    let mut b = belief.to_vec();
    let mut next = vec![0.0; n];
    let mut acc = 0.0;
    let mut disc = 1.0;
    for &a in actions {
        acc += disc * b.iter().enumerate().map(|(s, &p)| p * m.expected_reward(a, s)).sum::<f64>();
        m.push_forward(&b, a, &mut next);
        std::mem::swap(&mut b, &mut next);
        disc *= m.gamma();
    }
    let mass: f64 = b.iter().sum();
    acc + disc * (dot(&b, terminal) - beta * mass)
}

/// Expected return from elapsed `offset` after observing `anchor`: `length`
/// steps under `control_row`, then resampling with value `terminal - beta`.
///
/// Runs forward over beliefs in `O(length · |S|²)`.
pub fn expected_path_return(
    m: &Mdp,
    control_row: &[usize],
    anchor: usize,
    offset: usize,
    length: usize,
    terminal: &[f64],
    beta: f64,
) -> f64 {
    let b = belief_at(m, control_row, anchor, offset);
    let actions: Vec<usize> = (offset..offset + length).map(|k| action_at(control_row, k)).collect();
    path_return_from_belief(m, &b.probs, &actions, terminal, beta)
}

/// Backward continuation vectors for a fixed action sequence.
///
/// `out[j][s]` is the expected return from state `s` with `actions[j..]`
/// still to play before resampling; `out[actions.len()] = terminal - beta`.
/// Folding the tail into a terminal vector and running the head forward
/// gives the same value as running the whole path forward.
pub fn continuation_vectors(m: &Mdp, actions: &[usize], terminal: &[f64], beta: f64) -> Vec<Vec<f64>> {
    let n = m.num_states();
    let mut out = vec![Vec::new(); actions.len() + 1];
    out[actions.len()] = terminal.iter().map(|v| v - beta).collect();
    for j in (0..actions.len()).rev() {
        let a = actions[j];
        let (head, tail) = out.split_at_mut(j + 1);
        let cont = &tail[0];
        head[j] = (0..n).map(|s| m.expected_reward(a, s) + m.gamma() * dot(m.row(a, s), cont)).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform2() -> Mdp {
        Mdp::new(0.9, vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]], vec![vec![vec![1.0, 0.0]; 2]]).unwrap()
    }

    #[test]
    fn empty_actions_give_one_hot() {
        let b = propagate_belief(&uniform2(), 1, &[]);
        assert_eq!(b.probs, vec![0.0, 1.0]);
    }

    #[test]
    fn identity_keeps_one_hot() {
        let m = Mdp::new(0.5, vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; 2], vec![vec![vec![0.0; 2]; 2]; 2]).unwrap();
        assert_eq!(propagate_belief(&m, 0, &[1, 0, 1, 1]).probs, vec![1.0, 0.0]);
    }

    #[test]
    fn uniform_matrix_splits_mass() {
        assert_eq!(propagate_belief(&uniform2(), 0, &[0]).probs, vec![0.5, 0.5]);
    }

    #[test]
    fn deterministic_chain_sequence_probability() {
        // 0 -> 1 -> 2 -> 0
        let t = vec![vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]];
        let m = Mdp::new(0.9, t, vec![vec![vec![0.0; 3]; 3]]).unwrap();
        assert_eq!(sequence_probability(&m, &[0], 0, 1, &[1, 2, 0, 1]), 1.0);
        assert_eq!(sequence_probability(&m, &[0], 0, 1, &[1, 2, 1]), 0.0);
        assert_eq!(sequence_probability(&m, &[0], 0, 1, &[0]), 0.0);
    }

    #[test]
    fn length_one_is_one_step_reward() {
        let m = uniform2();
        let v = expected_path_return(&m, &[0], 0, 0, 1, &[0.0, 0.0], 0.0);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_reward_geometric() {
        let c = 2.5;
        let g: f64 = 0.9;
        let m = Mdp::new(g, vec![vec![vec![0.5, 0.5], vec![0.2, 0.8]]], vec![vec![vec![c; 2]; 2]]).unwrap();
        for n in 0..8 {
            let v = expected_path_return(&m, &[0], 1, 2, n, &[0.0, 0.0], 0.0);
            assert!((v - c * (1.0 - g.powi(n as i32)) / (1.0 - g)).abs() < 1e-12);
        }
    }

    #[test]
    fn continuation_matches_forward() {
        let m = uniform2();
        let actions = [0, 0, 0];
        let term = [3.0, -1.0];
        let cont = continuation_vectors(&m, &actions, &term, 0.25);
        let fwd = path_return_from_belief(&m, &[1.0, 0.0], &actions, &term, 0.25);
        assert!((cont[0][0] - fwd).abs() < 1e-14);
    }
}
