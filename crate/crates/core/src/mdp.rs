//! Finite discounted MDP model.
//!
//! Transitions and rewards are stored as dense `[action][from][to]` tensors
//! flattened row-major. Rewards are paid on transitions: `r(a, s, s')` is
//! collected when the step from `s` to `s'` under `a` occurs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance accepted by [`Mdp::validate`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    expected_reward: Vec<f64>,
}

/// A single invariant violation found by [`validate_mdp`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyStateSpace,
    EmptyActionSpace,
    Gamma(f64),
    Shape { what: &'static str, expected: usize, actual: usize },
    NegativeProbability { action: usize, from: usize, to: usize, value: f64 },
    RowSum { action: usize, state: usize, sum: f64 },
    NonFinite { what: &'static str, action: usize, from: usize, to: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStateSpace => write!(f, "state space is empty"),
            Violation::EmptyActionSpace => write!(f, "action space is empty"),
            Violation::Gamma(g) => write!(f, "discount {g} outside [0, 1)"),
            Violation::Shape { what, expected, actual } => {
                write!(f, "{what} has {actual} entries, expected {expected}")
            }
            Violation::NegativeProbability { action, from, to, value } => write!(
                f,
                "P[a={action}][{from}][{to}] = {value} is negative"
            ),
            Violation::RowSum { action, state, sum } => {
                write!(f, "row (action {action}, state {state}) sums to {sum}")
            }
            Violation::NonFinite { what, action, from, to } => {
                write!(f, "{what}[a={action}][{from}][{to}] is not finite")
            }
        }
    }
}

/// Nested JSON document form of an [`Mdp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<Vec<f64>>>,
}

impl Mdp {
    /// Builds an MDP from nested `[action][from][to]` tensors and validates it.
    pub fn new(
        gamma: f64,
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let num_actions = transitions.len();
        let num_states = transitions.first().map_or(0, |m| m.len());
        Self::from_document(MdpDocument { num_states, num_actions, gamma, transitions, rewards })
    }

    pub fn from_document(doc: MdpDocument) -> Result<Self> {
        let violations = validate_document(&doc);
        if !violations.is_empty() {
            return Err(Error::InvalidMdp(violations));
        }
        let flat = |t: &Vec<Vec<Vec<f64>>>| -> Vec<f64> {
            t.iter().flat_map(|m| m.iter().flat_map(|r| r.iter().copied())).collect()
        };
        Ok(Self::from_flat(
            doc.num_states,
            doc.num_actions,
            doc.gamma,
            flat(&doc.transitions),
            flat(&doc.rewards),
        ))
    }

    fn from_flat(
        num_states: usize,
        num_actions: usize,
        gamma: f64,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
    ) -> Self {
        let n = num_states;
        let expected_reward = (0..num_actions * n)
            .map(|row| {
                let base = row * n;
                (0..n).map(|j| transitions[base + j] * rewards[base + j]).sum()
            })
            .collect();
        Self { num_states, num_actions, gamma, transitions, rewards, expected_reward }
    }

    pub fn to_document(&self) -> MdpDocument {
        let nest = |flat: &[f64]| -> Vec<Vec<Vec<f64>>> {
            flat.chunks(self.num_states * self.num_states)
                .map(|m| m.chunks(self.num_states).map(|r| r.to_vec()).collect())
                .collect()
        };
        MdpDocument {
            num_states: self.num_states,
            num_actions: self.num_actions,
            gamma: self.gamma,
            transitions: nest(&self.transitions),
            rewards: nest(&self.rewards),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    /// Serializes to the nested JSON document. Floats use shortest
    /// round-trip formatting, so parsing the output reproduces every bit.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("MDP document serializes")
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Returns a copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidMdp(vec![Violation::Gamma(gamma)]));
        }
        let mut m = self.clone();
        m.gamma = gamma;
        Ok(m)
    }

    /// Transition row `P^a[s][·]`.
    #[inline]
    pub fn row(&self, action: usize, state: usize) -> &[f64] {
        let base = (action * self.num_states + state) * self.num_states;
        &self.transitions[base..base + self.num_states]
    }

    /// Reward row `r^a[s][·]`.
    #[inline]
    pub fn reward_row(&self, action: usize, state: usize) -> &[f64] {
        let base = (action * self.num_states + state) * self.num_states;
        &self.rewards[base..base + self.num_states]
    }

    #[inline]
    pub fn prob(&self, action: usize, from: usize, to: usize) -> f64 {
        self.row(action, from)[to]
    }

    #[inline]
    pub fn reward(&self, action: usize, from: usize, to: usize) -> f64 {
        self.reward_row(action, from)[to]
    }

    /// `Σ_{s'} P^a[s][s'] r^a[s][s']`.
    #[inline]
    pub fn expected_reward(&self, action: usize, state: usize) -> f64 {
        self.expected_reward[action * self.num_states + state]
    }

    /// Largest absolute reward in the tensor.
    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// `belief · P^a`, written into `out`.
    pub fn push_forward(&self, belief: &[f64], action: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, &b) in belief.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(action, s)) {
                *o += b * p;
            }
        }
    }

    /// Returns a copy with every reward shifted by `c`.
    pub fn shift_rewards(&self, c: f64) -> Self {
        let rewards = self.rewards.iter().map(|r| r + c).collect();
        Self::from_flat(self.num_states, self.num_actions, self.gamma, self.transitions.clone(), rewards)
    }

    /// Returns a copy with action labels permuted: new action `i` is old action `perm[i]`.
    pub fn permute_actions(&self, perm: &[usize]) -> Self {
        let block = self.num_states * self.num_states;
        let pick = |flat: &[f64]| -> Vec<f64> {
            perm.iter().flat_map(|&a| flat[a * block..(a + 1) * block].iter().copied()).collect()
        };
        Self::from_flat(
            self.num_states,
            self.num_actions,
            self.gamma,
            pick(&self.transitions),
            pick(&self.rewards),
        )
    }
}

/// Checks every MDP invariant. An empty list means the document is valid.
pub fn validate_mdp(m: &Mdp) -> Vec<Violation> {
    validate_document(&m.to_document())
}

pub fn validate_document(doc: &MdpDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    if doc.num_states == 0 {
        out.push(Violation::EmptyStateSpace);
    }
    if doc.num_actions == 0 {
        out.push(Violation::EmptyActionSpace);
    }
    if !(doc.gamma >= 0.0 && doc.gamma < 1.0) {
        out.push(Violation::Gamma(doc.gamma));
    }
    let n = doc.num_states;
    for (what, tensor) in [("transitions", &doc.transitions), ("rewards", &doc.rewards)] {
        if tensor.len() != doc.num_actions {
            out.push(Violation::Shape { what, expected: doc.num_actions, actual: tensor.len() });
            continue;
        }
        for m in tensor {
            if m.len() != n {
                out.push(Violation::Shape { what, expected: n, actual: m.len() });
            }
            for r in m {
                if r.len() != n {
                    out.push(Violation::Shape { what, expected: n, actual: r.len() });
                }
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    for a in 0..doc.num_actions {
        for s in 0..n {
            let row = &doc.transitions[a][s];
            for (t, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    out.push(Violation::NonFinite { what: "transitions", action: a, from: s, to: t });
                } else if p < 0.0 {
                    out.push(Violation::NegativeProbability { action: a, from: s, to: t, value: p });
                }
                if !doc.rewards[a][s][t].is_finite() {
                    out.push(Violation::NonFinite { what: "rewards", action: a, from: s, to: t });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                out.push(Violation::RowSum { action: a, state: s, sum });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize, actions: usize) -> Vec<Vec<Vec<f64>>> {
        (0..actions)
            .map(|_| (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect())
            .collect()
    }

    #[test]
    fn identity_transitions_are_valid() {
        let rewards = vec![vec![vec![3.5, -1.0, 0.0]; 3]; 2];
        let m = Mdp::new(0.9, identity(3, 2), rewards).unwrap();
        assert!(validate_mdp(&m).is_empty());
    }

    #[test]
    fn short_row_is_named() {
        let mut t = identity(2, 1);
        t[0][1] = vec![0.4, 0.5];
        let doc = MdpDocument {
            num_states: 2,
            num_actions: 1,
            gamma: 0.5,
            transitions: t,
            rewards: vec![vec![vec![0.0; 2]; 2]],
        };
        let v = validate_document(&doc);
        assert_eq!(v.len(), 1);
        match &v[0] {
            Violation::RowSum { action, state, sum } => {
                assert_eq!((*action, *state), (0, 1));
                assert!((sum - 0.9).abs() < 1e-15);
            }
            other => panic!("unexpected violation {other:?}"),
        }
        assert!(Mdp::from_document(doc).is_err());
    }

    #[test]
    fn gamma_one_rejected() {
        let err = Mdp::new(1.0, identity(1, 1), vec![vec![vec![1.0]]]).unwrap_err();
        assert!(err.to_string().contains("discount"));
    }

    #[test]
    fn ragged_tensor_rejected() {
        let mut t = identity(2, 1);
        t[0][0].push(0.0);
        let r = vec![vec![vec![0.0; 2]; 2]];
        let v = validate_document(&MdpDocument {
            num_states: 2,
            num_actions: 1,
            gamma: 0.5,
            transitions: t,
            rewards: r,
        });
        assert!(matches!(v[0], Violation::Shape { what: "transitions", .. }));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = vec![vec![vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], vec![0.0, 0.0, 1.0]]];
        let r = vec![vec![vec![std::f64::consts::PI, -1e-300, 0.1 + 0.2]; 3]];
        let m = Mdp::new(0.95, t, r).unwrap();
        let back = Mdp::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn expected_reward_matches_row_sum() {
        let t = vec![vec![vec![0.25, 0.75], vec![1.0, 0.0]]];
        let r = vec![vec![vec![4.0, 8.0], vec![2.0, 100.0]]];
        let m = Mdp::new(0.5, t, r).unwrap();
        assert_eq!(m.expected_reward(0, 0), 7.0);
        assert_eq!(m.expected_reward(0, 1), 2.0);
    }
}
