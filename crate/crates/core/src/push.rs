//! Push-based alternate policy iteration.
//!
//! The BS sees the true state and decides after every step whether to
//! transmit it; the actuator only knows the last transmitted state, the
//! elapsed time, and that nothing has arrived since. With one side fixed the
//! other faces an ordinary MDP, so the two policies are improved in turn
//! until neither changes.

use std::collections::HashSet;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{argmax_low, SolveConfig, TIE_EPS};
use crate::error::{Error, Result};
use crate::belief::action_at;
use crate::exact::{interval_stats, renewal_from_intervals, renewal_values, IntervalStats};
use crate::linalg::dot;
use crate::mdp::Mdp;
use crate::policy::{ControlMap, JointPolicy, PushPolicy, TransmitMap};

/// How the actuator forms its belief between updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BeliefMode {
    /// Condition on the absence of a transmission.
    #[default]
    SilenceConditioned,
    /// Ignore what silence reveals and propagate the prior only.
    Unconditioned,
}

/// Which `(s, k, s')` entries the BS may revise during its policy iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BsScope {
    /// Only entries visited with positive probability from a uniformly drawn
    /// informed start under the current pair; the rest keep their value.
    #[default]
    Reachable,
    /// Every entry, visited or not.
    AllStates,
}

/// Entries `(s, k, s')` with `1 ≤ k < t_max` reached before the BS decides,
/// from informed starts on the support of `start`.
pub fn reachable_entries(m: &Mdp, control: &ControlMap, transmit: &TransmitMap, start: &[f64]) -> Vec<bool> {
    let n = m.num_states();
    let t_max = transmit.t_max();
    let mut seen = vec![false; n * (t_max + 1) * n];
    let mut is_start: Vec<bool> = start.iter().map(|&p| p > 0.0).collect();
    let mut frontier: Vec<usize> = (0..n).filter(|&s| is_start[s]).collect();
    let mut mass = vec![0.0; n];
    let mut next = vec![0.0; n];
    while let Some(s) = frontier.pop() {
        mass.iter_mut().for_each(|x| *x = 0.0);
        mass[s] = 1.0;
        for k in 0..t_max {
            m.push_forward(&mass, control.action(s, k), &mut next);
            for (c, p) in next.iter_mut().enumerate() {
                if *p <= 0.0 {
                    continue;
                }
                seen[(s * (t_max + 1) + k + 1) * n + c] = true;
                if k + 1 >= t_max || transmit.get(s, k + 1, c) {
                    *p = 0.0;
                    if !is_start[c] {
                        is_start[c] = true;
                        frontier.push(c);
                    }
                }
            }
            std::mem::swap(&mut mass, &mut next);
        }
    }
    seen
}

/// `V_B(s, k, s')` for last observed `s`, elapsed `k ∈ [0, t_max]`, current `s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BsValueTable {
    num_states: usize,
    t_max: usize,
    values: Vec<f64>,
}

impl BsValueTable {
    #[inline]
    pub fn get(&self, last: usize, elapsed: usize, current: usize) -> f64 {
        self.values[(last * (self.t_max + 1) + elapsed) * self.num_states + current]
    }

    #[inline]
    fn slot(&mut self, last: usize, elapsed: usize, current: usize) -> &mut f64 {
        &mut self.values[(last * (self.t_max + 1) + elapsed) * self.num_states + current]
    }
}

fn lookahead(m: &Mdp, a: usize, tail: &[f64]) -> Vec<f64> {
    (0..m.num_states())
        .map(|s| m.expected_reward(a, s) + m.gamma() * dot(m.row(a, s), tail))
        .collect()
}

fn push_values(m: &Mdp, control: &ControlMap, transmit: &TransmitMap, cfg: &SolveConfig) -> Result<Vec<f64>> {
    let policy = JointPolicy::Push(PushPolicy { control: control.clone(), transmit: transmit.clone() });
    Ok(renewal_values(m, &policy, cfg.t_max)?.net(cfg.beta))
}

/// Mean of `V(s, 0)` over states: the exact return from a uniformly drawn informed start.
pub fn push_objective(m: &Mdp, policy: &PushPolicy, cfg: &SolveConfig) -> Result<f64> {
    let v = push_values(m, &policy.control, &policy.transmit, cfg)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// One improvement pass of the actuator's control against a fixed transmit map.
///
/// For every interval start `s`, actions are revised in increasing elapsed
/// time. The belief at `k` is the mass of states that produced no
/// transmission so far, renormalized; when that mass is zero (the interval
/// has always ended by `k`) the prior propagated through the control is used
/// instead. Actions after `k` keep their current values.
pub fn improve_push_control(
    m: &Mdp,
    control: &ControlMap,
    transmit: &TransmitMap,
    update_values: &[f64],
    cfg: &SolveConfig,
    mode: BeliefMode,
) -> ControlMap {
    let n = m.num_states();
    let t_max = cfg.t_max;
    let resample: Vec<f64> = update_values.iter().map(|v| v - cfg.beta).collect();
    let rows = (0..n)
        .map(|s| {
            let row = control.row(s);
            // tails[k][y]: value of landing in y when elapsed becomes k.
            let mut tails = vec![Vec::new(); t_max + 1];
            tails[t_max] = resample.clone();
            for k in (1..t_max).rev() {
                let silent = lookahead(m, action_at(row, k), &tails[k + 1]);
                tails[k] = (0..n).map(|y| if transmit.get(s, k, y) { resample[y] } else { silent[y] }).collect();
            }

            let mut new_row = vec![0usize; t_max + 1];
            let mut cond = vec![0.0; n];
            cond[s] = 1.0;
            let mut prior = cond.clone();
            let mut scratch = vec![0.0; n];
            for k in 0..t_max {
                let cond_mass: f64 = cond.iter().sum();
                let belief: Vec<f64> = if mode == BeliefMode::SilenceConditioned && cond_mass > 0.0 {
                    cond.iter().map(|x| x / cond_mass).collect()
                } else {
                    let pm: f64 = prior.iter().sum();
                    prior.iter().map(|x| x / pm).collect()
                };
                let tail = &tails[k + 1];
                let (a, _) = argmax_low((0..m.num_actions()).map(|a| dot(&belief, &lookahead(m, a, tail))));
                new_row[k] = a;

                m.push_forward(&cond, a, &mut scratch);
                for (y, c) in cond.iter_mut().enumerate() {
                    *c = if transmit.get(s, k + 1, y) { 0.0 } else { scratch[y] };
                }
                m.push_forward(&prior, a, &mut scratch);
                std::mem::swap(&mut prior, &mut scratch);
            }
            new_row[t_max] = new_row[t_max - 1];
            new_row
        })
        .collect();
    ControlMap(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPiResult {
    pub control: ControlMap,
    pub update_values: Vec<f64>,
    pub iterations: usize,
}

/// Best response of the actuator to a fixed transmit map, by policy
/// iteration started from `warm` (action 0 everywhere when absent).
pub fn control_policy_iteration(
    m: &Mdp,
    transmit: &TransmitMap,
    cfg: &SolveConfig,
    warm: Option<&ControlMap>,
    mode: BeliefMode,
) -> Result<ControlPiResult> {
    cfg.validate()?;
    let mut control = warm.cloned().unwrap_or_else(|| ControlMap::constant(m.num_states(), cfg.t_max, 0));
    let mut seen = HashSet::new();
    for it in 1..=cfg.max_iterations {
        let v = push_values(m, &control, transmit, cfg)?;
        let next = improve_push_control(m, &control, transmit, &v, cfg, mode);
        seen.insert(control.clone());
        if next == control || seen.contains(&next) {
            if next != control {
                debug!("control policy iteration revisited a policy after {it} iterations");
            }
            return Ok(ControlPiResult { control, update_values: v, iterations: it });
        }
        control = next;
    }
    Err(Error::IterationLimit { what: "push control policy iteration", iterations: cfg.max_iterations })
}

fn decode_sequence(mut index: usize, num_actions: usize, t_max: usize) -> Vec<usize> {
    let mut row = vec![0; t_max + 1];
    for slot in row.iter_mut().take(t_max) {
        *slot = index % num_actions;
        index /= num_actions;
    }
    row[t_max] = row[t_max - 1];
    row
}

fn encode_sequence(row: &[usize], num_actions: usize, t_max: usize) -> usize {
    (0..t_max).rev().fold(0, |acc, k| acc * num_actions + action_at(row, k))
}

/// Exact best response of the actuator to a fixed transmit map, by policy
/// iteration on the semi-MDP over interval starts whose actions are whole
/// open-loop sequences of length `t_max`. Fails when there are more than
/// `limit` sequences.
pub fn enumerated_control_best_response(
    m: &Mdp,
    transmit: &TransmitMap,
    cfg: &SolveConfig,
    warm: Option<&ControlMap>,
    limit: usize,
) -> Result<ControlPiResult> {
    cfg.validate()?;
    let (n, na, t_max) = (m.num_states(), m.num_actions(), cfg.t_max);
    let count = (na as u128).checked_pow(t_max as u32).filter(|&c| c <= limit as u128).ok_or_else(|| {
        Error::Config(format!("{na}^{t_max} open-loop sequences exceed the enumeration limit {limit}"))
    })? as usize;
    let stats: Vec<Vec<IntervalStats>> = (0..n)
        .map(|s| {
            (0..count)
                .map(|i| interval_stats(m, &decode_sequence(i, na, t_max), s, t_max, |k, c| transmit.get(s, k, c)))
                .collect()
        })
        .collect();
    let mut choice: Vec<usize> = match warm {
        Some(c) => (0..n).map(|s| encode_sequence(c.row(s), na, t_max)).collect(),
        None => vec![0; n],
    };
    for it in 1..=cfg.max_iterations {
        let chosen: Vec<IntervalStats> = (0..n).map(|s| stats[s][choice[s]].clone()).collect();
        let v = renewal_from_intervals(n, chosen)?.net(cfg.beta);
        let mut changed = false;
        for s in 0..n {
            let q = |st: &IntervalStats| st.reward_discounted - cfg.beta * st.cost_discounted + dot(&st.kernel_discounted, &v);
            let (best, best_q) = argmax_low(stats[s].iter().map(q));
            let current = q(&stats[s][choice[s]]);
            if best_q > current + TIE_EPS * (1.0 + current.abs()) {
                choice[s] = best;
                changed = true;
            }
        }
        if !changed {
            let control = ControlMap(choice.iter().map(|&i| decode_sequence(i, na, t_max)).collect());
            return Ok(ControlPiResult { control, update_values: v, iterations: it });
        }
    }
    Err(Error::IterationLimit { what: "enumerated control best response", iterations: cfg.max_iterations })
}

/// `V_B` for a fixed pair, given the values right after an update.
pub fn bs_value_table(
    m: &Mdp,
    control: &ControlMap,
    transmit: &TransmitMap,
    update_values: &[f64],
    cfg: &SolveConfig,
) -> BsValueTable {
    let n = m.num_states();
    let t_max = cfg.t_max;
    let mut table = BsValueTable { num_states: n, t_max, values: vec![0.0; n * (t_max + 1) * n] };
    for s in 0..n {
        for c in 0..n {
            *table.slot(s, t_max, c) = update_values[c] - cfg.beta;
        }
        for k in (0..t_max).rev() {
            let next: Vec<f64> = (0..n).map(|y| table.get(s, k + 1, y)).collect();
            let silent = lookahead(m, control.action(s, k), &next);
            for c in 0..n {
                *table.slot(s, k, c) =
                    if k >= 1 && transmit.get(s, k, c) { update_values[c] - cfg.beta } else { silent[c] };
            }
        }
    }
    table
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommPiResult {
    pub transmit: TransmitMap,
    pub values: BsValueTable,
    pub iterations: usize,
}

/// Best response of the BS to a fixed control map, by policy iteration on
/// the `(s, k, s')` chain. Transmitting yields `V_B(s', 0, s') - β`, staying
/// silent yields the step reward plus `γ V_B(s, k+1, s'')`; indifference
/// resolves to silence. `scope` limits which entries may change.
pub fn communication_policy_iteration(
    m: &Mdp,
    control: &ControlMap,
    cfg: &SolveConfig,
    warm: Option<&TransmitMap>,
    scope: BsScope,
) -> Result<CommPiResult> {
    cfg.validate()?;
    control.validate(m)?;
    let n = m.num_states();
    let t_max = cfg.t_max;
    let start = vec![1.0; n];
    let mut transmit = warm.cloned().unwrap_or_else(|| TransmitMap::always(n, t_max));
    let mut seen = HashSet::new();
    for it in 1..=cfg.max_iterations {
        let v0 = push_values(m, control, &transmit, cfg)?;
        let table = bs_value_table(m, control, &transmit, &v0, cfg);
        let visited = match scope {
            BsScope::Reachable => Some(reachable_entries(m, control, &transmit, &start)),
            BsScope::AllStates => None,
        };
        let mut next = transmit.clone();
        for s in 0..n {
            for k in 1..t_max {
                let tail: Vec<f64> = (0..n).map(|y| table.get(s, k + 1, y)).collect();
                let silent = lookahead(m, control.action(s, k), &tail);
                for c in 0..n {
                    if visited.as_ref().is_some_and(|v| !v[(s * (t_max + 1) + k) * n + c]) {
                        continue;
                    }
                    let send = v0[c] - cfg.beta;
                    next.set(s, k, c, send > silent[c] + TIE_EPS * (1.0 + silent[c].abs()));
                }
            }
        }
        seen.insert(transmit.clone());
        if next == transmit || seen.contains(&next) {
            return Ok(CommPiResult { transmit, values: table, iterations: it });
        }
        transmit = next;
    }
    Err(Error::IterationLimit { what: "communication policy iteration", iterations: cfg.max_iterations })
}

/// Initial BS policy for alternate policy iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushInit {
    Always,
    Never,
    Random { seed: u64 },
    Explicit(TransmitMap),
}

impl PushInit {
    pub fn transmit_map(&self, num_states: usize, t_max: usize) -> Result<TransmitMap> {
        match self {
            PushInit::Always => Ok(TransmitMap::always(num_states, t_max)),
            PushInit::Never => Ok(TransmitMap::never(num_states, t_max)),
            PushInit::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut map = TransmitMap::never(num_states, t_max);
                for s in 0..num_states {
                    for k in 1..t_max {
                        for c in 0..num_states {
                            map.set(s, k, c, rng.gen_bool(0.5));
                        }
                    }
                }
                Ok(map)
            }
            PushInit::Explicit(map) => {
                if map.num_states() != num_states || map.t_max() != t_max {
                    return Err(Error::Config(format!(
                        "explicit transmit map is {}x{}, expected {num_states} states and t_max {t_max}",
                        map.num_states(),
                        map.t_max()
                    )));
                }
                Ok(map.clone())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PushInit::Always => "always",
            PushInit::Never => "never",
            PushInit::Random { .. } => "random",
            PushInit::Explicit(_) => "explicit",
        }
    }
}

/// How the actuator's best response is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ControlSolver {
    /// [`control_policy_iteration`].
    #[default]
    CoordinateAscent,
    /// [`enumerated_control_best_response`] with the given sequence limit.
    Enumerate { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PushOptions {
    pub mode: BeliefMode,
    pub scope: BsScope,
    pub control_solver: ControlSolver,
    /// Seed for a random initial control map; action 0 everywhere when absent.
    pub control_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PushSolution {
    pub policy: PushPolicy,
    pub rounds: usize,
    /// [`push_objective`] of the initial pair followed by one entry per round.
    pub objective_history: Vec<f64>,
}

impl PushSolution {
    /// Whether the objective never dropped by more than `tol` between rounds.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.objective_history.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

/// Alternate policy iteration: actuator best response, then BS best
/// response, until neither policy changes.
pub fn solve_push_api(m: &Mdp, cfg: &SolveConfig, init: &PushInit) -> Result<PushSolution> {
    solve_push_api_with(m, cfg, init, &PushOptions::default())
}

pub fn solve_push_api_with(m: &Mdp, cfg: &SolveConfig, init: &PushInit, opts: &PushOptions) -> Result<PushSolution> {
    cfg.validate()?;
    let n = m.num_states();
    let mut transmit = init.transmit_map(n, cfg.t_max)?;
    let mut control = match opts.control_seed {
        None => ControlMap::constant(n, cfg.t_max, 0),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ControlMap((0..n).map(|_| (0..=cfg.t_max).map(|_| rng.gen_range(0..m.num_actions())).collect()).collect())
        }
    };
    let mut history = vec![push_objective(m, &PushPolicy { control: control.clone(), transmit: transmit.clone() }, cfg)?];
    for round in 1..=cfg.max_iterations {
        let next_control = best_response_control(m, &transmit, cfg, &control, opts)?;
        let next_transmit = communication_policy_iteration(m, &next_control, cfg, Some(&transmit), opts.scope)?.transmit;
        let policy = PushPolicy { control: next_control, transmit: next_transmit };
        history.push(push_objective(m, &policy, cfg)?);
        if policy.control == control && policy.transmit == transmit {
            return Ok(PushSolution { policy, rounds: round, objective_history: history });
        }
        control = policy.control;
        transmit = policy.transmit;
    }
    Err(Error::IterationLimit { what: "alternate policy iteration", iterations: cfg.max_iterations })
}

fn best_response_control(
    m: &Mdp,
    transmit: &TransmitMap,
    cfg: &SolveConfig,
    warm: &ControlMap,
    opts: &PushOptions,
) -> Result<ControlMap> {
    Ok(match opts.control_solver {
        ControlSolver::CoordinateAscent => control_policy_iteration(m, transmit, cfg, Some(warm), opts.mode)?.control,
        ControlSolver::Enumerate { limit } => enumerated_control_best_response(m, transmit, cfg, Some(warm), limit)?.control,
    })
}

/// Runs one more round of both best responses and reports whether either
/// policy would change.
pub fn is_mutual_best_response(m: &Mdp, policy: &PushPolicy, cfg: &SolveConfig, opts: &PushOptions) -> Result<bool> {
    let c = best_response_control(m, &policy.transmit, cfg, &policy.control, opts)?;
    let t = communication_policy_iteration(m, &policy.control, cfg, Some(&policy.transmit), opts.scope)?.transmit;
    Ok(c == policy.control && t == policy.transmit)
}

/// Result of the exhaustive search over joint push policies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustivePushResult {
    pub best_value: f64,
    pub best_policy: Option<PushPolicy>,
    /// Search nodes whose bound was computed.
    pub nodes: usize,
    /// Whether a policy strictly better than the incumbent was found.
    pub improved_on_incumbent: bool,
}

/// Relaxed problem: at unassigned `(s, k)` the actuator's action may depend
/// on the true state, which can only help. Returns `V(s, 0)` and the
/// discounted occupancy of every `(s, k)`.
fn relaxed_solution(
    m: &Mdp,
    assign: &[Option<usize>],
    cfg: &SolveConfig,
    start: &[f64],
    v0: &mut Vec<f64>,
) -> Result<(Vec<f64>, TransmitMap, Vec<f64>)> {
    let n = m.num_states();
    let t_max = cfg.t_max;
    let g = m.gamma();
    let idx = |s: usize, k: usize| s * t_max + k;
    // act[s][k][c]: chosen action; val[s][k][c]: value of (s,k,c) before the transmit decision at k.
    let mut act = vec![vec![vec![0usize; n]; t_max]; n];
    let mut send = vec![vec![vec![false; n]; t_max + 1]; n];
    let mut converged = false;
    for _ in 0..cfg.max_iterations.max(100_000) {
        let resample: Vec<f64> = v0.iter().map(|v| v - cfg.beta).collect();
        let mut next_v0 = vec![0.0; n];
        for s in 0..n {
            let mut tail = resample.clone();
            for k in (0..t_max).rev() {
                let allowed: Vec<usize> = match assign[idx(s, k)] {
                    Some(a) => vec![a],
                    None => (0..m.num_actions()).collect(),
                };
                let mut silent = vec![0.0; n];
                for c in 0..n {
                    let (best, val) = allowed
                        .iter()
                        .map(|&a| (a, m.expected_reward(a, c) + g * dot(m.row(a, c), &tail)))
                        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                    act[s][k][c] = best;
                    silent[c] = val;
                }
                if k == 0 {
                    next_v0[s] = silent[s];
                } else {
                    for c in 0..n {
                        send[s][k][c] = resample[c] > silent[c];
                        tail[c] = resample[c].max(silent[c]);
                    }
                }
            }
        }
        let diff = next_v0.iter().zip(v0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        *v0 = next_v0;
        if diff < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationLimit { what: "relaxed push bound", iterations: cfg.max_iterations });
    }

    // Discounted occupancy of (s, k, c) under the relaxed optimum.
    let mut occ_sk = vec![0.0; n * t_max];
    let mut entering = start.to_vec();
    for _ in 0..100_000 {
        let mut next_entering = vec![0.0; n];
        let mut total = 0.0;
        for s in 0..n {
            if entering[s] == 0.0 {
                continue;
            }
            let mut mass = vec![0.0; n];
            mass[s] = entering[s];
            for k in 0..t_max {
                let mut nm = vec![0.0; n];
                for c in 0..n {
                    if mass[c] == 0.0 {
                        continue;
                    }
                    occ_sk[idx(s, k)] += mass[c];
                    total += mass[c];
                    let a = act[s][k][c];
                    for (y, &p) in m.row(a, c).iter().enumerate() {
                        if p > 0.0 {
                            let f = g * mass[c] * p;
                            if k + 1 >= t_max || send[s][k + 1][y] {
                                next_entering[y] += f;
                            } else {
                                nm[y] += f;
                            }
                        }
                    }
                }
                mass = nm;
            }
        }
        entering = next_entering;
        if total < 1e-15 {
            break;
        }
    }
    let mut transmit = TransmitMap::never(n, t_max);
    for s in 0..n {
        for k in 1..t_max {
            for c in 0..n {
                transmit.set(s, k, c, send[s][k][c]);
            }
        }
    }
    Ok((v0.clone(), transmit, occ_sk))
}

/// Branch-and-bound search for the best joint push policy from `start`.
///
/// Branches on the actuator's action at the most visited unassigned
/// `(s, k)` under the relaxed optimum; a node whose relaxation never visits
/// an unassigned entry is an implementable policy whose value equals its
/// bound. Subtrees whose bound does not exceed `incumbent + 1e-12` are pruned.
pub fn exhaustive_push_optimum(
    m: &Mdp,
    cfg: &SolveConfig,
    start: &[f64],
    incumbent: f64,
    node_limit: usize,
) -> Result<ExhaustivePushResult> {
    cfg.validate()?;
    let n = m.num_states();
    let t_max = cfg.t_max;
    let mut result = ExhaustivePushResult { best_value: incumbent, best_policy: None, nodes: 0, improved_on_incumbent: false };
    let upper = m.max_abs_reward() / (1.0 - m.gamma());
    let mut stack: Vec<(Vec<Option<usize>>, Vec<f64>)> = vec![(vec![None; n * t_max], vec![upper; n])];
    while let Some((assign, mut v0)) = stack.pop() {
        result.nodes += 1;
        if result.nodes > node_limit {
            return Err(Error::IterationLimit { what: "exhaustive push search", iterations: node_limit });
        }
        let (values, transmit, occupancy) = relaxed_solution(m, &assign, cfg, start, &mut v0)?;
        let bound = dot(start, &values);
        if bound <= result.best_value + 1e-12 {
            continue;
        }
        let branch = (0..n)
            .flat_map(|s| (0..t_max).map(move |k| (s, k)))
            .filter(|&(s, k)| assign[s * t_max + k].is_none() && occupancy[s * t_max + k] > 0.0)
            .fold(None, |best: Option<(usize, usize)>, sk| match best {
                Some(b) if occupancy[b.0 * t_max + b.1] >= occupancy[sk.0 * t_max + sk.1] => Some(b),
                _ => Some(sk),
            });
        match branch {
            None => {
                let control = ControlMap(
                    (0..n)
                        .map(|s| {
                            let mut row: Vec<usize> = (0..t_max).map(|k| assign[s * t_max + k].unwrap_or(0)).collect();
                            row.push(row[t_max - 1]);
                            row
                        })
                        .collect(),
                );
                result.best_value = bound;
                result.best_policy = Some(PushPolicy { control, transmit });
                result.improved_on_incumbent = true;
            }
            Some((s, k)) => {
                for a in (0..m.num_actions()).rev() {
                    let mut child = assign.clone();
                    child[s * t_max + k] = Some(a);
                    stack.push((child, v0.clone()));
                }
            }
        }
    }
    Ok(result)
}
