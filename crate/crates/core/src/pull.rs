//! Pull-based modified policy iteration.
//!
//! The actuator tracks `(last observed state s, elapsed k)`, picks actions
//! `π_A(s, k)` open-loop between updates, and requests an update once `k`
//! reaches the state-dependent period `Δ(s)`. Each round evaluates the
//! current pair exactly, then improves it against the value table of the
//! round's start: either entry by entry (control map, then periods) or, by
//! default, by searching each state's best period and action sequence
//! outright once the entrywise steps stall.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::continuation_vectors;
use crate::config::{argmax_low, SolveConfig, TIE_EPS};
use crate::error::{Error, Result};
use crate::exact::renewal_values;
use crate::linalg::dot;
use crate::mdp::Mdp;
use crate::policy::{ControlMap, JointPolicy, PullPolicy};

/// `V_A(s, k)` for `k ∈ [0, t_max]`, indexed `[s][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueTable(pub Vec<Vec<f64>>);

impl ValueTable {
    pub fn zeros(num_states: usize, t_max: usize) -> Self {
        Self(vec![vec![0.0; t_max + 1]; num_states])
    }

    /// `V_A(·, 0)`: values right after an update.
    pub fn at_update(&self) -> Vec<f64> {
        self.0.iter().map(|row| row[0]).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PullInit {
    /// Action 0 everywhere and `Δ(s) = 1`.
    Default,
    Random { seed: u64 },
}

/// How each round improves the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PullImprovement {
    /// [`improve_control`] followed by [`improve_periods`]. Can stall in a
    /// local optimum of the open-loop rows.
    Coordinate,
    /// Per state, the best period together with its open-loop action
    /// sequence against the round's update values, by [`best_interval_plan`].
    #[default]
    Exact,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PullOptions {
    pub init: Option<PullInit>,
    /// Keep these periods fixed and only optimize the control map.
    pub pinned_periods: Option<Vec<usize>>,
    pub improvement: PullImprovement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullSolution {
    pub policy: PullPolicy,
    pub values: ValueTable,
    pub rounds: usize,
    /// Mean of `V_A(s, 0)` over states after each evaluation.
    pub objective_history: Vec<f64>,
    /// Set when the loop stopped on a revisited policy instead of a fixed point.
    pub cycle_detected: bool,
}

fn check_policy(m: &Mdp, policy: &PullPolicy, cfg: &SolveConfig) -> Result<()> {
    cfg.validate()?;
    policy.control.validate(m)?;
    if policy.periods.len() != m.num_states() {
        return Err(Error::DimensionMismatch { expected: m.num_states(), actual: policy.periods.len() });
    }
    if let Some((s, d)) = policy.periods.iter().enumerate().find(|(_, &d)| d == 0 || d > cfg.max_period()) {
        return Err(Error::Config(format!("period {d} of state {s} outside [1, {}]", cfg.max_period())));
    }
    Ok(())
}

/// Forward beliefs `θ_{s,k}` for `k ∈ [0, t_max]` along a control row.
fn beliefs_along(m: &Mdp, row: &[usize], s: usize, t_max: usize) -> Vec<Vec<f64>> {
    let n = m.num_states();
    let mut out = Vec::with_capacity(t_max + 1);
    let mut b = vec![0.0; n];
    b[s] = 1.0;
    for k in 0..=t_max {
        let mut next = vec![0.0; n];
        if k < t_max {
            m.push_forward(&b, crate::belief::action_at(row, k), &mut next);
        }
        out.push(std::mem::replace(&mut b, next));
    }
    out
}

/// One-step lookahead vector `q_a(s') = r̄(a, s') + γ Σ P^a[s'][s''] tail(s'')`.
fn lookahead(m: &Mdp, a: usize, tail: &[f64]) -> Vec<f64> {
    (0..m.num_states())
        .map(|s| m.expected_reward(a, s) + m.gamma() * dot(m.row(a, s), tail))
        .collect()
}

/// One synchronous application of the control-sub-state update to every `(s, k)`.
///
/// An update follows the step at `k` when `k + 1 ≥ Δ(s)`; entries with
/// `k ≥ Δ(s)` are never reached and are valued as if the update came right
/// after their step.
pub fn value_update_sweep(m: &Mdp, policy: &PullPolicy, v: &ValueTable, cfg: &SolveConfig) -> ValueTable {
    let g = m.gamma();
    let v0 = v.at_update();
    let resample: Vec<f64> = v0.iter().map(|x| x - cfg.beta).collect();
    let rows = (0..m.num_states())
        .map(|s| {
            let row = policy.control.row(s);
            let beliefs = beliefs_along(m, row, s, cfg.t_max);
            (0..=cfg.t_max)
                .map(|k| {
                    let a = crate::belief::action_at(row, k);
                    let b = &beliefs[k];
                    let immediate: f64 = b.iter().enumerate().map(|(x, &p)| p * m.expected_reward(a, x)).sum();
                    let updates = k + 1 >= policy.periods[s] || k == cfg.t_max;
                    let future = if updates {
                        let mut next = vec![0.0; m.num_states()];
                        m.push_forward(b, a, &mut next);
                        dot(&next, &resample)
                    } else {
                        v.0[s][k + 1]
                    };
                    immediate + g * future
                })
                .collect()
        })
        .collect();
    ValueTable(rows)
}

/// Iterates [`value_update_sweep`] from zero until successive tables differ
/// by less than `cfg.tolerance`.
pub fn evaluate_pull_by_sweeps(m: &Mdp, policy: &PullPolicy, cfg: &SolveConfig) -> Result<(ValueTable, usize)> {
    check_policy(m, policy, cfg)?;
    let mut v = ValueTable::zeros(m.num_states(), cfg.t_max);
    // Sweeps contract at rate γ per interval length, so allow for the longest one.
    let cap = cfg.max_iterations.saturating_mul(cfg.t_max.max(1));
    for it in 1..=cap {
        let next = value_update_sweep(m, policy, &v, cfg);
        let diff = next.max_abs_diff(&v);
        v = next;
        if diff < cfg.tolerance {
            return Ok((v, it));
        }
    }
    Err(Error::IterationLimit { what: "pull value sweeps", iterations: cap })
}

/// Exact value table of a pull policy: `V_A(·, 0)` from the renewal solve,
/// then every `V_A(s, k)` from the belief trajectory.
pub fn evaluate_pull(m: &Mdp, policy: &PullPolicy, cfg: &SolveConfig) -> Result<ValueTable> {
    check_policy(m, policy, cfg)?;
    let rv = renewal_values(m, &JointPolicy::Pull(policy.clone()), cfg.t_max)?;
    let v0 = rv.net(cfg.beta);
    Ok(table_from_update_values(m, policy, &v0, cfg))
}

fn table_from_update_values(m: &Mdp, policy: &PullPolicy, v0: &[f64], cfg: &SolveConfig) -> ValueTable {
    let rows = (0..m.num_states())
        .map(|s| {
            let row = policy.control.row(s);
            let d = policy.periods[s];
            let actions: Vec<usize> = (0..d).map(|k| crate::belief::action_at(row, k)).collect();
            let cont = continuation_vectors(m, &actions, v0, cfg.beta);
            let resample: Vec<f64> = v0.iter().map(|x| x - cfg.beta).collect();
            let beliefs = beliefs_along(m, row, s, cfg.t_max);
            (0..=cfg.t_max)
                .map(|k| {
                    if k < d {
                        dot(&beliefs[k], &cont[k])
                    } else {
                        let a = crate::belief::action_at(row, k);
                        dot(&beliefs[k], &lookahead(m, a, &resample))
                    }
                })
                .collect()
        })
        .collect();
    ValueTable(rows)
}

/// Control improvement: for each `(s, k)` the action maximizing the expected
/// return of the remaining `Δ(s) - k` steps (one step for `k ≥ Δ(s)`),
/// followed by resampling at `V_A(·, 0) - β`.
///
/// States are scanned in increasing `k`; the belief at `k` follows the
/// already improved actions at `0..k`, while the actions after `k` are the
/// current ones. Ties go to the lowest action index.
pub fn improve_control(m: &Mdp, policy: &PullPolicy, v: &ValueTable, cfg: &SolveConfig) -> ControlMap {
    let v0 = v.at_update();
    let resample: Vec<f64> = v0.iter().map(|x| x - cfg.beta).collect();
    let n = m.num_states();
    let rows = (0..n)
        .map(|s| {
            let row = policy.control.row(s);
            let d = policy.periods[s];
            let actions: Vec<usize> = (0..d).map(|k| crate::belief::action_at(row, k)).collect();
            let cont = continuation_vectors(m, &actions, &v0, cfg.beta);
            let mut new_row = vec![0usize; cfg.t_max + 1];
            let mut b = vec![0.0; n];
            b[s] = 1.0;
            let mut next = vec![0.0; n];
            for k in 0..=cfg.t_max {
                let tail = if k < d { &cont[k + 1] } else { &resample };
                let (a, _) = argmax_low((0..m.num_actions()).map(|a| dot(&b, &lookahead(m, a, tail))));
                new_row[k] = a;
                m.push_forward(&b, a, &mut next);
                std::mem::swap(&mut b, &mut next);
            }
            new_row
        })
        .collect();
    ControlMap(rows)
}

/// Period improvement: for each state the `n ∈ [1, max_period]` maximizing
/// the return of `n` steps under the control row, then resampling.
/// Ties go to the smallest `n`.
pub fn improve_periods(m: &Mdp, policy: &PullPolicy, v: &ValueTable, cfg: &SolveConfig) -> Vec<usize> {
    let v0 = v.at_update();
    (0..m.num_states())
        .map(|s| {
            let (best, _) = argmax_low(period_objectives(m, policy.control.row(s), s, &v0, cfg));
            best + 1
        })
        .collect()
}

/// Objective of every candidate period `1..=max_period` for one state.
pub fn period_objectives(m: &Mdp, row: &[usize], s: usize, v0: &[f64], cfg: &SolveConfig) -> Vec<f64> {
    let n = m.num_states();
    let g = m.gamma();
    let mut b = vec![0.0; n];
    b[s] = 1.0;
    let mut next = vec![0.0; n];
    let mut acc = 0.0;
    let mut disc = 1.0;
    let mut out = Vec::with_capacity(cfg.max_period());
    for k in 0..cfg.max_period() {
        let a = crate::belief::action_at(row, k);
        acc += disc * b.iter().enumerate().map(|(x, &p)| p * m.expected_reward(a, x)).sum::<f64>();
        m.push_forward(&b, a, &mut next);
        std::mem::swap(&mut b, &mut next);
        disc *= g;
        out.push(acc + disc * (dot(&b, v0) - cfg.beta));
    }
    out
}

/// Outcome of [`best_interval_plan`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSearch {
    /// Period and actions of a plan beating the incumbent, if one was found.
    pub plan: Option<(usize, Vec<usize>)>,
    /// Objective of `plan`, or the incumbent when there is none.
    pub value: f64,
    pub nodes: usize,
    /// False when the node budget ran out before the tree was exhausted.
    pub complete: bool,
}

/// Node budget of one [`best_interval_plan`] call inside the solver.
pub const PLAN_NODE_LIMIT: usize = 4_000_000;

/// Best period `n ∈ periods` and open-loop actions `a_0..a_{n-1}` for an
/// interval started in `s`, maximizing
/// `Σ_{k<n} γ^k r̄(b_k, a_k) + γ^n (b_n · v0 - β)`.
///
/// Depth-first branch and bound over action prefixes. A prefix is pruned
/// when even a controller that observes the state for the rest of the
/// interval could not beat the best plan so far. Only plans better than
/// `incumbent` by more than the tie slack are reported.
pub fn best_interval_plan(
    m: &Mdp,
    s: usize,
    v0: &[f64],
    beta: f64,
    periods: RangeInclusive<usize>,
    incumbent: f64,
    node_limit: usize,
) -> PlanSearch {
    let n = m.num_states();
    let g = m.gamma();
    let (lo, hi) = ((*periods.start()).max(1), *periods.end());
    let stop: Vec<f64> = v0.iter().map(|v| v - beta).collect();
    let mut bound = vec![stop.clone(); hi + 1];
    for k in (0..hi).rev() {
        let (head, tail) = bound.split_at_mut(k + 1);
        for x in 0..n {
            let go = (0..m.num_actions())
                .map(|a| m.expected_reward(a, x) + g * dot(m.row(a, x), &tail[0]))
                .fold(f64::NEG_INFINITY, f64::max);
            head[k][x] = if k >= lo { go.max(stop[x]) } else { go };
        }
    }
    let mut search = PlanTree {
        m,
        stop: &stop,
        bound: &bound,
        lo,
        hi,
        best: incumbent,
        plan: None,
        prefix: Vec::with_capacity(hi),
        scratch: vec![vec![0.0; m.num_actions() * n]; hi],
        nodes: 0,
        node_limit,
    };
    let mut b = vec![0.0; n];
    b[s] = 1.0;
    search.visit(&b, 0, 0.0, 1.0);
    PlanSearch { plan: search.plan, value: search.best, nodes: search.nodes, complete: search.nodes <= node_limit }
}

struct PlanTree<'a> {
    m: &'a Mdp,
    stop: &'a [f64],
    bound: &'a [Vec<f64>],
    lo: usize,
    hi: usize,
    best: f64,
    plan: Option<(usize, Vec<usize>)>,
    prefix: Vec<usize>,
    /// Child beliefs per depth, `num_actions` blocks of `num_states`.
    scratch: Vec<Vec<f64>>,
    nodes: usize,
    node_limit: usize,
}

impl PlanTree<'_> {
    fn beats(&self, value: f64) -> bool {
        self.best == f64::NEG_INFINITY || value > self.best + TIE_EPS * (1.0 + self.best.abs())
    }

    fn visit(&mut self, b: &[f64], k: usize, acc: f64, disc: f64) {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return;
        }
        if k >= self.lo {
            let value = acc + disc * dot(b, self.stop);
            if self.beats(value) {
                self.best = value;
                self.plan = Some((k, self.prefix.clone()));
            }
        }
        if k == self.hi {
            return;
        }
        let (m, g, n) = (self.m, self.m.gamma(), b.len());
        let mut buf = std::mem::take(&mut self.scratch[k]);
        let mut children: Vec<(f64, usize, f64)> = (0..m.num_actions())
            .map(|a| {
                let next = &mut buf[a * n..(a + 1) * n];
                m.push_forward(b, a, next);
                let r: f64 = b.iter().enumerate().map(|(x, &p)| p * m.expected_reward(a, x)).sum();
                (acc + disc * (r + g * dot(next, &self.bound[k + 1])), a, r)
            })
            .collect();
        children.sort_by(|x, y| y.0.total_cmp(&x.0));
        for (ub, a, r) in children {
            if !self.beats(ub) {
                break;
            }
            self.prefix.push(a);
            self.visit(&buf[a * n..(a + 1) * n], k + 1, acc + disc * r, disc * g);
            self.prefix.pop();
        }
        self.scratch[k] = buf;
    }
}

/// One exact improvement round: every state gets its best plan against
/// `v0`, keeping the current one unless strictly beaten.
fn improve_exact(m: &Mdp, policy: &PullPolicy, v0: &[f64], cfg: &SolveConfig, pinned: bool) -> PullPolicy {
    let mut next = policy.clone();
    for s in 0..m.num_states() {
        let d = policy.periods[s];
        let incumbent = period_objectives(m, policy.control.row(s), s, v0, cfg)[d - 1];
        let range = if pinned { d..=d } else { 1..=cfg.max_period() };
        let search = best_interval_plan(m, s, v0, cfg.beta, range, incumbent, PLAN_NODE_LIMIT);
        if !search.complete {
            debug!("interval plan search for state {s} hit the node limit; keeping the best plan found");
        }
        if let Some((period, actions)) = search.plan {
            next.periods[s] = period;
            next.control.0[s][..period].copy_from_slice(&actions);
        }
    }
    next
}

fn initial_policy(m: &Mdp, cfg: &SolveConfig, init: PullInit) -> PullPolicy {
    let n = m.num_states();
    match init {
        PullInit::Default => PullPolicy { control: ControlMap::constant(n, cfg.t_max, 0), periods: vec![1; n] },
        PullInit::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let control =
                ControlMap((0..n).map(|_| (0..=cfg.t_max).map(|_| rng.gen_range(0..m.num_actions())).collect()).collect());
            let periods = (0..n).map(|_| rng.gen_range(1..=cfg.max_period())).collect();
            PullPolicy { control, periods }
        }
    }
}

pub fn solve_pull(m: &Mdp, cfg: &SolveConfig) -> Result<PullSolution> {
    solve_pull_with(m, cfg, &PullOptions::default())
}

pub fn solve_pull_with(m: &Mdp, cfg: &SolveConfig, opts: &PullOptions) -> Result<PullSolution> {
    cfg.validate()?;
    let mut policy = initial_policy(m, cfg, opts.init.unwrap_or(PullInit::Default));
    if let Some(p) = &opts.pinned_periods {
        policy.periods = p.clone();
    }
    check_policy(m, &policy, cfg)?;

    let mut seen = HashSet::new();
    let mut history = Vec::new();
    let mut exact = false;
    for round in 1..=cfg.max_iterations {
        let values = evaluate_pull(m, &policy, cfg)?;
        history.push(values.at_update().iter().sum::<f64>() / m.num_states() as f64);

        let pinned = opts.pinned_periods.is_some();
        let mut next = if exact {
            improve_exact(m, &policy, &values.at_update(), cfg, pinned)
        } else {
            let control = improve_control(m, &policy, &values, cfg);
            let staged = PullPolicy { control, periods: policy.periods.clone() };
            let periods = match &opts.pinned_periods {
                Some(p) => p.clone(),
                None => improve_periods(m, &staged, &values, cfg),
            };
            PullPolicy { control: staged.control, periods }
        };
        // The coordinate steps are a cheap warm start for the exact ones.
        if !exact && opts.improvement == PullImprovement::Exact && (next == policy || seen.contains(&next)) {
            exact = true;
            seen.clear();
            next = improve_exact(m, &policy, &values.at_update(), cfg, pinned);
        }

        if next == policy {
            warn_on_cap(&policy, cfg, opts);
            return Ok(PullSolution { policy, values, rounds: round, objective_history: history, cycle_detected: false });
        }
        seen.insert(policy.clone());
        if seen.contains(&next) {
            debug!("pull solver revisited a policy after {round} rounds; stopping on the current one");
            warn_on_cap(&policy, cfg, opts);
            return Ok(PullSolution { policy, values, rounds: round, objective_history: history, cycle_detected: true });
        }
        policy = next;
    }
    Err(Error::IterationLimit { what: "pull policy iteration", iterations: cfg.max_iterations })
}

fn warn_on_cap(policy: &PullPolicy, cfg: &SolveConfig, opts: &PullOptions) {
    if opts.pinned_periods.is_some() {
        return;
    }
    let capped: Vec<usize> =
        policy.periods.iter().enumerate().filter(|(_, &d)| d == cfg.max_period()).map(|(s, _)| s).collect();
    if !capped.is_empty() {
        warn!(
            "pull solver chose the maximum period {} for states {:?}; they are effectively never updated",
            cfg.max_period(),
            capped
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state(g: f64) -> Mdp {
        Mdp::new(g, vec![vec![vec![1.0]]], vec![vec![vec![1.0]]]).unwrap()
    }

    #[test]
    fn zero_rewards_zero_fixed_point() {
        let m = Mdp::new(0.9, vec![vec![vec![0.5, 0.5], vec![0.1, 0.9]]], vec![vec![vec![0.0; 2]; 2]]).unwrap();
        let cfg = SolveConfig::default().with_t_max(4);
        let p = PullPolicy { control: ControlMap::constant(2, 4, 0), periods: vec![2, 3] };
        let (v, _) = evaluate_pull_by_sweeps(&m, &p, &cfg).unwrap();
        assert!(v.0.iter().flatten().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn single_state_fixed_point() {
        let m = single_state(0.9);
        let cfg = SolveConfig::default().with_beta(0.1).with_t_max(3);
        let p = PullPolicy { control: ControlMap::constant(1, 3, 0), periods: vec![1] };
        let (v, _) = evaluate_pull_by_sweeps(&m, &p, &cfg).unwrap();
        assert!((v.0[0][0] - 9.1).abs() < 1e-8);
        let exact = evaluate_pull(&m, &p, &cfg).unwrap();
        assert!((exact.0[0][0] - 9.1).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_requests_every_step() {
        let t = vec![
            vec![vec![0.6, 0.4, 0.0], vec![0.0, 0.5, 0.5], vec![0.3, 0.3, 0.4]],
            vec![vec![0.1, 0.0, 0.9], vec![0.7, 0.3, 0.0], vec![0.0, 0.2, 0.8]],
        ];
        let r = vec![vec![vec![0.0, 1.0, 2.0]; 3], vec![vec![1.5, 0.0, 0.3]; 3]];
        let m = Mdp::new(0.9, t, r).unwrap();
        let cfg = SolveConfig::default().with_t_max(6);
        let sol = solve_pull(&m, &cfg).unwrap();
        assert_eq!(sol.policy.periods, vec![1, 1, 1]);
    }

    #[test]
    fn prohibitive_beta_never_requests() {
        let t = vec![vec![vec![0.6, 0.4], vec![0.3, 0.7]], vec![vec![0.1, 0.9], vec![0.8, 0.2]]];
        let r = vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]];
        let m = Mdp::new(0.8, t, r).unwrap();
        // r_max / (1 - γ) = 5
        let cfg = SolveConfig::default().with_t_max(5).with_beta(5.0);
        let sol = solve_pull(&m, &cfg).unwrap();
        assert_eq!(sol.policy.periods, vec![5, 5]);
    }

    #[test]
    fn interval_plan_matches_enumeration() {
        let m = crate::generator::random_mdp(3, 2, 0.8, 7).unwrap();
        let v0 = [1.0, -0.5, 2.0];
        let beta = 0.3;
        for s in 0..3 {
            let mut best = f64::NEG_INFINITY;
            for len in 1..=4usize {
                for code in 0..(1usize << len) {
                    let row: Vec<usize> = (0..len).map(|k| (code >> k) & 1).collect();
                    let cfg = SolveConfig::default().with_t_max(len).with_beta(beta);
                    best = best.max(period_objectives(&m, &row, s, &v0, &cfg)[len - 1]);
                }
            }
            let found = best_interval_plan(&m, s, &v0, beta, 1..=4, f64::NEG_INFINITY, usize::MAX);
            assert!(found.complete && found.plan.is_some());
            assert!((found.value - best).abs() < 1e-12, "state {s}: {} vs {best}", found.value);
            let none = best_interval_plan(&m, s, &v0, beta, 1..=4, best, usize::MAX);
            assert!(none.plan.is_none());
        }
    }

    #[test]
    fn exact_and_coordinate_agree_on_fixed_points() {
        let m = crate::generator::random_mdp(4, 2, 0.9, 3).unwrap();
        let cfg = SolveConfig::default().with_t_max(6).with_beta(0.4);
        let exact = solve_pull(&m, &cfg).unwrap();
        let coord =
            solve_pull_with(&m, &cfg, &PullOptions { improvement: PullImprovement::Coordinate, ..Default::default() })
                .unwrap();
        for (e, c) in exact.values.at_update().iter().zip(coord.values.at_update()) {
            assert!(*e >= c - 1e-12);
        }
        assert!(exact.objective_history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn resampling_next_step_is_one_step_greedy() {
        let t = vec![vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![vec![0.3, 0.7], vec![0.6, 0.4]]];
        let r = vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 2.0]; 2]];
        let m = Mdp::new(0.7, t, r).unwrap();
        let cfg = SolveConfig::default().with_t_max(3).with_beta(0.2);
        let p = PullPolicy { control: ControlMap::constant(2, 3, 0), periods: vec![1, 1] };
        let v = evaluate_pull(&m, &p, &cfg).unwrap();
        let c = improve_control(&m, &p, &v, &cfg);
        let v0 = v.at_update();
        for s in 0..2 {
            let q: Vec<f64> = (0..2)
                .map(|a| m.expected_reward(a, s) + m.gamma() * (dot(m.row(a, s), &v0) - cfg.beta))
                .collect();
            let greedy = if q[1] > q[0] { 1 } else { 0 };
            assert_eq!(c.action(s, 0), greedy);
        }
    }
}
