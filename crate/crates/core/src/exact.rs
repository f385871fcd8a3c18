//! Exact evaluation of joint policies on the augmented chain.
//!
//! Every policy here renews at each update: the process restarts from
//! `(current state, elapsed 0)`. An interval started in `s` is analysed by a
//! forward pass over the unnormalized mass of `(current state)` at each
//! elapsed time, which yields the discounted reward collected inside the
//! interval and the discounted kernel into the next interval start. The
//! values then follow from one `|S| × |S|` linear solve. No sampling is
//! involved.

use serde::{Deserialize, Serialize};

use crate::baselines::stationary_distribution;
use crate::belief::action_at;
use crate::config::SolveConfig;
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_resolvent};
use crate::mdp::Mdp;
use crate::policy::JointPolicy;
use crate::report::{normalize_pmf, EvaluationReport, Pmf};

/// Where the reported return is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StartConvention {
    /// Time 0 is the first step; its reward is discounted by `γ⁰` and an
    /// update after step `t` costs `β γ^{t+1}`.
    EpisodeStart,
    /// Value at the instant of entering the start state, including
    /// `entry_reward` for that arrival; rewards and costs both carry the
    /// discount of the time they are realized at.
    OnArrival { entry_reward: f64 },
}

/// Statistics of one inter-update interval started at a fixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats {
    pub reward_discounted: f64,
    pub reward_undiscounted: f64,
    /// `E[γ^L]` where `L` is the interval length.
    pub cost_discounted: f64,
    pub expected_length: f64,
    /// `γ^L · P(next start = s')`.
    pub kernel_discounted: Vec<f64>,
    /// `P(next start = s')`.
    pub kernel: Vec<f64>,
    /// Distribution of `L`, indexed by length (entry 0 unused).
    pub length_pmf: Vec<f64>,
}

/// Forward pass over one interval started at `start` (elapsed 0).
///
/// `transmits(elapsed, current)` decides whether an update follows a step
/// that brings elapsed time to `elapsed`. All remaining mass updates at
/// `max_len`.
pub fn interval_stats<F>(m: &Mdp, control_row: &[usize], start: usize, max_len: usize, transmits: F) -> IntervalStats
where
    F: Fn(usize, usize) -> bool,
{
    let n = m.num_states();
    let g = m.gamma();
    let mut stats = IntervalStats {
        reward_discounted: 0.0,
        reward_undiscounted: 0.0,
        cost_discounted: 0.0,
        expected_length: 0.0,
        kernel_discounted: vec![0.0; n],
        kernel: vec![0.0; n],
        length_pmf: vec![0.0; max_len + 1],
    };
    let mut mass = vec![0.0; n];
    mass[start] = 1.0;
    let mut next = vec![0.0; n];
    let mut disc = 1.0;
    for j in 0..max_len {
        let a = action_at(control_row, j);
        let elapsed = j + 1;
        let disc_next = disc * g;
        let mut any = false;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, &w) in mass.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let er = m.expected_reward(a, s);
            stats.reward_discounted += disc * w * er;
            stats.reward_undiscounted += w * er;
            for (t, &p) in m.row(a, s).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let flow = w * p;
                if elapsed >= max_len || transmits(elapsed, t) {
                    stats.kernel_discounted[t] += disc_next * flow;
                    stats.kernel[t] += flow;
                    stats.cost_discounted += disc_next * flow;
                    stats.length_pmf[elapsed] += flow;
                    stats.expected_length += elapsed as f64 * flow;
                } else {
                    next[t] += flow;
                    any = true;
                }
            }
        }
        std::mem::swap(&mut mass, &mut next);
        disc = disc_next;
        if !any {
            break;
        }
    }
    stats
}

/// Per-state values of a renewal policy at the start of a steady-state interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalValues {
    /// Discounted reward from `(s, 0)`.
    pub reward: Vec<f64>,
    /// Discounted update count from `(s, 0)` (without `β`).
    pub cost: Vec<f64>,
    pub intervals: Vec<IntervalStats>,
}

impl RenewalValues {
    /// `V(s, 0) = reward(s) - β cost(s)`.
    pub fn net(&self, beta: f64) -> Vec<f64> {
        self.reward.iter().zip(&self.cost).map(|(r, c)| r - beta * c).collect()
    }
}

fn steady_intervals(m: &Mdp, policy: &JointPolicy, t_max: usize) -> Vec<IntervalStats> {
    let control = policy.control();
    (0..m.num_states())
        .map(|s| {
            let max_len = match policy {
                JointPolicy::Pull(p) => p.periods[s],
                JointPolicy::Periodic(p) => p.schedule.period,
                JointPolicy::Push(_) => t_max,
            };
            interval_stats(m, control.row(s), s, max_len, |k, c| policy.transmits(s, k, c, t_max))
        })
        .collect()
}

/// Solves the renewal equations `W = R + K W`, `C = c + K C`.
pub fn renewal_values(m: &Mdp, policy: &JointPolicy, t_max: usize) -> Result<RenewalValues> {
    policy.validate(m, t_max)?;
    let intervals = steady_intervals(m, policy, t_max);
    renewal_from_intervals(m.num_states(), intervals)
}

pub(crate) fn renewal_from_intervals(n: usize, intervals: Vec<IntervalStats>) -> Result<RenewalValues> {
    let kernel: Vec<f64> = intervals.iter().flat_map(|st| st.kernel_discounted.iter().copied()).collect();
    let r: Vec<f64> = intervals.iter().map(|st| st.reward_discounted).collect();
    let c: Vec<f64> = intervals.iter().map(|st| st.cost_discounted).collect();
    let mut sol = solve_resolvent(n, &kernel, &[&r, &c], "renewal evaluation")?;
    let cost = sol.pop().expect("two solutions");
    let reward = sol.pop().expect("two solutions");
    Ok(RenewalValues { reward, cost, intervals })
}

/// Exact discounted return, update statistics, and Peak-AoI PMFs of a joint policy.
///
/// `start` is the distribution of the state the actuator is informed of at
/// time 0.
pub fn evaluate_joint_policy_exact(
    m: &Mdp,
    policy: &JointPolicy,
    cfg: &SolveConfig,
    start: &[f64],
    convention: StartConvention,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let n = m.num_states();
    if start.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: start.len() });
    }
    let total: f64 = start.iter().sum();
    if start.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config("start distribution must be nonnegative and sum to 1".into()));
    }
    let rv = renewal_values(m, policy, cfg.t_max)?;

    // Value at time 0 and the distribution of the first steady-state interval start.
    let (reward0, cost0, first_start) = match policy {
        JointPolicy::Periodic(p) if p.schedule.first_interval() != p.schedule.period => {
            let len = p.schedule.first_interval();
            let mut reward0 = vec![0.0; n];
            let mut cost0 = vec![0.0; n];
            let mut first_start = vec![0.0; n];
            for s in 0..n {
                let st = interval_stats(m, p.control.row(s), s, len, |_, _| false);
                reward0[s] = st.reward_discounted + dot(&st.kernel_discounted, &rv.reward);
                cost0[s] = st.cost_discounted + dot(&st.kernel_discounted, &rv.cost);
                for (f, k) in first_start.iter_mut().zip(&st.kernel) {
                    *f += start[s] * k;
                }
            }
            (reward0, cost0, first_start)
        }
        _ => (rv.reward.clone(), rv.cost.clone(), start.to_vec()),
    };
    let reward = dot(start, &reward0);
    let cost = dot(start, &cost0);
    let (discounted_reward, discounted_return) = match convention {
        StartConvention::EpisodeStart => (reward, reward - cfg.beta * cost),
        StartConvention::OnArrival { entry_reward } => {
            let r = entry_reward + m.gamma() * reward;
            (r, r - cfg.beta * cost)
        }
    };

    // Long-run statistics from the embedded chain of interval starts.
    let embedded: Vec<Vec<f64>> = rv.intervals.iter().map(|st| st.kernel.clone()).collect();
    let phi = stationary_distribution(&embedded, Some(&first_start), cfg.max_iterations.max(1_000_000))?;
    let mean_len: f64 = phi.iter().zip(&rv.intervals).map(|(p, st)| p * st.expected_length).sum();
    let mean_reward: f64 = phi.iter().zip(&rv.intervals).map(|(p, st)| p * st.reward_undiscounted).sum();
    let per_state: Vec<Pmf> = rv
        .intervals
        .iter()
        .map(|st| normalize_pmf(st.length_pmf.iter().copied().enumerate()))
        .collect();
    let mut overall = vec![0.0; cfg.t_max + 1];
    for (p, st) in phi.iter().zip(&rv.intervals) {
        for (l, &q) in st.length_pmf.iter().enumerate() {
            overall[l] += p * q;
        }
    }

    Ok(EvaluationReport {
        discounted_return,
        discounted_reward,
        discounted_comm_cost: cost,
        per_step_avg_reward: mean_reward / mean_len,
        update_frequency: 1.0 / mean_len,
        peak_aoi_pmf_overall: normalize_pmf(overall.into_iter().enumerate()),
        peak_aoi_pmf_per_state: per_state,
        interval_start_distribution: phi,
        discounted_return_se: 0.0,
        episodes: 0,
        steps: 0,
    })
}

/// Uniform start distribution.
pub fn uniform_start(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// One-hot start distribution.
pub fn point_start(n: usize, s: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[s] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full_obs::solve_full_observability;
    use crate::policy::{ControlMap, PullPolicy};

    fn small() -> Mdp {
        let t = vec![
            vec![vec![0.7, 0.3, 0.0], vec![0.1, 0.6, 0.3], vec![0.2, 0.0, 0.8]],
            vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![0.0, 0.9, 0.1]],
        ];
        let r = vec![
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.5], vec![0.0, 0.0, 1.0]],
            vec![vec![0.0, 1.5, 0.0], vec![3.0, 0.0, 0.0], vec![0.0, 0.2, 0.0]],
        ];
        Mdp::new(0.9, t, r).unwrap()
    }

    #[test]
    fn update_every_step_at_zero_cost_matches_full_observability() {
        let m = small();
        let cfg = SolveConfig::default().with_t_max(5);
        let fo = solve_full_observability(&m, &cfg).unwrap();
        let control = ControlMap(fo.policy.iter().map(|&a| vec![a; cfg.t_max + 1]).collect());
        let policy = JointPolicy::Pull(PullPolicy { control, periods: vec![1; 3] });
        for s in 0..3 {
            let rep = evaluate_joint_policy_exact(&m, &policy, &cfg, &point_start(3, s), StartConvention::EpisodeStart)
                .unwrap();
            assert!((rep.discounted_return - fo.values[s]).abs() < 1e-12);
            assert!((rep.update_frequency - 1.0).abs() < 1e-12);
            assert_eq!(rep.peak_aoi_pmf_overall.len(), 1);
        }
    }

    #[test]
    fn period_beyond_t_max_is_a_config_error() {
        let m = small();
        let cfg = SolveConfig::default().with_t_max(3);
        let policy = JointPolicy::Pull(PullPolicy { control: ControlMap::constant(3, 3, 0), periods: vec![1, 4, 1] });
        let err = evaluate_joint_policy_exact(&m, &policy, &cfg, &uniform_start(3), StartConvention::EpisodeStart);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn cost_counts_updates() {
        // Single state, period 3: updates at t = 3, 6, …, costs γ³ + γ⁶ + …
        let g: f64 = 0.8;
        let m = Mdp::new(g, vec![vec![vec![1.0]]], vec![vec![vec![0.0]]]).unwrap();
        let cfg = SolveConfig::default().with_t_max(4).with_beta(1.0);
        let policy = JointPolicy::Pull(PullPolicy { control: ControlMap::constant(1, 4, 0), periods: vec![3] });
        let rep = evaluate_joint_policy_exact(&m, &policy, &cfg, &[1.0], StartConvention::EpisodeStart).unwrap();
        let c = g.powi(3) / (1.0 - g.powi(3));
        assert!((rep.discounted_comm_cost - c).abs() < 1e-12);
        assert!((rep.discounted_return + c).abs() < 1e-12);
        assert!((rep.update_frequency - 1.0 / 3.0).abs() < 1e-12);
    }
}
