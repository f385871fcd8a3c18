//! Monte Carlo rollouts and Pareto comparisons.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolveConfig;
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::JointPolicy;
use crate::report::{normalize_pmf, EvaluationReport};

#[derive(Debug, Clone)]
struct EpisodeTally {
    discounted_reward: f64,
    discounted_cost: f64,
    reward: f64,
    updates: usize,
    /// `(last observed state, interval length)` per completed interval.
    intervals: Vec<(usize, usize)>,
}

fn sampler(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|e| Error::Config(format!("invalid distribution: {e}")))
}

fn run_episode(
    m: &Mdp,
    policy: &JointPolicy,
    t_max: usize,
    start: &WeightedIndex<f64>,
    rows: &[Vec<WeightedIndex<f64>>],
    rng: &mut ChaCha8Rng,
    steps: usize,
) -> EpisodeTally {
    let g = m.gamma();
    let first_len = match policy {
        JointPolicy::Periodic(p) => Some(p.schedule.first_interval()),
        _ => None,
    };
    let mut tally =
        EpisodeTally { discounted_reward: 0.0, discounted_cost: 0.0, reward: 0.0, updates: 0, intervals: Vec::new() };
    let mut last = start.sample(rng);
    let mut current = last;
    let mut elapsed = 0;
    let mut first = true;
    let mut disc = 1.0;
    for _ in 0..steps {
        let a = policy.control().action(last, elapsed);
        let next = rows[a][current].sample(rng);
        let r = m.reward(a, current, next);
        tally.discounted_reward += disc * r;
        tally.reward += r;
        disc *= g;
        elapsed += 1;
        let update = match first_len {
            Some(len) if first => elapsed >= len,
            _ => policy.transmits(last, elapsed, next, t_max),
        };
        if update {
            tally.discounted_cost += disc;
            tally.updates += 1;
            tally.intervals.push((last, elapsed));
            last = next;
            elapsed = 0;
            first = false;
        }
        current = next;
    }
    tally
}

/// Seeded rollouts of `episodes` episodes of `steps` steps each.
///
/// Episode `i` draws from its own ChaCha stream, so results do not depend on
/// how episodes are scheduled across threads. Discounted quantities are
/// truncated at `steps`.
pub fn simulate(
    m: &Mdp,
    policy: &JointPolicy,
    cfg: &SolveConfig,
    start: &[f64],
    seed: u64,
    episodes: usize,
    steps: usize,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    policy.validate(m, cfg.t_max)?;
    let n = m.num_states();
    if start.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: start.len() });
    }
    if episodes == 0 || steps == 0 {
        return Err(Error::Config("simulation needs at least one episode and one step".into()));
    }
    let start = sampler(start)?;
    let rows = (0..m.num_actions())
        .map(|a| (0..n).map(|s| sampler(m.row(a, s))).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let tallies: Vec<EpisodeTally> = (0..episodes)
        .into_par_iter()
        .map(|ep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ep as u64);
            run_episode(m, policy, cfg.t_max, &start, &rows, &mut rng, steps)
        })
        .collect();

    let returns: Vec<f64> = tallies.iter().map(|t| t.discounted_reward - cfg.beta * t.discounted_cost).collect();
    let mean = returns.iter().sum::<f64>() / episodes as f64;
    let se = if episodes > 1 {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (episodes - 1) as f64;
        (var / episodes as f64).sqrt()
    } else {
        0.0
    };
    let total_steps = episodes * steps;
    let mut overall = vec![0.0; cfg.t_max + 1];
    let mut per_state = vec![vec![0.0; cfg.t_max + 1]; n];
    let mut starts = vec![0.0; n];
    for &(s, len) in tallies.iter().flat_map(|t| &t.intervals) {
        overall[len] += 1.0;
        per_state[s][len] += 1.0;
        starts[s] += 1.0;
    }
    let start_total: f64 = starts.iter().sum();
    if start_total > 0.0 {
        starts.iter_mut().for_each(|x| *x /= start_total);
    }

    Ok(EvaluationReport {
        discounted_return: mean,
        discounted_reward: tallies.iter().map(|t| t.discounted_reward).sum::<f64>() / episodes as f64,
        discounted_comm_cost: tallies.iter().map(|t| t.discounted_cost).sum::<f64>() / episodes as f64,
        per_step_avg_reward: tallies.iter().map(|t| t.reward).sum::<f64>() / total_steps as f64,
        update_frequency: tallies.iter().map(|t| t.updates).sum::<usize>() as f64 / total_steps as f64,
        peak_aoi_pmf_overall: normalize_pmf(overall.into_iter().enumerate()),
        peak_aoi_pmf_per_state: per_state.into_iter().map(|c| normalize_pmf(c.into_iter().enumerate())).collect(),
        interval_start_distribution: starts,
        discounted_return_se: se,
        episodes,
        steps: total_steps,
    })
}

/// Performance vector compared elementwise, larger is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricsTuple(pub Vec<f64>);

impl MetricsTuple {
    /// `(discounted reward, -discounted communication cost)` for each report in order.
    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a EvaluationReport>) -> Self {
        Self(reports.into_iter().flat_map(|r| [r.discounted_reward, -r.discounted_comm_cost]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    /// `a ≥ b` in every coordinate.
    pub dominates: bool,
    /// `dominates` with at least one strict inequality.
    pub strictly: bool,
    /// Neither tuple dominates the other.
    pub incomparable: bool,
}

pub fn pareto_dominates(a: &MetricsTuple, b: &MetricsTuple) -> Result<Dominance> {
    if a.0.len() != b.0.len() {
        return Err(Error::DimensionMismatch { expected: a.0.len(), actual: b.0.len() });
    }
    let ge = a.0.iter().zip(&b.0).all(|(x, y)| x >= y);
    let le = a.0.iter().zip(&b.0).all(|(x, y)| x <= y);
    let strict = a.0.iter().zip(&b.0).any(|(x, y)| x > y);
    Ok(Dominance { dominates: ge, strictly: ge && strict, incomparable: !ge && !le })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{evaluate_joint_policy_exact, uniform_start, StartConvention};
    use crate::policy::{ControlMap, PullPolicy, PushPolicy, TransmitMap};

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
    fn pareto_cases() {
        let t = |v: &[f64]| MetricsTuple(v.to_vec());
        let eq = pareto_dominates(&t(&[2.0, 3.0]), &t(&[2.0, 3.0])).unwrap();
        assert!(eq.dominates && !eq.strictly && !eq.incomparable);
        let st = pareto_dominates(&t(&[2.0, 3.0]), &t(&[1.0, 3.0])).unwrap();
        assert!(st.dominates && st.strictly);
        let inc = pareto_dominates(&t(&[2.0, 1.0]), &t(&[1.0, 2.0])).unwrap();
        assert!(inc.incomparable && !inc.dominates);
        assert!(pareto_dominates(&t(&[1.0]), &t(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn always_transmit_has_unit_peak_aoi() {
        let m = small();
        let cfg = SolveConfig::default().with_t_max(4);
        let policy = JointPolicy::Push(PushPolicy {
            control: ControlMap::constant(3, 4, 0),
            transmit: TransmitMap::always(3, 4),
        });
        let rep = simulate(&m, &policy, &cfg, &uniform_start(3), 1, 20, 200).unwrap();
        assert_eq!(rep.peak_aoi_pmf_overall.len(), 1);
        assert_eq!(rep.peak_aoi_pmf_overall.get(&1), Some(&1.0));
        assert_eq!(rep.update_frequency, 1.0);
    }

    #[test]
    fn simulation_is_reproducible_and_matches_exact() {
        let m = small();
        let cfg = SolveConfig::default().with_t_max(4).with_beta(0.3);
        let policy = JointPolicy::Pull(PullPolicy {
            control: ControlMap(vec![vec![0, 1, 0, 1, 1], vec![1; 5], vec![0, 0, 1, 1, 0]]),
            periods: vec![2, 1, 3],
        });
        let start = uniform_start(3);
        let a = simulate(&m, &policy, &cfg, &start, 5, 4000, 400).unwrap();
        let b = simulate(&m, &policy, &cfg, &start, 5, 4000, 400).unwrap();
        assert_eq!(a, b);
        let exact = evaluate_joint_policy_exact(&m, &policy, &cfg, &start, StartConvention::EpisodeStart).unwrap();
        assert!((a.discounted_return - exact.discounted_return).abs() < 3.0 * a.discounted_return_se);
        for (s, pmf) in a.peak_aoi_pmf_per_state.iter().enumerate() {
            assert_eq!(pmf.keys().copied().collect::<Vec<_>>(), vec![policy_period(&policy, s)]);
        }
    }

    fn policy_period(p: &JointPolicy, s: usize) -> usize {
        match p {
            JointPolicy::Pull(p) => p.periods[s],
            _ => unreachable!(),
        }
    }
}
