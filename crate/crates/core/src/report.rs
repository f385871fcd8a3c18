use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Peak-AoI probability mass function keyed by interval length (≥ 1).
pub type Pmf = BTreeMap<usize, f64>;

/// Performance of a joint policy, from exact evaluation or simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `discounted_reward - beta * discounted_comm_cost` under the chosen start convention.
    pub discounted_return: f64,
    pub discounted_reward: f64,
    /// Expected discounted number of updates (without the `beta` factor).
    pub discounted_comm_cost: f64,
    pub per_step_avg_reward: f64,
    /// Long-run fraction of steps followed by an update.
    pub update_frequency: f64,
    pub peak_aoi_pmf_overall: Pmf,
    /// Indexed by the last observed state when the interval began.
    pub peak_aoi_pmf_per_state: Vec<Pmf>,
    /// Long-run fraction of intervals starting in each state.
    pub interval_start_distribution: Vec<f64>,
    /// Standard error of `discounted_return`; zero for exact evaluation.
    pub discounted_return_se: f64,
    pub episodes: usize,
    pub steps: usize,
}

impl EvaluationReport {
    pub fn peak_aoi_mean(&self) -> f64 {
        pmf_mean(&self.peak_aoi_pmf_overall)
    }

    pub fn peak_aoi_variance(&self) -> f64 {
        pmf_variance(&self.peak_aoi_pmf_overall)
    }
}

pub fn pmf_mean(pmf: &Pmf) -> f64 {
    pmf.iter().map(|(&k, &p)| k as f64 * p).sum()
}

pub fn pmf_variance(pmf: &Pmf) -> f64 {
    let mean = pmf_mean(pmf);
    pmf.iter().map(|(&k, &p)| p * (k as f64 - mean).powi(2)).sum()
}

/// Number of lengths with probability above `threshold`.
pub fn pmf_atoms(pmf: &Pmf, threshold: f64) -> usize {
    pmf.values().filter(|&&p| p > threshold).count()
}

/// Normalizes raw counts or masses into a PMF, dropping zero entries.
pub fn normalize_pmf<I: IntoIterator<Item = (usize, f64)>>(raw: I) -> Pmf {
    let entries: Vec<(usize, f64)> = raw.into_iter().filter(|&(_, w)| w > 0.0).collect();
    let total: f64 = entries.iter().map(|&(_, w)| w).sum();
    let mut pmf = Pmf::new();
    if total > 0.0 {
        for (k, w) in entries {
            *pmf.entry(k).or_insert(0.0) += w / total;
        }
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_moments() {
        let pmf = normalize_pmf([(1, 1.0), (3, 1.0), (2, 0.0)]);
        assert_eq!(pmf.len(), 2);
        assert!((pmf_mean(&pmf) - 2.0).abs() < 1e-15);
        assert!((pmf_variance(&pmf) - 1.0).abs() < 1e-15);
        assert_eq!(pmf_atoms(&pmf, 1e-12), 2);
    }
}
