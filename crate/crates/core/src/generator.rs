//! Random test-suite construction: deterministic base dynamics smoothed to a
//! target density, paired with exponential reward kernels around a target state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;

/// Named reward kernel `exp(-alpha |s' - s0|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub name: String,
    pub alpha: f64,
}

impl RewardConfig {
    pub fn focused() -> Self {
        Self { name: "focused".into(), alpha: 10.0 }
    }

    pub fn spread() -> Self {
        Self { name: "spread".into(), alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub num_states: usize,
    pub num_actions: usize,
    /// Defaults to `num_states / 2`.
    pub target_state: Option<usize>,
    pub reward_configs: Vec<RewardConfig>,
    pub densities: Vec<f64>,
    pub seed: u64,
    pub gamma: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self::with_half_widths(30, 4, 0..15)
    }
}

impl GeneratorSpec {
    /// Densities `(2w + 1) / num_states` for the given window half-widths `w`.
    pub fn with_half_widths(num_states: usize, num_actions: usize, widths: impl IntoIterator<Item = usize>) -> Self {
        Self {
            num_states,
            num_actions,
            target_state: None,
            reward_configs: vec![RewardConfig::focused(), RewardConfig::spread()],
            densities: widths.into_iter().map(|w| (2 * w + 1) as f64 / num_states as f64).collect(),
            seed: 0,
            gamma: 0.95,
        }
    }

    /// Small suite: 10 states, 4 actions, densities 0.1 to 0.9.
    pub fn desk_scale() -> Self {
        Self::with_half_widths(10, 4, 0..5)
    }

    pub fn target(&self) -> usize {
        self.target_state.unwrap_or(self.num_states / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_states == 0 || self.num_actions == 0 {
            return bad("num_states and num_actions must be positive".into());
        }
        if self.target() >= self.num_states {
            return bad(format!("target_state {} outside the state space", self.target()));
        }
        if self.reward_configs.is_empty() {
            return bad("reward_configs is empty".into());
        }
        if let Some(rc) = self.reward_configs.iter().find(|rc| !(rc.alpha > 0.0)) {
            return bad(format!("reward config {} has non-positive alpha {}", rc.name, rc.alpha));
        }
        if self.densities.is_empty() {
            return bad("densities is empty".into());
        }
        let lo = 1.0 / self.num_states as f64;
        if let Some(d) = self.densities.iter().find(|&&d| !(d >= lo - 1e-12 && d <= 1.0)) {
            return bad(format!("density {d} outside [{lo}, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        Ok(())
    }
}

/// `r[a][s][s'] = exp(-alpha |s' - target|)`.
pub fn make_reward_kernel(num_states: usize, num_actions: usize, alpha: f64, target: usize) -> Vec<Vec<Vec<f64>>> {
    let row: Vec<f64> = (0..num_states).map(|s| (-alpha * s.abs_diff(target) as f64).exp()).collect();
    vec![vec![row; num_states]; num_actions]
}

/// One uniformly drawn successor per `(action, state)`, as a 0/1 tensor.
pub fn make_base_deterministic(num_states: usize, num_actions: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_actions)
        .map(|_| {
            (0..num_states)
                .map(|_| {
                    let mut row = vec![0.0; num_states];
                    row[rng.gen_range(0..num_states)] = 1.0;
                    row
                })
                .collect()
        })
        .collect()
}

/// Spreads every row of a deterministic tensor over a triangular window of
/// width `d * |S|` around its successor, clipped to the state range and
/// renormalized.
pub fn densify(base: &[Vec<Vec<f64>>], density: f64) -> Vec<Vec<Vec<f64>>> {
    base.iter()
        .map(|matrix| {
            let n = matrix.len();
            let mut m = density * n as f64;
            if (m - m.round()).abs() < 1e-9 {
                m = m.round();
            }
            let norm = 4.0 / ((m + 1.0) * (m + 1.0));
            matrix
                .iter()
                .map(|row| {
                    let centre = row.iter().position(|&p| p > 0.0).unwrap_or(0);
                    let mut out: Vec<f64> = (0..n)
                        .map(|j| {
                            let dist = j.abs_diff(centre) as f64;
                            if dist < m / 2.0 {
                                norm * (m - 2.0 * dist)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let total: f64 = out.iter().sum();
                    out.iter_mut().for_each(|p| *p /= total);
                    out
                })
                .collect()
        })
        .collect()
}

/// Fraction of nonzero transition entries.
pub fn measured_density(m: &Mdp) -> f64 {
    let n = m.num_states();
    let nonzero: usize = (0..m.num_actions())
        .flat_map(|a| (0..n).map(move |s| (a, s)))
        .map(|(a, s)| m.row(a, s).iter().filter(|&&p| p > 0.0).count())
        .sum();
    nonzero as f64 / (m.num_actions() * n * n) as f64
}

/// Dense random MDP with rewards in `[0, 1)`, for tests and oracles.
pub fn random_mdp(num_states: usize, num_actions: usize, gamma: f64, seed: u64) -> Result<Mdp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = vec![vec![vec![0.0; num_states]; num_states]; num_actions];
    let mut rewards = transitions.clone();
    for a in 0..num_actions {
        for s in 0..num_states {
            let row = &mut transitions[a][s];
            for p in row.iter_mut() {
                // Roughly a third of the entries stay zero.
                *p = if rng.gen_bool(0.35) { 0.0 } else { rng.gen::<f64>() };
            }
            row[rng.gen_range(0..num_states)] += 0.5;
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            rewards[a][s].iter_mut().for_each(|r| *r = rng.gen());
        }
    }
    Mdp::new(gamma, transitions, rewards)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteInstance {
    pub id: String,
    pub reward_config: String,
    pub alpha: f64,
    pub density: f64,
    pub measured_density: f64,
    pub mdp: Mdp,
}

/// Every density crossed with every reward config, all sharing one base tensor.
/// Ordered by reward config, then density.
pub fn generate_suite(spec: &GeneratorSpec) -> Result<Vec<SuiteInstance>> {
    spec.validate()?;
    let (n, a) = (spec.num_states, spec.num_actions);
    let base = make_base_deterministic(n, a, spec.seed);
    let mut out = Vec::new();
    for rc in &spec.reward_configs {
        let rewards = make_reward_kernel(n, a, rc.alpha, spec.target());
        for (i, &d) in spec.densities.iter().enumerate() {
            let mdp = Mdp::new(spec.gamma, densify(&base, d), rewards.clone())?;
            out.push(SuiteInstance {
                id: format!("{}-d{i:02}", rc.name),
                reward_config: rc.name.clone(),
                alpha: rc.alpha,
                density: d,
                measured_density: measured_density(&mdp),
                mdp,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    pub reward_config: String,
    pub alpha: f64,
    pub density: f64,
    pub measured_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub num_states: usize,
    pub num_actions: usize,
    pub target_state: usize,
    pub gamma: f64,
    pub instances: Vec<ManifestEntry>,
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub fn manifest(spec: &GeneratorSpec, suite: &[SuiteInstance]) -> SuiteManifest {
    SuiteManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        seed: spec.seed,
        num_states: spec.num_states,
        num_actions: spec.num_actions,
        target_state: spec.target(),
        gamma: spec.gamma,
        instances: suite
            .iter()
            .map(|inst| ManifestEntry {
                id: inst.id.clone(),
                file: format!("{}.json", inst.id),
                reward_config: inst.reward_config.clone(),
                alpha: inst.alpha,
                density: inst.density,
                measured_density: inst.measured_density,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_kernel_values() {
        let r = make_reward_kernel(30, 2, 10.0, 15);
        assert_eq!(r[1][3][15], 1.0);
        assert!((r[0][0][16] - (-10.0f64).exp()).abs() < 1e-18);
        let r = make_reward_kernel(30, 2, 0.01, 15);
        assert!((r[0][7][25] - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn base_is_seeded_and_deterministic() {
        let a = make_base_deterministic(30, 4, 7);
        assert_eq!(a, make_base_deterministic(30, 4, 7));
        assert_ne!(a, make_base_deterministic(30, 4, 8));
        for row in a.iter().flatten() {
            assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 1);
        }
    }

    #[test]
    fn width_three_interior_row() {
        let mut base = vec![vec![vec![0.0; 10]; 10]];
        base[0][0][5] = 1.0;
        let out = densify(&base, 0.3);
        let expected = [0.2, 0.6, 0.2];
        for (j, e) in (4..=6).zip(expected) {
            assert!((out[0][0][j] - e).abs() < 1e-15);
        }
        assert_eq!(out[0][0].iter().filter(|&&p| p > 0.0).count(), 3);
    }

    #[test]
    fn minimal_density_is_identity_map() {
        let base = make_base_deterministic(10, 3, 1);
        assert_eq!(densify(&base, 0.1), base);
    }

    #[test]
    fn default_suite_shape() {
        let spec = GeneratorSpec::default();
        let suite = generate_suite(&spec).unwrap();
        assert_eq!(suite.len(), 30);
        assert!((suite[0].measured_density - 1.0 / 30.0).abs() < 1e-15);
        for pair in suite[..15].windows(2) {
            assert!(pair[1].measured_density > pair[0].measured_density);
        }
    }

    #[test]
    fn invalid_density_is_rejected() {
        let mut spec = GeneratorSpec::desk_scale();
        spec.densities = vec![0.05];
        assert!(spec.validate().is_err());
    }
}
