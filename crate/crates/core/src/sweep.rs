//! Grid runs over (instance, method, β) with exact evaluation of every cell.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::solve_aoi_periodic;
use crate::config::SolveConfig;
use crate::error::{Error, Result};
use crate::exact::{evaluate_joint_policy_exact, uniform_start, StartConvention};
use crate::generator::SuiteInstance;
use crate::mdp::Mdp;
use crate::policy::JointPolicy;
use crate::report::EvaluationReport;
use crate::pull::solve_pull;
use crate::push::{is_mutual_best_response, solve_push_api, PushInit, PushOptions};

pub const SWEEP_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pull,
    PushAlways,
    PushNever,
    Aoi,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pull, Method::PushAlways, Method::PushNever, Method::Aoi];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pull => "pull",
            Method::PushAlways => "push-always",
            Method::PushNever => "push-never",
            Method::Aoi => "aoi",
        }
    }

    fn init(self) -> &'static str {
        match self {
            Method::PushAlways => "always",
            Method::PushNever => "never",
            _ => "",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}; expected one of pull, push-always, push-never, aoi")))
    }
}

/// Grid and solver settings of a sweep. Instances are supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub methods: Vec<Method>,
    /// Overrides the discount stored in each instance when set.
    pub gamma: Option<f64>,
    pub t_max: usize,
    /// Worker threads; 0 lets the pool pick.
    pub jobs: usize,
    /// Record per-cell wall time; otherwise the column reads `NA`.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            betas: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            methods: Method::ALL.to_vec(),
            gamma: None,
            t_max: 12,
            jobs: 1,
            timing: false,
        }
    }
}

impl SweepConfig {
    /// β grid `0, 0.1, ..., 2`.
    pub fn fine_betas() -> Vec<f64> {
        (0..=20).map(|i| i as f64 / 10.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::Config("beta grid is empty".into()));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(Error::Config(format!("beta {b} is not a finite nonnegative number")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Config(format!("gamma must lie in (0, 1), got {g}")));
            }
        }
        self.solve_config(0.0).validate()
    }

    pub fn solve_config(&self, beta: f64) -> SolveConfig {
        SolveConfig::default().with_t_max(self.t_max).with_horizon_cap(self.t_max).with_beta(beta)
    }
}

/// One CSV row. Metric fields are empty when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub instance: String,
    pub reward_config: String,
    pub density: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t_max: usize,
    pub method: Method,
    pub init: String,
    pub discounted_return: Option<f64>,
    pub per_step_avg_reward: Option<f64>,
    pub update_frequency: Option<f64>,
    pub discounted_comm_cost: Option<f64>,
    pub rounds: Option<usize>,
    /// Push only: objective never decreased between rounds.
    pub monotone: Option<bool>,
    /// Push only: the converged pair is a mutual best response.
    pub equilibrium: Option<bool>,
    pub wall_time: String,
    pub error: String,
}

/// A solved cell: the policy, its exact evaluation from a uniform informed
/// start, and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub policy: JointPolicy,
    pub report: EvaluationReport,
    pub rounds: Option<usize>,
    /// Push only: objective never decreased between rounds.
    pub monotone: Option<bool>,
    /// Push only: the converged pair is a mutual best response.
    pub equilibrium: Option<bool>,
}

pub fn solve_method(mdp: &Mdp, method: Method, cfg: &SolveConfig) -> Result<MethodResult> {
    let start = uniform_start(mdp.num_states());
    let eval = |p: &JointPolicy| evaluate_joint_policy_exact(mdp, p, cfg, &start, StartConvention::EpisodeStart);
    let (policy, rounds, monotone, equilibrium) = match method {
        Method::Pull => {
            let sol = solve_pull(mdp, cfg)?;
            (JointPolicy::Pull(sol.policy), Some(sol.rounds), None, None)
        }
        Method::PushAlways | Method::PushNever => {
            let init = if method == Method::PushAlways { PushInit::Always } else { PushInit::Never };
            let sol = solve_push_api(mdp, cfg, &init)?;
            let equilibrium = is_mutual_best_response(mdp, &sol.policy, cfg, &PushOptions::default())?;
            (JointPolicy::Push(sol.policy.clone()), Some(sol.rounds), Some(sol.is_monotone(1e-9)), Some(equilibrium))
        }
        Method::Aoi => (JointPolicy::Periodic(solve_aoi_periodic(mdp, cfg)?.policy), None, None, None),
    };
    Ok(MethodResult { report: eval(&policy)?, policy, rounds, monotone, equilibrium })
}

/// Runs every (instance, method, β) cell and returns rows sorted by
/// instance, method and β. Output is independent of `jobs`.
pub fn run_sweep(instances: &[SuiteInstance], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mdps = instances
        .iter()
        .map(|inst| match cfg.gamma {
            Some(g) => inst.mdp.with_gamma(g),
            None => Ok(inst.mdp.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, Method, f64)> = (0..instances.len())
        .flat_map(|i| cfg.methods.iter().flat_map(move |&m| cfg.betas.iter().map(move |&b| (i, m, b))))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, method, beta)| {
                let (inst, mdp) = (&instances[i], &mdps[i]);
                let solve_cfg = cfg.solve_config(beta);
                let clock = Instant::now();
                let outcome = solve_method(mdp, method, &solve_cfg);
                let elapsed = clock.elapsed().as_secs_f64();
                log::debug!("{} {} beta={beta}: {:.3}s", inst.id, method, elapsed);
                let mut row = SweepRow {
                    schema_version: SWEEP_SCHEMA_VERSION,
                    instance: inst.id.clone(),
                    reward_config: inst.reward_config.clone(),
                    density: inst.density,
                    alpha: inst.alpha,
                    beta,
                    gamma: mdp.gamma(),
                    t_max: cfg.t_max,
                    method,
                    init: method.init().into(),
                    discounted_return: None,
                    per_step_avg_reward: None,
                    update_frequency: None,
                    discounted_comm_cost: None,
                    rounds: None,
                    monotone: None,
                    equilibrium: None,
                    wall_time: if cfg.timing { format!("{elapsed:.6}") } else { "NA".into() },
                    error: String::new(),
                };
                match outcome {
                    Ok(c) => {
                        row.discounted_return = Some(c.report.discounted_return);
                        row.per_step_avg_reward = Some(c.report.per_step_avg_reward);
                        row.update_frequency = Some(c.report.update_frequency);
                        row.discounted_comm_cost = Some(c.report.discounted_comm_cost);
                        row.rounds = c.rounds;
                        row.monotone = c.monotone;
                        row.equilibrium = c.equilibrium;
                    }
                    Err(e) => row.error = e.to_string(),
                }
                row
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        (&a.instance, a.method).cmp(&(&b.instance, b.method)).then(a.beta.total_cmp(&b.beta))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_suite, GeneratorSpec};

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("push".parse::<Method>().is_err());
    }

    #[test]
    fn config_rejects_bad_grids() {
        let mut cfg = SweepConfig::default();
        cfg.betas.clear();
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig { betas: vec![-1.0], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig { methods: vec![], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig { gamma: Some(1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn small_sweep_is_sorted_and_thread_independent() {
        let spec = GeneratorSpec::with_half_widths(5, 2, 0..2);
        let suite = generate_suite(&spec).unwrap();
        let cfg = SweepConfig { betas: vec![1.0, 0.0], t_max: 5, ..Default::default() };
        let one = run_sweep(&suite, &cfg).unwrap();
        let many = run_sweep(&suite, &SweepConfig { jobs: 3, ..cfg.clone() }).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.len(), suite.len() * 4 * 2);
        assert!(one.iter().all(|r| r.error.is_empty() && r.wall_time == "NA"));
        assert_eq!(one[0].beta, 0.0);
        assert_eq!(one[0].method, Method::Pull);
    }
}
