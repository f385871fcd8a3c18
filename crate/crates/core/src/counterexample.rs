//! The five-state, two-action instance on which alternate policy iteration
//! can settle on an equilibrium worse than periodic updating, and the
//! verification battery built around it.
//!
//! Action `0` is `a1`, action `1` is `a2`. Under `a1` the states form the
//! cycle `0 → 1 → 2 → 3 → 0` with `4` absorbing; under `a2` state `0` jumps to
//! `1` or `4` with equal probability, `4` returns to `0`, and `1, 2, 3` stay
//! put. Every transition into state `0` pays 1.

use log::info;
use serde::{Deserialize, Serialize};

use crate::baselines::solve_aoi_periodic;
use crate::config::SolveConfig;
use crate::error::{Error, Result};
use crate::exact::{evaluate_joint_policy_exact, point_start, renewal_values, uniform_start, StartConvention};
use crate::full_obs::solve_full_observability;
use crate::generator::random_mdp;
use crate::mdp::Mdp;
use crate::policy::{ControlMap, JointPolicy, PeriodicPolicy, PeriodicSchedule, PushPolicy};
use crate::pull::solve_pull;
use crate::push::{exhaustive_push_optimum, is_mutual_best_response, reachable_entries, solve_push_api, PushInit, PushOptions};

pub const A1: usize = 0;
pub const A2: usize = 1;

/// Cap used when comparing with the closed forms; forced updates then cost
/// on the order of `γ^t_max`, far below the comparison tolerances.
pub const VERIFY_T_MAX: usize = 200;
/// Cap for the exhaustive push search.
pub const EXHAUSTIVE_T_MAX: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleInstance {
    pub mdp: Mdp,
    pub beta: f64,
}

pub fn counterexample_mdp(gamma: f64) -> Result<Mdp> {
    let p_a1 = vec![
        vec![0.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    let p_a2 = vec![
        vec![0.0, 0.5, 0.0, 0.0, 0.5],
        vec![0.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
    ];
    let rewards: Vec<Vec<Vec<f64>>> = [&p_a1, &p_a2]
        .iter()
        .map(|p| p.iter().map(|row| (0..5).map(|j| if j == 0 && row[0] > 0.0 { 1.0 } else { 0.0 }).collect()).collect())
        .collect();
    Mdp::new(gamma, vec![p_a1, p_a2], rewards)
}

pub fn build_counterexample(gamma: f64, beta: f64) -> Result<CounterexampleInstance> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!("gamma {gamma} outside (0, 1)")));
    }
    if !(beta >= 0.0) {
        return Err(Error::Config(format!("beta {beta} must be nonnegative")));
    }
    Ok(CounterexampleInstance { mdp: counterexample_mdp(gamma)?, beta })
}

/// Updates at every odd time: `a2` from 0, then `a1` around the long cycle
/// or `a2` back from 4.
pub fn odd_step_aoi_policy(t_max: usize) -> Result<PeriodicPolicy> {
    let mut control = ControlMap::constant(5, t_max, A1);
    control.0[0] = vec![A2; t_max + 1];
    control.0[3][1] = A2;
    control.0[4] = vec![A2; t_max + 1];
    Ok(PeriodicPolicy { schedule: PeriodicSchedule::new(2, 1)?, control })
}

/// Value measured on entering state 0, which includes that arrival's reward.
pub const ARRIVAL: StartConvention = StartConvention::OnArrival { entry_reward: 1.0 };

pub fn arrival_value(m: &Mdp, policy: &JointPolicy, cfg: &SolveConfig) -> Result<(f64, f64)> {
    let rep = evaluate_joint_policy_exact(m, policy, cfg, &point_start(5, 0), ARRIVAL)?;
    Ok((rep.discounted_return, rep.discounted_reward))
}

/// Closed forms from the recursions, re-derived.
pub mod closed_form {
    pub fn aoi(gamma: f64, beta: f64) -> f64 {
        let g2 = gamma * gamma;
        (2.0 - (2.0 * gamma + gamma * g2) * beta) / (2.0 - g2 - g2 * g2)
    }

    /// Same numerator over the denominator as typeset alongside the proof.
    pub fn aoi_as_printed(gamma: f64, beta: f64) -> f64 {
        let g2 = gamma * gamma;
        (2.0 - (2.0 * gamma + gamma * g2) * beta) / (2.0 * (1.0 - g2 - g2 * g2))
    }

    pub fn push_short_cycle(gamma: f64, beta: f64) -> f64 {
        let g2 = gamma * gamma;
        (2.0 - gamma * beta) / (2.0 - g2 - g2 * g2)
    }

    pub fn never(gamma: f64) -> f64 {
        1.0 / (1.0 - gamma.powi(4))
    }

    /// `β` at which [`aoi`] meets [`never`].
    pub fn threshold(gamma: f64) -> f64 {
        let g2 = gamma * gamma;
        gamma / ((1.0 + g2) * (2.0 + g2))
    }

    pub fn threshold_as_printed(gamma: f64) -> f64 {
        let g2 = gamma * gamma;
        2.0 / ((2.0 + g2) * (1.0 - g2 * g2))
    }
}

/// One named pass/fail assertion with a short explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRow {
    pub beta: f64,
    pub aoi: f64,
    pub push_always: f64,
    pub push_never: f64,
    pub aoi_closed_form: f64,
    pub aoi_closed_form_as_printed: f64,
    pub push_short_cycle_closed_form: f64,
    pub push_always_rounds: usize,
    pub push_never_rounds: usize,
    /// Voluntary transmissions `(last, elapsed, current)` reachable from state 0
    /// under the always-init equilibrium.
    pub push_always_transmissions: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveRow {
    pub beta: f64,
    pub ne_value: f64,
    pub global_value: f64,
    pub pull_value: f64,
    pub nodes: usize,
    pub global_policy: Option<PushPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub gamma: f64,
    pub t_max: usize,
    pub rows: Vec<BetaRow>,
    /// Crossover of never-communicate and odd-step updating, by bisection.
    pub threshold_empirical: f64,
    pub threshold_closed_form: f64,
    pub threshold_as_printed: f64,
    /// Whether each symbolic AoI value agrees with exact evaluation at every β.
    pub aoi_matches_closed_form: bool,
    pub aoi_matches_as_printed: bool,
    pub exhaustive: Vec<ExhaustiveRow>,
    pub checks: Vec<Check>,
}

impl Theorem3Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct ApiOutcome {
    policy: PushPolicy,
    value: f64,
    reward_part: f64,
    rounds: usize,
    monotone: bool,
    equilibrium: bool,
}

fn run_api(m: &Mdp, cfg: &SolveConfig, init: PushInit) -> Result<ApiOutcome> {
    let sol = solve_push_api(m, cfg, &init)?;
    let policy = JointPolicy::Push(sol.policy.clone());
    let (value, reward_part) = arrival_value(m, &policy, cfg)?;
    Ok(ApiOutcome {
        monotone: sol.is_monotone(1e-9),
        equilibrium: is_mutual_best_response(m, &sol.policy, cfg, &PushOptions::default())?,
        policy: sol.policy,
        value,
        reward_part,
        rounds: sol.rounds,
    })
}

fn never_minus_aoi(m: &Mdp, beta: f64) -> Result<f64> {
    let cfg = SolveConfig::default().with_t_max(VERIFY_T_MAX).with_beta(beta);
    let never = run_api(m, &cfg, PushInit::Never)?.value;
    let aoi = arrival_value(m, &JointPolicy::Periodic(odd_step_aoi_policy(VERIFY_T_MAX)?), &cfg)?.0;
    Ok(never - aoi)
}

/// Bisection on `β ∈ [lo, hi]` for the sign change of never minus odd-step
/// updating, to half-width `tol`.
pub fn locate_threshold(gamma: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let m = counterexample_mdp(gamma)?;
    if never_minus_aoi(&m, lo)? >= 0.0 || never_minus_aoi(&m, hi)? < 0.0 {
        return Err(Error::Config(format!("no sign change of never minus AoI on [{lo}, {hi}]")));
    }
    while hi - lo > 2.0 * tol {
        let mid = 0.5 * (lo + hi);
        if never_minus_aoi(&m, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Voluntary transmissions `(last, elapsed, current)` that occur with positive
/// probability from an informed start at state 0.
pub fn reachable_transmissions(m: &Mdp, policy: &PushPolicy, t_max: usize) -> Vec<(usize, usize, usize)> {
    let n = m.num_states();
    let visited = reachable_entries(m, &policy.control, &policy.transmit, &point_start(n, 0));
    let mut out = Vec::new();
    for s in 0..n {
        for k in 1..t_max {
            for c in 0..n {
                if visited[(s * (t_max + 1) + k) * n + c] && policy.transmit.get(s, k, c) {
                    out.push((s, k, c));
                }
            }
        }
    }
    out
}

/// Runs the counterexample battery at one discount over `beta_grid`, with
/// exhaustive searches at `exhaustive_betas`.
pub fn verify_theorem3(gamma: f64, beta_grid: &[f64], exhaustive_betas: &[f64]) -> Result<Theorem3Report> {
    if beta_grid.is_empty() {
        return Err(Error::Config("empty beta grid".into()));
    }
    let m = counterexample_mdp(gamma)?;
    let aoi_policy = JointPolicy::Periodic(odd_step_aoi_policy(VERIFY_T_MAX)?);
    let cap = gamma.powi(VERIFY_T_MAX as i32);
    let forced_cost = cap / (1.0 - cap);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();

    for &beta in beta_grid {
        let cfg = SolveConfig::default().with_t_max(VERIFY_T_MAX).with_beta(beta);
        let aoi = arrival_value(&m, &aoi_policy, &cfg)?.0;
        let always = run_api(&m, &cfg, PushInit::Always)?;
        let never = run_api(&m, &cfg, PushInit::Never)?;
        info!("counterexample gamma={gamma} beta={beta}: aoi={aoi} always={} never={}", always.value, never.value);
        rows.push(BetaRow {
            beta,
            aoi,
            push_always: always.value,
            push_never: never.value,
            aoi_closed_form: closed_form::aoi(gamma, beta),
            aoi_closed_form_as_printed: closed_form::aoi_as_printed(gamma, beta),
            push_short_cycle_closed_form: closed_form::push_short_cycle(gamma, beta),
            push_always_rounds: always.rounds,
            push_never_rounds: never.rounds,
            push_always_transmissions: reachable_transmissions(&m, &always.policy, VERIFY_T_MAX),
        });
        outcomes.push((always, never));
    }

    let grid = |f: &dyn Fn(&BetaRow, &ApiOutcome, &ApiOutcome) -> bool| -> Vec<f64> {
        rows.iter().zip(&outcomes).filter(|(r, (a, n))| !f(r, a, n)).map(|(r, _)| r.beta).collect()
    };
    let report_betas = |bad: Vec<f64>| if bad.is_empty() { "all beta".to_string() } else { format!("fails at beta {bad:?}") };

    let bad = grid(&|_, a, n| a.monotone && n.monotone && a.equilibrium && n.equilibrium);
    checks.push(Check::new("api monotone and mutual best response", bad.is_empty(), report_betas(bad)));
    let bad = grid(&|r, a, _| r.beta <= 0.0 || a.value > r.aoi);
    checks.push(Check::new("always-init beats odd-step AoI", bad.is_empty(), report_betas(bad)));
    let bad = grid(&|r, _, n| {
        n.policy.control.row(0)[..VERIFY_T_MAX].iter().all(|&a| a == A1)
            && reachable_transmissions(&m, &n.policy, VERIFY_T_MAX).is_empty()
            && (n.reward_part - closed_form::never(gamma)).abs() < 1e-9
            && (n.value - (closed_form::never(gamma) - r.beta * forced_cost)).abs() < 1e-9
    });
    checks.push(Check::new("never-init is silent with a1 and matches 1/(1-g^4)", bad.is_empty(), report_betas(bad)));

    let aoi_matches_closed_form = rows.iter().all(|r| (r.aoi - r.aoi_closed_form).abs() < 1e-9);
    let aoi_matches_as_printed = rows.iter().all(|r| (r.aoi - r.aoi_closed_form_as_printed).abs() < 1e-9);
    checks.push(Check::new(
        "odd-step AoI matches its recursion",
        aoi_matches_closed_form,
        format!("typeset denominator matches: {aoi_matches_as_printed}"),
    ));

    let threshold_closed_form = closed_form::threshold(gamma);
    let threshold_empirical = locate_threshold(gamma, 0.0, 5.0, 0.001)?;
    let bad: Vec<f64> = rows
        .iter()
        .filter(|r| {
            (r.beta < threshold_empirical - 0.01 && r.push_never >= r.aoi)
                || (r.beta > threshold_empirical + 0.01 && r.push_never < r.aoi)
        })
        .map(|r| r.beta)
        .collect();
    checks.push(Check::new(
        "never-init below AoI exactly under the threshold",
        bad.is_empty() && (threshold_empirical - threshold_closed_form).abs() <= 0.01,
        format!(
            "bisection {threshold_empirical:.4}, recursion {threshold_closed_form:.4}, typeset {:.4}; {}",
            closed_form::threshold_as_printed(gamma),
            report_betas(bad)
        ),
    ));

    let bad = grid(&|r, a, _| {
        r.beta <= 0.0 || (a.value - r.push_short_cycle_closed_form).abs() < 1e-8 * (1.0 + r.beta)
    });
    checks.push(Check::new("always-init reaches the short-cycle equilibrium", bad.is_empty(), report_betas(bad)));
    let bad = grid(&|r, _, _| r.beta <= 0.0 || r.push_always_transmissions.iter().all(|&(s, _, c)| s == 0 && c == 1));
    checks.push(Check::new("always-init transmits only on deviation to 1", bad.is_empty(), report_betas(bad)));

    // Zero and prohibitive cost.
    let cfg0 = SolveConfig::default().with_t_max(VERIFY_T_MAX);
    let fo = solve_full_observability(&m, &cfg0)?.values[0];
    let always0 = renewal_values(&m, &JointPolicy::Push(solve_push_api(&m, &cfg0, &PushInit::Always)?.policy), VERIFY_T_MAX)?
        .net(0.0)[0];
    let never0 = renewal_values(&m, &JointPolicy::Push(solve_push_api(&m, &cfg0, &PushInit::Never)?.policy), VERIFY_T_MAX)?
        .net(0.0)[0];
    checks.push(Check::new(
        "zero cost: always-init optimal, never-init worse",
        (always0 - fo).abs() < 1e-8 && never0 < fo - 1e-9,
        format!("full observability {fo:.9}, always {always0:.9}, never {never0:.9}"),
    ));
    let cfg5 = cfg0.with_beta(5.0);
    let never5 = run_api(&m, &cfg5, PushInit::Never)?.value;
    let aoi5 = arrival_value(&m, &aoi_policy, &cfg5)?.0;
    checks.push(Check::new("beta 5: never-init at least AoI", never5 >= aoi5, format!("never {never5:.6}, aoi {aoi5:.6}")));

    let mut exhaustive = Vec::new();
    for &beta in exhaustive_betas {
        exhaustive.push(exhaustive_check(&m, beta)?);
    }
    if !exhaustive.is_empty() {
        let bad: Vec<f64> = exhaustive.iter().filter(|e| e.global_value > e.ne_value + 1e-9).map(|e| e.beta).collect();
        checks.push(Check::new(
            format!("exhaustive search (t_max {EXHAUSTIVE_T_MAX}) finds nothing above the always-init NE"),
            bad.is_empty(),
            report_betas(bad),
        ));
        let bad: Vec<f64> = exhaustive.iter().filter(|e| e.ne_value < e.pull_value - 1e-9).map(|e| e.beta).collect();
        checks.push(Check::new("always-init NE at least the pull optimum", bad.is_empty(), report_betas(bad)));
        let bad: Vec<f64> = exhaustive.iter().filter(|e| e.global_value < e.pull_value - 1e-9).map(|e| e.beta).collect();
        checks.push(Check::new("global push optimum at least the pull optimum", bad.is_empty(), report_betas(bad)));
    }

    Ok(Theorem3Report {
        gamma,
        t_max: VERIFY_T_MAX,
        rows,
        threshold_empirical,
        threshold_closed_form,
        threshold_as_printed: closed_form::threshold_as_printed(gamma),
        aoi_matches_closed_form,
        aoi_matches_as_printed,
        exhaustive,
        checks,
    })
}

/// Global push optimum from an informed start at 0 with `t_max = 6`, compared
/// with the always-init equilibrium and the pull optimum at the same cap.
pub fn exhaustive_check(m: &Mdp, beta: f64) -> Result<ExhaustiveRow> {
    let cfg = SolveConfig::default().with_t_max(EXHAUSTIVE_T_MAX).with_beta(beta);
    let start = point_start(m.num_states(), 0);
    let ne = solve_push_api(m, &cfg, &PushInit::Always)?;
    let ne_value = renewal_values(m, &JointPolicy::Push(ne.policy), cfg.t_max)?.net(beta)[0];
    let pull_value = solve_pull(m, &cfg)?.values.0[0][0];
    let search = exhaustive_push_optimum(m, &cfg, &start, ne_value, 1_000_000)?;
    Ok(ExhaustiveRow {
        beta,
        ne_value,
        global_value: search.best_value,
        pull_value,
        nodes: search.nodes,
        global_policy: search.best_policy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub instance: String,
    pub beta: f64,
    pub pull: f64,
    pub aoi: f64,
    pub push_rounds: usize,
    pub push_monotone: bool,
    pub push_equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub gamma: f64,
    pub dominance: Vec<DominanceCheck>,
    pub theorem3: Theorem3Report,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let t3 = &self.theorem3;
        let mut out = String::new();
        let _ = writeln!(out, "gamma = {}", self.gamma);
        let _ = writeln!(out, "{:>6} {:>12} {:>12} {:>12} {:>12}", "beta", "aoi", "push-always", "push-never", "short-cycle");
        for r in &t3.rows {
            let _ = writeln!(
                out,
                "{:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                r.beta, r.aoi, r.push_always, r.push_never, r.push_short_cycle_closed_form
            );
        }
        let _ = writeln!(
            out,
            "threshold: bisection {:.4}, recursion {:.4}, typeset {:.4}",
            t3.threshold_empirical, t3.threshold_closed_form, t3.threshold_as_printed
        );
        for e in &t3.exhaustive {
            let _ = writeln!(
                out,
                "exhaustive t_max={EXHAUSTIVE_T_MAX} beta={}: NE {:.9} global {:.9} pull {:.9} ({} nodes)",
                e.beta, e.ne_value, e.global_value, e.pull_value, e.nodes
            );
        }
        for c in &self.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        out
    }
}

/// Default β grid `0.1, 0.2, ..., 2.0`.
pub fn default_beta_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

/// Dominance of pull over the best periodic schedule and convergence of
/// alternate policy iteration on the counterexample and a few seeded random
/// instances, followed by the counterexample battery.
pub fn verify_all(gamma: f64) -> Result<VerificationReport> {
    let mut instances = vec![("counterexample".to_string(), counterexample_mdp(gamma)?)];
    for seed in 0..3 {
        instances.push((format!("random-{seed}"), random_mdp(4, 2, gamma, seed)?));
    }
    let mut dominance = Vec::new();
    let mut zero_cost_bad = Vec::new();
    for (name, m) in &instances {
        let n = m.num_states();
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let cfg = SolveConfig::default().with_t_max(10).with_beta(beta);
            let pull = solve_pull(m, &cfg)?.values.at_update().iter().sum::<f64>() / n as f64;
            let aoi = solve_aoi_periodic(m, &cfg)?.objective;
            let push = solve_push_api(m, &cfg, &PushInit::Always)?;
            if beta == 0.0 {
                let fo = solve_full_observability(m, &cfg)?;
                let fo_mean = fo.values.iter().sum::<f64>() / n as f64;
                let rep = evaluate_joint_policy_exact(
                    m,
                    &JointPolicy::Push(push.policy.clone()),
                    &cfg,
                    &uniform_start(n),
                    StartConvention::EpisodeStart,
                )?;
                if (rep.discounted_return - fo_mean).abs() > 1e-8 || (pull - fo_mean).abs() > 1e-8 {
                    zero_cost_bad.push(name.clone());
                }
            }
            dominance.push(DominanceCheck {
                instance: name.clone(),
                beta,
                pull,
                aoi,
                push_rounds: push.rounds,
                push_monotone: push.is_monotone(1e-9),
                push_equilibrium: is_mutual_best_response(m, &push.policy, &cfg, &PushOptions::default())?,
            });
        }
    }
    let cells = |f: &dyn Fn(&DominanceCheck) -> bool| -> Vec<String> {
        dominance.iter().filter(|d| !f(d)).map(|d| format!("{} beta={}", d.instance, d.beta)).collect()
    };
    let summarize = |bad: Vec<String>| if bad.is_empty() { format!("{} cells", dominance.len()) } else { bad.join(", ") };
    let mut checks = Vec::new();
    let bad = cells(&|d| d.pull >= d.aoi - 1e-9);
    checks.push(Check::new("pull at least best periodic schedule", bad.is_empty(), summarize(bad)));
    let bad = cells(&|d| d.push_monotone && d.push_equilibrium);
    checks.push(Check::new("api monotone and converged to mutual best response", bad.is_empty(), summarize(bad)));
    checks.push(Check::new(
        "zero cost: pull and push equal full observability",
        zero_cost_bad.is_empty(),
        if zero_cost_bad.is_empty() { "all instances".into() } else { zero_cost_bad.join(", ") },
    ));
    let theorem3 = verify_theorem3(gamma, &default_beta_grid(), &[0.1, 0.5, 1.0, 2.0])?;
    checks.extend(theorem3.checks.iter().cloned());
    Ok(VerificationReport { gamma, dominance, theorem3, checks })
}
