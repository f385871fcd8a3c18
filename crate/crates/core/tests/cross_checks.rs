//! Cross-checks between evaluators: push against pull, simulation against
//! exact evaluation. The belief and period-search oracles live in the
//! acceptance suite.

use pushpull::counterexample::{counterexample_mdp, odd_step_aoi_policy};
use pushpull::evaluation::simulate;
use pushpull::exact::{evaluate_joint_policy_exact, point_start, uniform_start, StartConvention};
use pushpull::generator::random_mdp;
use pushpull::{ControlMap, JointPolicy, PullPolicy, PushPolicy, SolveConfig, TransmitMap};

#[test]
fn push_that_never_transmits_equals_pull_pinned_at_the_cap() {
    for seed in 0..5 {
        let m = random_mdp(4, 3, 0.9, seed).unwrap();
        let t_max = 5;
        let cfg = SolveConfig::default().with_t_max(t_max).with_beta(0.7);
        let control = ControlMap(
            (0..4).map(|s| (0..=t_max).map(|k| (s + k + seed as usize) % 3).collect()).collect(),
        );
        let pull = JointPolicy::Pull(PullPolicy { control: control.clone(), periods: vec![t_max; 4] });
        let push = JointPolicy::Push(PushPolicy { control, transmit: TransmitMap::never(4, t_max) });
        for start in [uniform_start(4), point_start(4, 2)] {
            let a = evaluate_joint_policy_exact(&m, &pull, &cfg, &start, StartConvention::EpisodeStart).unwrap();
            let b = evaluate_joint_policy_exact(&m, &push, &cfg, &start, StartConvention::EpisodeStart).unwrap();
            assert!((a.discounted_return - b.discounted_return).abs() < 1e-12);
            assert!((a.update_frequency - b.update_frequency).abs() < 1e-12);
            assert_eq!(a.peak_aoi_pmf_overall.len(), b.peak_aoi_pmf_overall.len());
        }
    }
}

#[test]
fn odd_step_policy_simulation_agrees_with_exact_evaluation() {
    let m = counterexample_mdp(0.9).unwrap();
    let t_max = 20;
    let cfg = SolveConfig::default().with_t_max(t_max).with_beta(0.5);
    let policy = JointPolicy::Periodic(odd_step_aoi_policy(t_max).unwrap());
    let start = point_start(5, 0);
    let exact = evaluate_joint_policy_exact(&m, &policy, &cfg, &start, StartConvention::EpisodeStart).unwrap();
    let sim = simulate(&m, &policy, &cfg, &start, 11, 4000, 200).unwrap();
    let gap = (sim.discounted_return - exact.discounted_return).abs();
    assert!(gap < 3.0 * sim.discounted_return_se, "gap {gap} vs se {}", sim.discounted_return_se);
    // First update after one step, then every two.
    assert!((exact.update_frequency - 0.5).abs() < 1e-9);
    assert!((sim.update_frequency - 0.5).abs() < 1e-2);
}
