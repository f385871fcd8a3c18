use proptest::prelude::*;

use pushpull::baselines::stationary_distribution;
use pushpull::evaluation::{pareto_dominates, MetricsTuple};
use pushpull::exact::{evaluate_joint_policy_exact, uniform_start, StartConvention};
use pushpull::full_obs::solve_full_observability;
use pushpull::generator::{densify, make_base_deterministic, random_mdp};
use pushpull::pull::solve_pull;
use pushpull::push::{solve_push_api, PushInit};
use pushpull::{ControlMap, JointPolicy, Mdp, PullPolicy, SolveConfig};

fn pmf_total(p: &pushpull::report::Pmf) -> f64 {
    p.values().sum()
}

fn mdp_strategy() -> impl Strategy<Value = Mdp> {
    (2usize..5, 1usize..4, 0.5f64..0.95, any::<u64>())
        .prop_map(|(n, a, g, seed)| random_mdp(n, a, g, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mdp_json_round_trip_is_exact(m in mdp_strategy()) {
        let back = Mdp::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn reward_shift_shifts_values(m in mdp_strategy(), c in -2.0f64..2.0, beta in 0.0f64..2.0) {
        let cfg = SolveConfig::default().with_t_max(4).with_beta(beta);
        let shift = c / (1.0 - m.gamma());
        let base = solve_pull(&m, &cfg).unwrap().values.at_update();
        let moved = solve_pull(&m.shift_rewards(c), &cfg).unwrap().values.at_update();
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((y - x - shift).abs() < 1e-8, "{} vs {}", y - x, shift);
        }
        let fo = solve_full_observability(&m, &cfg).unwrap().values;
        let fo_moved = solve_full_observability(&m.shift_rewards(c), &cfg).unwrap().values;
        for (x, y) in fo.iter().zip(&fo_moved) {
            prop_assert!((y - x - shift).abs() < 1e-8);
        }
    }

    #[test]
    fn relabeling_actions_keeps_pull_values(m in mdp_strategy(), beta in 0.0f64..2.0) {
        let a = m.num_actions();
        let perm: Vec<usize> = (0..a).rev().collect();
        let cfg = SolveConfig::default().with_t_max(4).with_beta(beta);
        let base = solve_pull(&m, &cfg).unwrap();
        let relabeled = solve_pull(&m.permute_actions(&perm), &cfg).unwrap();
        for (x, y) in base.values.at_update().iter().zip(relabeled.values.at_update()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_reports_are_normalized(m in mdp_strategy(), seed in any::<u64>(), beta in 0.0f64..2.0) {
        let n = m.num_states();
        let t_max = 5;
        let control = ControlMap(
            (0..n).map(|s| (0..=t_max).map(|k| (seed as usize + s * 7 + k * 3) % m.num_actions()).collect()).collect(),
        );
        let periods = (0..n).map(|s| 1 + (seed as usize + s) % t_max).collect();
        let cfg = SolveConfig::default().with_t_max(t_max).with_beta(beta);
        for policy in [
            JointPolicy::Pull(PullPolicy { control, periods }),
            JointPolicy::Push(solve_push_api(&m, &cfg, &PushInit::Always).unwrap().policy),
        ] {
            let r = evaluate_joint_policy_exact(&m, &policy, &cfg, &uniform_start(n), StartConvention::EpisodeStart).unwrap();
            prop_assert!((pmf_total(&r.peak_aoi_pmf_overall) - 1.0).abs() < 1e-9);
            for pmf in &r.peak_aoi_pmf_per_state {
                prop_assert!(pmf.is_empty() || (pmf_total(pmf) - 1.0).abs() < 1e-9);
            }
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.update_frequency));
            prop_assert!(r.discounted_comm_cost >= 0.0);
            prop_assert!(r.peak_aoi_pmf_overall.keys().all(|&l| (1..=t_max).contains(&l)));
        }
    }

    #[test]
    fn stationary_distribution_is_fixed(m in mdp_strategy()) {
        let n = m.num_states();
        let chain: Vec<Vec<f64>> = (0..n).map(|s| m.row(0, s).to_vec()).collect();
        let phi = stationary_distribution(&chain, None, 1_000_000).unwrap();
        prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for j in 0..n {
            let next: f64 = (0..n).map(|i| phi[i] * chain[i][j]).sum();
            prop_assert!((next - phi[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn densified_rows_are_stochastic_and_peak_at_the_successor(n in 3usize..25, w in 0usize..6, seed in any::<u64>()) {
        let density = ((2 * w + 1) as f64 / n as f64).min(1.0);
        let base = make_base_deterministic(n, 2, seed);
        let dense = densify(&base, density);
        for (a, matrix) in dense.iter().enumerate() {
            for (s, row) in matrix.iter().enumerate() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let centre = base[a][s].iter().position(|&p| p > 0.0).unwrap();
                let peak = row[centre];
                prop_assert!(row.iter().all(|&p| p <= peak));
                // Weakly decreasing away from the successor on both sides.
                prop_assert!(row[centre..].windows(2).all(|x| x[1] <= x[0]));
                prop_assert!(row[..=centre].windows(2).all(|x| x[0] <= x[1]));
            }
        }
    }

    #[test]
    fn dominance_is_antisymmetric(a in prop::collection::vec(-3i32..3, 3), b in prop::collection::vec(-3i32..3, 3)) {
        let ta = MetricsTuple(a.iter().map(|&x| x as f64).collect());
        let tb = MetricsTuple(b.iter().map(|&x| x as f64).collect());
        let ab = pareto_dominates(&ta, &tb).unwrap();
        let ba = pareto_dominates(&tb, &ta).unwrap();
        prop_assert!(!(ab.strictly && ba.dominates));
        prop_assert_eq!(ab.incomparable, ba.incomparable);
        prop_assert_eq!(ab.dominates && ba.dominates, a == b);
    }
}
