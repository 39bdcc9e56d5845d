use cis_marl::dual::{run_dual_iteration, DualIterationConfig};
use cis_marl::envs::{build_random_game, SplitMix64};
use cis_marl::oracles::{
    best_response_safety, certify_nash_safety, iterate_operator, joint_safety_optimum,
};
use cis_marl::safety::{run_safety_iteration, SafetyIterationConfig};
use cis_marl::{
    evaluate_policy, exact_reward_value, exact_safety_value, rollout, AgentOrder, Game,
    JointPolicy, ValueKind,
};
use proptest::prelude::*;

fn random_policy(game: &Game, seed: u64) -> JointPolicy {
    let mut rng = SplitMix64::new(seed);
    let joint: Vec<usize> = (0..game.n_states)
        .map(|_| rng.below(game.n_joint_actions()))
        .collect();
    JointPolicy::from_joint_indices(game, &joint)
}

fn game_strategy() -> impl Strategy<Value = Game> {
    (
        any::<u64>(),
        1usize..10,
        prop::collection::vec(1usize..4, 1..4),
        prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]),
    )
        .prop_map(|(seed, n, actions, hazard)| build_random_game(seed, n, &actions, hazard))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_are_bounded(game in game_strategy(), seed in any::<u64>()) {
        let p = random_policy(&game, seed);
        let v = evaluate_policy(&game, &p, ValueKind::Reward);
        let vh = evaluate_policy(&game, &p, ValueKind::Safety);
        let r_bound = game.max_abs_reward() / (1.0 - game.gamma) + 1e-12;
        let h_bound = game.gamma_h * game.max_abs_h() + 1e-12;
        for x in 0..game.n_states {
            prop_assert!(v[x].abs() <= r_bound);
            prop_assert!(vh[x].abs() <= h_bound);
            prop_assert!(vh[x] <= 0.0);
        }
    }

    #[test]
    fn table_matches_per_state_evaluation_bit_for_bit(game in game_strategy(), seed in any::<u64>()) {
        let p = random_policy(&game, seed);
        let v = evaluate_policy(&game, &p, ValueKind::Reward);
        let vh = evaluate_policy(&game, &p, ValueKind::Safety);
        for x in 0..game.n_states {
            prop_assert_eq!(v[x].to_bits(), exact_reward_value(&game, &p, x).to_bits());
            prop_assert_eq!(vh[x].to_bits(), exact_safety_value(&game, &p, x).to_bits());
        }
    }

    #[test]
    fn cis_lies_inside_the_constraint_set(game in game_strategy(), seed in any::<u64>()) {
        let p = random_policy(&game, seed);
        let cis = evaluate_policy(&game, &p, ValueKind::Safety).superlevel_set();
        prop_assert!(cis.is_subset(&game.constraint_set()));
        // Forward invariance under the policy that defines it.
        for x in cis.iter() {
            prop_assert!(cis.contains(p.successor(&game, x)));
        }
    }

    #[test]
    fn safety_iteration_never_beats_the_joint_optimum(game in game_strategy(), seed in any::<u64>()) {
        let r = run_safety_iteration(&game, &random_policy(&game, seed), &SafetyIterationConfig {
            seed,
            ..Default::default()
        });
        prop_assert!(r.converged);
        let opt = joint_safety_optimum(&game).unwrap();
        for x in 0..game.n_states {
            prop_assert!(r.vh[x] <= opt.values[x] + 1e-9);
        }
        prop_assert!(r.cis.is_subset(&opt.cis()));
        prop_assert!(certify_nash_safety(&game, &r.policy, &r.vh, 1e-9).passed);
    }

    #[test]
    fn dual_task_policy_is_safe_on_its_cis(game in game_strategy(), seed in any::<u64>()) {
        let r = run_dual_iteration(&game, &JointPolicy::zeros(&game), &DualIterationConfig {
            seed,
            ..Default::default()
        });
        prop_assert!(r.converged);
        prop_assert_eq!(r.total_fallbacks(), 0);
        for x in r.cis.iter() {
            let path = rollout(&game, &r.task_policy, x);
            prop_assert!(path.min_h >= 0.0);
            prop_assert!(path.visited().all(|y| r.cis.contains(y)));
        }
        for w in r.cis_history.windows(2) {
            prop_assert!(w[0].is_subset(&w[1]));
        }
    }

    #[test]
    fn agent_order_does_not_break_guarantees(game in game_strategy(), seed in any::<u64>()) {
        for agent_order in [AgentOrder::Fixed, AgentOrder::SeededShuffle] {
            let r = run_safety_iteration(&game, &JointPolicy::zeros(&game), &SafetyIterationConfig {
                agent_order,
                seed,
                ..Default::default()
            });
            prop_assert!(r.trace.iter().all(|row| row.min_change >= -1e-12));
        }
    }
}

/// With one agent a unilateral best response is the joint optimum, so the
/// Nash point safety iteration reaches must be globally optimal.
#[test]
fn single_agent_reaches_the_optimum() {
    for seed in 0..100u64 {
        let game = build_random_game(
            seed,
            2 + (seed as usize % 11),
            &[1 + (seed as usize % 3)],
            0.5,
        );
        let r = run_safety_iteration(
            &game,
            &JointPolicy::zeros(&game),
            &SafetyIterationConfig::default(),
        );
        let opt = joint_safety_optimum(&game).unwrap();
        let br = best_response_safety(&game, &r.policy, 0);
        assert!(r.vh.sup_distance(&opt.values) < 1e-9, "seed {seed}");
        assert!(br.sup_distance(&opt.values) < 1e-9, "seed {seed}");
        assert_eq!(r.cis, opt.cis(), "seed {seed}");
    }
}

/// After k sweeps from zero the step size is at most
/// `gamma^k * step_1 / (1 - gamma)`.
#[test]
fn operator_residuals_decay_geometrically() {
    for seed in 0..20u64 {
        let game = build_random_game(seed, 12, &[2, 2], 0.5);
        let p = random_policy(&game, seed);
        for (kind, gamma) in [
            (ValueKind::Reward, game.gamma),
            (ValueKind::Safety, game.gamma_h),
        ] {
            let (_, residuals) = iterate_operator(&game, &p, kind, 200);
            let first = residuals[0];
            for (k, r) in residuals.iter().enumerate() {
                let bound = gamma.powi(k as i32) * first / (1.0 - gamma);
                assert!(
                    *r <= bound + 1e-15,
                    "seed {seed} {kind:?} sweep {k}: {r} > {bound}"
                );
            }
        }
    }
}
