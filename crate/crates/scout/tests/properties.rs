//! Randomized invariants: whatever the seed, planner, or budget, episodes
//! honor their movement contract and the math primitives stay in bounds.

use proptest::prelude::*;

use scout::adapt::{alpha_neg, TtaConfig};
use scout::bench::{
    paired_sign_test, rmse, run_episode, validate_trajectory, EpisodeConfig, StartSpec,
    WorldSource,
};
use scout::plan::PlannerSpec;
use scout::priors::{load_score_map, save_score_map, ScenarioParams, ScoreMap};
use scout::Error;

fn planner_strategy() -> impl Strategy<Value = PlannerSpec> {
    prop_oneof![
        Just(PlannerSpec::named("information-surfing")),
        Just(PlannerSpec::named("lawnmower")),
        Just(PlannerSpec::named("dijkstra-query")),
    ]
}

fn episode_config(
    n: usize,
    planner: PlannerSpec,
    budget: usize,
    tta: bool,
    seed: u64,
) -> EpisodeConfig {
    EpisodeConfig {
        world: WorldSource::Synth(ScenarioParams {
            n,
            num_regions: 2,
            targets_total: 3,
            target_region_bias: 0.8,
            corruption: scout::priors::Corruption::ModeSwap,
            seed: 0,
        }),
        planner,
        budget,
        start: StartSpec::Random,
        checkpoints: vec![0.0, 1.0],
        tta: tta.then(TtaConfig::default),
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every episode obeys its movement contract and reports consistent
    /// counters, for any planner, budget, seed, and arm.
    #[test]
    fn episode_contract_holds(
        seed in any::<u64>(),
        planner in planner_strategy(),
        budget in 1usize..=60,
        n in 6usize..=10,
        tta in any::<bool>(),
    ) {
        let cfg = episode_config(n, planner, budget, tta, seed);
        let (result, lambda) = match run_episode(&cfg) {
            Ok(pair) => pair,
            // a rare degenerate world (tiny true region) is a valid input
            // rejection, not a contract violation
            Err(Error::Infeasible(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("episode failed: {e}"))),
        };
        validate_trajectory(&result, n)
            .map_err(|e| TestCaseError::fail(format!("movement contract: {e}")))?;
        prop_assert!(result.steps_used <= result.budget);
        prop_assert!(result.targets_found <= result.targets_total);
        prop_assert!((0.0..=1.0).contains(&result.found_fraction));
        if let Some(t) = result.steps_to_first {
            prop_assert!(t <= result.steps_used);
            prop_assert_eq!(t == 0, result.first_target_at_start);
            prop_assert!(result.targets_found > 0);
        } else {
            prop_assert_eq!(result.targets_found, 0);
        }
        for cp in &result.rmse_at {
            prop_assert!((0.0..=1.0).contains(&cp.rmse), "rmse {} out of range", cp.rmse);
            prop_assert!(cp.step <= result.budget);
        }
        prop_assert_eq!(lambda.side(), n);
        if !tta {
            prop_assert!(result.tta_event_steps.is_empty());
        }
    }

    /// With the world pinned, a larger budget never finds fewer targets.
    #[test]
    fn lawnmower_found_count_is_monotone_in_budget(
        seed in any::<u64>(),
        b1 in 1usize..=40,
        extra in 0usize..=40,
    ) {
        let run = |budget| {
            let cfg = episode_config(8, PlannerSpec::named("lawnmower"), budget, false, seed);
            run_episode(&cfg).map(|(r, _)| r)
        };
        match (run(b1), run(b1 + extra)) {
            (Ok(small), Ok(large)) => {
                prop_assert_eq!(small.world_hash, large.world_hash, "same seed, same world");
                prop_assert!(small.targets_found <= large.targets_found);
            }
            (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => {}
            (a, b) => return Err(TestCaseError::fail(format!(
                "runs disagree: {:?} vs {:?}", a.map(|r| r.id), b.map(|r| r.id)
            ))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The negative-measurement weight is monotone in coverage and always
    /// lands in [0, 1], with the full-coverage value min(β, 1).
    #[test]
    fn alpha_neg_monotone_and_capped(
        l in 1usize..=64,
        o1 in 0usize..=64,
        o2 in 0usize..=64,
        beta in 0.0f64..4.0,
        gamma in 0.0f64..4.0,
    ) {
        let (o1, o2) = (o1.min(l).min(o2.min(l)), o2.min(l).max(o1.min(l)));
        let a1 = alpha_neg(o1, l, beta, gamma).unwrap();
        let a2 = alpha_neg(o2, l, beta, gamma).unwrap();
        prop_assert!((0.0..=1.0).contains(&a1));
        prop_assert!((0.0..=1.0).contains(&a2));
        prop_assert!(a1 <= a2, "coverage {o1}/{l} got {a1}, {o2}/{l} got {a2}");
        let full = alpha_neg(l, l, beta, gamma).unwrap();
        prop_assert_eq!(full, beta.min(1.0));
    }

    /// Map error is scale-free and bounded: always within [0, 1], exactly
    /// zero against itself.
    #[test]
    fn rmse_bounded_and_zero_on_self(
        vals_a in proptest::collection::vec(0.0f64..1.0, 16),
        vals_b in proptest::collection::vec(0.0f64..1.0, 16),
    ) {
        let a = ScoreMap::new(4, vals_a).unwrap();
        let b = ScoreMap::new(4, vals_b).unwrap();
        let e = rmse(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    }

    /// The paired sign test returns a probability; unanimous wins give
    /// exactly 0.5^m and unanimous losses give 1.
    #[test]
    fn sign_test_is_a_probability(diffs in proptest::collection::vec(-1.0f64..1.0, 0..40)) {
        let t = paired_sign_test(diffs.clone());
        prop_assert!(t.p_one_sided > 0.0 && t.p_one_sided <= 1.0);
        prop_assert_eq!(t.wins + t.losses + t.ties, diffs.len());

        let wins: Vec<f64> = diffs.iter().map(|d| d.abs() + 1.0).collect();
        let m = wins.len() as i32;
        let all_win = paired_sign_test(wins);
        prop_assert!((all_win.p_one_sided - 0.5f64.powi(m)).abs() < 1e-12);
    }

    /// Maps survive the CSV round trip bit for bit.
    #[test]
    fn score_map_csv_roundtrip(
        side in 2usize..=6,
        raw in proptest::collection::vec(0.0f64..=1.0, 36),
    ) {
        let vals: Vec<f64> = raw[..side * side].to_vec();
        let map = ScoreMap::new(side, vals).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.csv");
        save_score_map(&map, &path).unwrap();
        let loaded = load_score_map(&path).unwrap();
        prop_assert_eq!(map.values(), loaded.values());
    }

    /// Episode configs survive the JSON round trip with nothing added or
    /// dropped.
    #[test]
    fn episode_config_json_roundtrip(
        budget in 1usize..=500,
        seed in any::<u64>(),
        tta in any::<bool>(),
    ) {
        let cfg = episode_config(9, PlannerSpec::named("dijkstra-query"), budget, tta, seed);
        let value = serde_json::to_value(&cfg).unwrap();
        let back: EpisodeConfig = serde_json::from_value(value.clone()).unwrap();
        prop_assert_eq!(serde_json::to_value(&back).unwrap(), value);
    }
}
