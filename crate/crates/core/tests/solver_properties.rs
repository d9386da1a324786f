use ggp_core::design::design_closed_form;
use ggp_core::solver::{expected_incentive, lower_sequence, solve_thresholds, upper_sequence, verify_bne};
use ggp_core::{
    CoordinationGame, Error, InformationStructure, NoiseDensity, NoiseModel, PriorDensity, PriorModel,
    QuadratureConfig, SolverConfig, StateBounds, ThresholdProfile,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn bounds(lo: f64, hi: f64) -> StateBounds {
    StateBounds::new(lo, hi).unwrap()
}

fn two_player() -> CoordinationGame {
    CoordinationGame::symmetric(2, 1.0, &[0.0, 1.0], bounds(-1.0, 2.0)).unwrap()
}

fn tent_info(eps: f64, b: StateBounds) -> InformationStructure {
    let mid = 0.5 * (b.lo + b.hi);
    let pts = vec![(b.lo, 0.5), (mid, 1.5), (b.hi, 0.5)];
    let prior = PriorModel::new(PriorDensity::Tabulated { points: pts }, b).unwrap();
    InformationStructure::new(NoiseModel::uniform(eps).unwrap(), prior, QuadratureConfig::default()).unwrap()
}

/// Count-based game on `[-1.5, 1.5]` with a designed scheme for target `x̃`.
fn game_strategy() -> impl Strategy<Value = (CoordinationGame, f64)> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(0.5..1.5f64, n),
            prop::collection::vec((-0.3..0.3f64, prop::collection::vec(0.0..0.15f64, n - 1)), n),
            -0.3..0.3f64,
        )
            .prop_map(|(c, w, target)| {
                let schedules: Vec<Vec<f64>> = w
                    .into_iter()
                    .map(|(w0, steps)| {
                        let mut v = vec![w0];
                        for s in steps {
                            v.push(v.last().unwrap() + s);
                        }
                        v
                    })
                    .collect();
                (CoordinationGame::count_based(&c, &schedules, bounds(-1.5, 1.5)).unwrap(), target)
            })
    })
}

#[test]
fn threshold_type_closed_form() {
    let game = CoordinationGame::count_based(
        &[0.9, 1.2, 0.7],
        &[vec![0.0, 0.3, 0.9], vec![0.1, 0.2, 0.6], vec![0.0, 0.5, 0.5]],
        bounds(-2.0, 2.0),
    )
    .unwrap();
    let info = InformationStructure::new(
        NoiseModel::new(0.08, NoiseDensity::RaisedCosine).unwrap(),
        PriorModel::uniform(game.state_bounds()),
        QuadratureConfig::default(),
    )
    .unwrap();
    let x = 0.3;
    let y = ThresholdProfile::common(3, x);
    for i in 0..3 {
        let u = expected_incentive(&game, &info, &y, i, x, 0.25).unwrap();
        let want = x + game.mean_externality(i) - game.cost(i) + 0.25;
        assert!((u - want).abs() < 1e-9, "player {i}: {u} vs {want}");
    }
}

#[test]
fn everyone_else_always_plays() {
    let game = CoordinationGame::symmetric(3, 1.0, &[0.0, 0.4, 1.1], bounds(-1.0, 1.0)).unwrap();
    let info = tent_info(0.1, game.state_bounds());
    let y = ThresholdProfile(vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]);
    let z = 0.23;
    let u = expected_incentive(&game, &info, &y, 0, z, 0.1).unwrap();
    let mean = info.posterior_state_density(z).unwrap().mean;
    assert!((u - (mean + 1.1 - 1.0 + 0.1)).abs() < 1e-9);
}

#[test]
fn opponent_above_probability_matches_monte_carlo() {
    let eps = 0.1;
    let game = CoordinationGame::symmetric(2, 1.0, &[0.0, 1.0], bounds(-1.0, 1.0)).unwrap();
    let info = InformationStructure::uniform(eps, game.state_bounds()).unwrap();
    let z = 0.2;
    let y = ThresholdProfile(vec![z, z + eps / 4.0]);
    // u = z + P(opponent plays 1) - 1 with w = (0, 1).
    let p = expected_incentive(&game, &info, &y, 0, z, 0.0).unwrap() - z + 1.0;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let draws = 1_000_000;
    let hits = (0..draws)
        .filter(|_| {
            let x = z - eps * (rng.gen::<f64>() - 0.5);
            x + eps * (rng.gen::<f64>() - 0.5) >= z + eps / 4.0
        })
        .count();
    let mc = hits as f64 / draws as f64;
    let se = (mc * (1.0 - mc) / draws as f64).sqrt();
    assert!((p - mc).abs() < 3.0 * se, "quadrature {p}, Monte Carlo {mc} ± {se}");
    // The signal difference over ε is triangular on [-1, 1]: P = (1 - 1/4)^2 / 2.
    assert!((p - 0.28125).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incentive_monotone_in_own_signal_and_opponent_thresholds(
        (game, _) in game_strategy(), tent in any::<bool>(), eps in 0.05..0.2f64,
        y in prop::collection::vec(-0.5..0.5f64, 4), z in -0.6..0.6f64, dz in 0.001..0.1f64, dy in 0.001..0.1f64,
    ) {
        let n = game.n_players();
        let info = if tent { tent_info(eps, game.state_bounds()) } else { InformationStructure::uniform(eps, game.state_bounds()).unwrap() };
        let profile = ThresholdProfile(y[..n].to_vec());
        for i in 0..n {
            let u = expected_incentive(&game, &info, &profile, i, z, 0.0).unwrap();
            let up = expected_incentive(&game, &info, &profile, i, z + dz, 0.0).unwrap();
            prop_assert!(up >= u - 1e-12);
            let j = (i + 1) % n;
            let mut later = profile.clone();
            later.0[j] += dy;
            let v = expected_incentive(&game, &info, &later, i, z, 0.0).unwrap();
            prop_assert!(v <= u + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn designed_scheme_roundtrips_and_sequences_are_monotone((game, target) in game_strategy(), eps in 0.05..0.15f64) {
        let info = InformationStructure::uniform(eps, game.state_bounds()).unwrap();
        let s = design_closed_form(&game, target).unwrap();
        let cfg = SolverConfig::default();
        let r = solve_thresholds(&game, &info, &s.subsidies, &cfg).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.gap < 2.0 * cfg.root_tolerance, "uniform prior gap {}", r.gap);
        for x in &r.x_of_s.0 {
            prop_assert!((x - target).abs() < 1e-6);
        }
        let (lo, hi) = info.signal_envelope();
        for seq in [&r.upper.iterates, &r.lower.iterates] {
            for row in seq {
                prop_assert!(row.iter().all(|v| *v >= lo && *v <= hi));
            }
        }
        for w in r.upper.iterates.windows(2) {
            prop_assert!(w[1].iter().zip(&w[0]).all(|(a, b)| a <= b));
        }
        for w in r.lower.iterates.windows(2) {
            prop_assert!(w[1].iter().zip(&w[0]).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn tent_prior_limits_are_ordered((game, target) in game_strategy()) {
        let info = tent_info(0.1, game.state_bounds());
        let s = design_closed_form(&game, target).unwrap();
        let r = solve_thresholds(&game, &info, &s.subsidies, &SolverConfig::default()).unwrap();
        for (l, u) in r.lower_limit.0.iter().zip(&r.upper_limit.0) {
            prop_assert!(l <= u);
        }
        for w in r.upper.iterates.windows(2) {
            prop_assert!(w[1].iter().zip(&w[0]).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn shifting_costs_shifts_thresholds((game, target) in game_strategy(), delta in -0.2..0.2f64) {
        let eps = 0.1;
        let info = InformationStructure::uniform(eps, game.state_bounds()).unwrap();
        let s = design_closed_form(&game, target).unwrap().subsidies;
        let cfg = SolverConfig::default();
        let base = solve_thresholds(&game, &info, &s, &cfg).unwrap();
        // Equivariance: higher costs at the same scheme move every switching point up.
        let shifted = solve_thresholds(&game.with_cost_shift(delta), &info, &s, &cfg).unwrap();
        for (a, b) in shifted.x_of_s.0.iter().zip(&base.x_of_s.0) {
            prop_assert!((a - b - delta).abs() < 1e-6);
        }
        // Invariance: the same shift on costs and subsidies cancels.
        let both: Vec<f64> = s.iter().map(|v| v + delta).collect();
        let same = solve_thresholds(&game.with_cost_shift(delta), &info, &both, &cfg).unwrap();
        for (a, b) in same.x_of_s.0.iter().zip(&base.x_of_s.0) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn designed_two_player_scheme_converges_to_target() {
    let game = two_player();
    let info = InformationStructure::uniform(0.01, game.state_bounds()).unwrap();
    let r = upper_sequence(&game, &info, &[0.5, 0.5], &SolverConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.limit.0.iter().all(|x| x.abs() < 1e-6), "{:?}", r.limit);
    assert_eq!(r.iterates[0], vec![2.0, 2.0]);
    let l = lower_sequence(&game, &info, &[0.5, 0.5], &SolverConfig::default()).unwrap();
    assert_eq!(l.iterates[0], vec![-1.0, -1.0]);
    assert!(r.limit.max_distance(&l.limit) < 2e-8);
}

#[test]
fn dominant_action_collapses_sequences_to_the_edges() {
    let game = two_player();
    let info = InformationStructure::uniform(0.01, game.state_bounds()).unwrap();
    let (floor, ceiling) = info.signal_envelope();
    let cfg = SolverConfig::default();
    // s >= c - w(0) - X_lo makes 1 dominant at every state.
    let r = upper_sequence(&game, &info, &[2.0, 2.0], &cfg).unwrap();
    assert_eq!(r.limit.0, vec![floor, floor]);
    assert_eq!(r.iterates[1], vec![floor, floor]);
    // A large tax makes 0 dominant everywhere.
    let l = lower_sequence(&game, &info, &[-3.0, -3.0], &cfg).unwrap();
    assert_eq!(l.limit.0, vec![ceiling, ceiling]);
}

#[test]
fn unbracketed_start_is_a_configuration_error() {
    let game = two_player();
    let info = InformationStructure::uniform(0.01, game.state_bounds()).unwrap();
    let err = upper_sequence(&game, &info, &[-3.0, 0.5], &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = solve_thresholds(&game, &info, &[-3.0, 0.5], &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let game = two_player();
    let info = InformationStructure::uniform(0.01, game.state_bounds()).unwrap();
    let cfg = SolverConfig { max_iter: 5, ..SolverConfig::default() };
    let r = solve_thresholds(&game, &info, &[0.5, 0.5], &cfg).unwrap();
    assert!(!r.converged && !r.upper.converged && !r.upper.refined);
    assert_eq!(r.upper.iterates.len(), 6);
}

#[test]
fn best_response_check_accepts_solution_and_flags_perturbation() {
    let game = CoordinationGame::count_based(
        &[1.0, 0.8, 1.2],
        &[vec![0.0, 0.2, 0.5], vec![0.1, 0.3, 0.4], vec![0.0, 0.0, 0.6]],
        bounds(-1.5, 1.5),
    )
    .unwrap();
    let info = tent_info(0.05, game.state_bounds());
    let s = design_closed_form(&game, 0.1).unwrap().subsidies;
    let r = solve_thresholds(&game, &info, &s, &SolverConfig::default()).unwrap();
    let (lo, hi) = info.signal_envelope();
    let grid: Vec<f64> = (0..=600).map(|k| lo + (hi - lo) * k as f64 / 600.0).collect();
    let tol = 1e-6;
    // Between the limits the threshold type is only indifferent up to the gap.
    let limit = verify_bne(&game, &info, &r.upper_limit, &s, &grid).unwrap();
    assert!(limit.max_violation <= tol, "{limit:?}");
    let mut moved = r.upper_limit.clone();
    moved.0[1] += 10.0 * tol;
    let bad = verify_bne(&game, &info, &moved, &s, &grid).unwrap();
    assert!(bad.max_violation > tol);
    assert_eq!(bad.player, Some(1));
}

#[test]
fn dominance_region_signals_have_no_violations() {
    let game = two_player();
    let info = InformationStructure::uniform(0.01, game.state_bounds()).unwrap();
    let y = ThresholdProfile::common(2, 0.0);
    // With s = 0.5 action 1 is dominant above 0.505 and action 0 below -0.505.
    let grid: Vec<f64> = (0..50).map(|k| 0.51 + 0.02 * k as f64).chain((0..20).map(|k| -0.51 - 0.02 * k as f64)).collect();
    let check = verify_bne(&game, &info, &y, &[0.5, 0.5], &grid).unwrap();
    assert!(check.max_violation <= 1e-9, "{check:?}");
}
