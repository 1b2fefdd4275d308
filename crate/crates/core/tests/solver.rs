mod common;

use common::{brute_force_min, random_gram, raw_objective};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wassmix::solver::{
    kkt_sparsity_check, objective, project_simplex, solve, solve_enet, solve_pure, solve_ridge, surrogate_objective,
    surrogate_step, SIMPLEX_TOLERANCE,
};
use wassmix::{gram_system, Grid, PenaltyConfig, QuantileFunction, SolverOptions, WeightVector};

fn point_masses(xs: &[f64], target: f64) -> wassmix::GramSystem {
    let models: Vec<_> = xs.iter().map(|&x| QuantileFunction::point_mass(x).unwrap()).collect();
    gram_system(&models, &QuantileFunction::point_mass(target).unwrap(), &Grid::with_nodes(50).unwrap()).unwrap()
}

#[test]
fn pure_picks_the_matching_model() {
    let models = [QuantileFunction::normal(0.0, 1.0).unwrap(), QuantileFunction::normal(5.0, 2.0).unwrap()];
    let grid = Grid::default();
    let gram = gram_system(&models, &models[0], &grid).unwrap();
    let fit = solve_pure(&gram).unwrap();
    assert!((fit.weights.as_slice()[0] - 1.0).abs() < 1e-8, "{:?}", fit.weights);
    let (best, w) = brute_force_min(&gram, 0.0, 0.0, 10_000);
    assert!(fit.objective <= raw_objective(&gram, &w, 0.0, 0.0) + 1e-9);
    assert!(best >= -1e-12);
}

#[test]
fn ridge_on_two_point_masses_matches_brute_force() {
    let gram = point_masses(&[1.0, 3.0], 2.0);
    let fit = solve_ridge(&gram, 0.5).unwrap();
    let w = fit.weights.as_slice();
    assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12, "{w:?}");
    let (best, _) = brute_force_min(&gram, 0.5, 0.0, 10_000);
    assert!(raw_objective(&gram, w, 0.5, 0.0) <= best + 1e-12);
}

#[test]
fn lasso_fixture_yields_exact_zero() {
    let gram = point_masses(&[2.0, 10.0], 2.0);
    let fit = solve_enet(&gram, &PenaltyConfig::lasso(0.5).unwrap(), &SolverOptions::default()).unwrap();
    assert_eq!(fit.weights.as_slice(), &[1.0, 0.0]);
    assert_eq!(fit.active_set, vec![0]);
}

#[test]
fn three_point_masses_match_lattice_minimum() {
    let gram = point_masses(&[0.0, 5.0, 10.0], 2.0);
    let penalty = PenaltyConfig::elastic_net(0.2, 0.9).unwrap();
    let fit = solve_enet(&gram, &penalty, &SolverOptions::default()).unwrap();
    let (best, _) = brute_force_min(&gram, 0.2, 0.9, 600);
    assert!(raw_objective(&gram, fit.weights.as_slice(), 0.2, 0.9) <= best + 1e-9);
}

#[test]
fn surrogate_step_descends_at_fixed_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = 1e-8;
    for _ in 0..50 {
        let j = rng.random_range(2..=8);
        let gram = random_gram(&mut rng, j);
        let penalty = PenaltyConfig::new(rng.random_range(0.01..2.0), rng.random_range(0.0..=1.0)).unwrap();
        let raw: Vec<f64> = (0..j).map(|_| rng.random_range(0.05..1.0)).collect();
        let w0 = project_simplex(&raw).unwrap();
        let eta = wassmix::solver::auto_step(&gram, w0.as_slice(), &penalty, eps);
        let mut w = w0.clone();
        let mut prev = surrogate_objective(&gram, w.as_slice(), w0.as_slice(), &penalty, eps);
        for _ in 0..20 {
            w = surrogate_step(&gram, &w, &w0, &penalty, eta, eps).unwrap();
            let value = surrogate_objective(&gram, w.as_slice(), w0.as_slice(), &penalty, eps);
            assert!(value <= prev + 1e-10 * prev.abs().max(1.0), "{value} > {prev}");
            prev = value;
        }
    }
}

#[test]
fn small_lambda_approaches_pure_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = SolverOptions::default();
    for _ in 0..20 {
        let gram = random_gram(&mut rng, 4);
        let pure = solve_pure(&gram).unwrap();
        let mut gaps = Vec::new();
        for lambda in [1e-1, 1e-3, 1e-5] {
            let fit = solve(&gram, &PenaltyConfig::ridge(lambda).unwrap(), &opts).unwrap();
            gaps.push(objective(&gram, &fit.weights, &PenaltyConfig::pure()).unwrap() - pure.objective);
        }
        assert!(gaps.iter().all(|g| *g >= -1e-10), "{gaps:?}");
        assert!(gaps[2] <= 1e-4 * pure.objective.abs().max(1.0), "{gaps:?}");
    }
}

#[test]
fn solutions_satisfy_simplex_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = SolverOptions::default();
    for _ in 0..40 {
        let j = rng.random_range(2..=10);
        let gram = random_gram(&mut rng, j);
        let penalty = PenaltyConfig::new(rng.random_range(0.0..1.0), rng.random_range(0.0..=1.0)).unwrap();
        let fit = solve(&gram, &penalty, &opts).unwrap();
        let report = kkt_sparsity_check(&gram, &fit, &penalty, 1e-6);
        let scale = gram.s_g().amax().max(1.0);
        assert!(report.active_gradient_spread <= 1e-6 * scale, "{report:?}");
        if let Some(gap) = report.min_inactive_gap {
            assert!(gap >= -1e-6 * scale, "{report:?}");
        }
    }
}

#[test]
fn ridge_and_enet_agree_at_zero_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let j = rng.random_range(2..=10);
        let gram = random_gram(&mut rng, j);
        let lambda = rng.random_range(0.001..5.0);
        let ridge = solve_ridge(&gram, lambda).unwrap();
        let enet = solve_enet(&gram, &PenaltyConfig::elastic_net(lambda, 0.0).unwrap(), &SolverOptions::default()).unwrap();
        assert!(ridge.weights.sup_distance(&enet.weights) < 1e-6);
    }
}

#[test]
fn single_model_gets_full_weight() {
    let gram = point_masses(&[4.0], 1.0);
    for penalty in [PenaltyConfig::pure(), PenaltyConfig::ridge(1.0).unwrap(), PenaltyConfig::elastic_net(1.0, 0.5).unwrap()] {
        let fit = solve(&gram, &penalty, &SolverOptions::default()).unwrap();
        assert_eq!(fit.weights.as_slice(), &[1.0]);
    }
}

proptest! {
    #[test]
    fn projection_lands_on_simplex(v in prop::collection::vec(-5.0..5.0f64, 1..12)) {
        prop_assume!(v.iter().any(|x| *x > 0.0));
        let w = project_simplex(&v).unwrap();
        let sum: f64 = w.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= SIMPLEX_TOLERANCE);
        prop_assert!(w.as_slice().iter().all(|x| *x >= 0.0));
        for (x, y) in v.iter().zip(w.as_slice()) {
            if *x <= 0.0 {
                prop_assert_eq!(*y, 0.0);
            }
        }
    }

    #[test]
    fn solver_never_loses_to_uniform_or_vertices(seed in any::<u64>(), lambda in 0.0..3.0f64, alpha in 0.0..=1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = rng.random_range(2..=6);
        let gram = random_gram(&mut rng, j);
        let penalty = PenaltyConfig::new(lambda, alpha).unwrap();
        let fit = solve(&gram, &penalty, &SolverOptions::default()).unwrap();
        let mut rivals = vec![WeightVector::uniform(j)];
        rivals.extend((0..j).map(|k| WeightVector::unit(j, k)));
        for w in rivals {
            let rival = raw_objective(&gram, w.as_slice(), lambda, alpha);
            prop_assert!(raw_objective(&gram, fit.weights.as_slice(), lambda, alpha) <= rival + 1e-9 * rival.abs().max(1.0));
        }
    }
}
