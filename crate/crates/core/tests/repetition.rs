use std::f64::consts::FRAC_PI_8;

use games_lab::games::{product_game, Game};
use games_lab::linalg::CMatrix;
use games_lab::random::{random_game, random_strategy};
use games_lab::repetition::*;
use games_lab::strategies::{evaluate, product_strategy, seesaw, tsirelson_chsh, EntangledStrategy, SeesawConfig};
use games_lab::{seeded_rng, Error};
use proptest::prelude::*;

fn cos2() -> f64 {
    FRAC_PI_8.cos().powi(2)
}

fn tsirelson_pair() -> (Game, EntangledStrategy) {
    (Game::chsh(), product_strategy(&tsirelson_chsh(), 2).unwrap())
}

#[test]
fn theta_marginals_match_single_game() {
    let (g, s2) = tsirelson_pair();
    let theta = build_theta(&g, 2, &s2, &[0]).unwrap();
    let q = theta.outcome_distribution(&["Xt1", "Xt2", "X1", "X2", "Yt1", "Yt2", "Y1", "Y2"]).unwrap();
    // copies agree, so only 16 of 256 tuples carry weight, each 1/16
    let nonzero: Vec<f64> = q.iter().copied().filter(|&p| p > 1e-15).collect();
    assert_eq!(nonzero.len(), 16);
    assert!(nonzero.iter().all(|p| (p - 1.0 / 16.0).abs() < 1e-12));
    let q = theta.outcome_distribution(&["X1", "X2", "Y1", "Y2"]).unwrap();
    assert!(q.iter().all(|p| (p - 1.0 / 16.0).abs() < 1e-12));

    // Born-rule oracle for the single game
    let t = tsirelson_chsh();
    let dist = theta.outcome_distribution(&["X1", "Y1", "A1", "B1"]).unwrap();
    for xv in 0..2 {
        for yv in 0..2 {
            let oracle = t.answer_distribution(xv, yv);
            for ab in 0..4 {
                assert!((dist[(xv * 2 + yv) * 4 + ab] - 0.25 * oracle[ab]).abs() < 1e-12);
            }
        }
    }
    for (name, coherence) in theta.classical_coherence() {
        assert!(coherence < 1e-12, "{name} {coherence}");
    }
}

#[test]
fn conditioned_state_values() {
    let (g, s2) = tsirelson_pair();
    let theta = build_theta(&g, 2, &s2, &[0]).unwrap();
    let cgs = condition_success(&theta, &g, &[0]).unwrap();
    assert!((cgs.q - cos2()).abs() < 1e-9);
    assert!((coordinate_success(&cgs, &g, 1).unwrap() - cos2()).abs() < 1e-9);
    assert!(coordinate_success(&cgs, &g, 0).is_err());
    let both = condition_success(&theta, &g, &[0, 1]).unwrap();
    assert!((both.q - cos2() * cos2()).abs() < 1e-9);

    let budget = lemma7_budget(&cgs, &g).unwrap();
    assert!((budget.rhs - (2.0 - cos2().log2())).abs() < 1e-12);
    assert!(budget.holds(), "{budget:?}");
    let l3 = lemma3_check(&cgs).unwrap();
    assert!(l3.holds(), "{l3:?}");

    // per-register classicality of φ
    for (name, coherence) in cgs.phi.classical_coherence() {
        assert!(coherence < 1e-12, "{name} {coherence}");
    }
    let one_copy = cgs.phi.reduced_state(&["X1", "X2", "Y1", "Y2", "A1", "B1"]).unwrap();
    assert!(one_copy.off_diagonal_mass() < 1e-12);
}

#[test]
fn embedding_of_product_strategy_is_lossless() {
    let (g, s2) = tsirelson_pair();
    let theta = build_theta(&g, 2, &s2, &[0]).unwrap();
    let cgs = condition_success(&theta, &g, &[0]).unwrap();
    let cfg = EmbeddingConfig { shots: Some(100_000), ..EmbeddingConfig::default() };
    let d = embed_single_game(&cgs, &g, 1, &cfg).unwrap();
    for (name, v) in [("eps_x", d.eps_x), ("eps_y", d.eps_y), ("gamma", d.gamma), ("tau", d.tau), ("kappa", d.kappa)] {
        assert!(v.abs() <= 1e-7, "{name} = {v}");
    }
    assert!((d.p4_exact - cos2()).abs() < 1e-9);
    assert!((d.p4_value - cos2()).abs() < 0.01);
    assert!(d.chain_holds());

    // nothing conditioned yet: first coordinate
    let cgs0 = condition_success(&theta, &g, &[]).unwrap();
    assert!((cgs0.q - 1.0).abs() < 1e-12);
    let d0 = embed_single_game(&cgs0, &g, 0, &EmbeddingConfig::default()).unwrap();
    assert!((d0.p4_value - cos2()).abs() < 1e-9);
    assert!(d0.degradation() < 1e-6);
}

#[test]
fn trivial_predicates() {
    let always = Game::constant(2, 2, 2, 2, true);
    let s = EntangledStrategy::from_deterministic(
        &always,
        &games_lab::games::DeterministicStrategy { f: vec![0, 1], g: vec![1, 0] },
    )
    .unwrap();
    let theta = build_theta(&always, 1, &s, &[0]).unwrap();
    let cgs = condition_success(&theta, &always, &[0]).unwrap();
    assert_eq!(cgs.q, 1.0);
    let b = lemma7_budget(&cgs, &always).unwrap();
    assert!(b.lhs.abs() < 1e-12 && (b.rhs - 2.0).abs() < 1e-12);

    let s2 = product_strategy(&s, 2).unwrap();
    let theta = build_theta(&always, 2, &s2, &[]).unwrap();
    let cgs = condition_success(&theta, &always, &[1]).unwrap();
    assert_eq!(coordinate_success(&cgs, &always, 0).unwrap(), 1.0);
    let d = embed_single_game(&cgs, &always, 0, &EmbeddingConfig::default()).unwrap();
    assert!((d.p4_value - 1.0).abs() < 1e-12);

    let never = Game::constant(2, 2, 2, 2, false);
    let theta = build_theta(&never, 2, &s2, &[]).unwrap();
    assert!(matches!(condition_success(&theta, &never, &[0]), Err(Error::ZeroProbability)));
    let cfg = ScanConfig {
        delta1: 0.05,
        delta2: 0.05,
        omega_oracle: 0.0,
        initial_coords: vec![],
        embedding: EmbeddingConfig::default(),
    };
    let report = lemma8_scan(&never, 2, &s2, &cfg).unwrap();
    assert_eq!(report.steps.len(), 1);
    assert_eq!(report.halted, Some(vec![0]));
}

#[test]
fn non_product_distribution_is_rejected() {
    let g = Game::from_fn(2, 2, 2, 2, vec![0.5, 0.0, 0.0, 0.5], |_, _, _, _| true).unwrap();
    let s = EntangledStrategy::from_deterministic(
        &g,
        &games_lab::games::DeterministicStrategy { f: vec![0, 0], g: vec![0, 0] },
    )
    .unwrap();
    match build_theta(&g, 1, &s, &[]) {
        Err(Error::NonProduct { residual }) => assert!((residual - 1.0).abs() < 1e-12),
        other => panic!("expected NonProduct, got {other:?}"),
    }
}

#[test]
fn q_matches_born_rule_sampling() {
    let (g, s2) = tsirelson_pair();
    let theta = build_theta(&g, 2, &s2, &[]).unwrap();
    let mut rng = seeded_rng(11);
    for coords in [vec![0], vec![1], vec![0, 1]] {
        let q = condition_success(&theta, &g, &coords).unwrap().q;
        let (est, se) = sample_success(&g, 2, &s2, &coords, 100_000, &mut rng);
        assert!((q - est).abs() <= 3.0 * se + 1e-12, "{coords:?}: {q} vs {est} ± {se}");
    }
}

/// Coordinate 2 answers copy coordinate 1's, so T_2 is correlated with T_1.
fn copying_strategy() -> EntangledStrategy {
    let t = tsirelson_chsh();
    let zero = CMatrix::zeros(2, 2);
    let lift = |family: &[Vec<CMatrix>]| -> Vec<Vec<CMatrix>> {
        (0..4)
            .map(|q| (0..4).map(|o| if o / 2 == o % 2 { family[q / 2][o / 2].clone() } else { zero.clone() }).collect())
            .collect()
    };
    EntangledStrategy::new(2, 2, t.shared().to_vec(), lift(t.alice()), lift(t.bob())).unwrap()
}

#[test]
fn correlated_strategy_cross_checked_by_sampling() {
    let g = Game::chsh();
    let s = copying_strategy();
    let g2 = product_game(&g, 2).unwrap();
    assert!(evaluate(&g2, &s).is_ok());
    let theta = build_theta(&g, 2, &s, &[0]).unwrap();
    let cgs = condition_success(&theta, &g, &[0]).unwrap();
    let w = coordinate_success(&cgs, &g, 1).unwrap();
    let mut rng = seeded_rng(5);
    let (both, _) = sample_success(&g, 2, &s, &[0, 1], 100_000, &mut rng);
    let (first, _) = sample_success(&g, 2, &s, &[0], 100_000, &mut rng);
    assert!((w - both / first).abs() < 0.01, "{w} vs {}", both / first);

    let d = embed_single_game(&cgs, &g, 1, &EmbeddingConfig { shots: Some(100_000), ..EmbeddingConfig::default() })
        .unwrap();
    assert!(d.chain_holds(), "{d:?}");
    assert!(lemma7_budget(&cgs, &g).unwrap().holds());
    assert!(lemma3_check(&cgs).unwrap().holds());
}

#[test]
fn theorem_bound_values() {
    assert_eq!(theorem_bound(0.25, 384_000, 2, 2).unwrap(), 0.875);
    assert_eq!(theorem_bound(0.25, 0, 2, 2).unwrap(), 1.0);
    assert_eq!(theorem_bound(0.25, 768_000, 2, 2).unwrap(), 0.765625);
    assert!(theorem_bound(1.5, 10, 2, 2).is_err());
    assert!(theorem_bound(0.25, 10, 1, 1).is_err());
    let grid: Vec<f64> = (0..10).map(|i| theorem_bound(0.25, i * 100_000, 2, 2).unwrap()).collect();
    assert!(grid.windows(2).all(|w| w[1] < w[0]));
    let eps: Vec<f64> = (1..10).map(|i| theorem_bound(i as f64 / 10.0, 1_000_000, 2, 2).unwrap()).collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]));
}

/// Random product game with either a product strategy (`joint = false`) or a
/// strategy drawn directly for `G²` (local dimension 2 in total).
fn random_instance(seed: u64, joint: bool) -> (Game, EntangledStrategy) {
    let mut rng = seeded_rng(seed);
    let g = random_game(2, 2, 2, 2, true, &mut rng);
    let s = if joint {
        random_strategy(&product_game(&g, 2).unwrap(), 2, &mut rng)
    } else {
        product_strategy(&random_strategy(&g, 2, &mut rng), 2).unwrap()
    };
    (g, s)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_instances_satisfy_budgets_and_chain(seed: u64, joint: bool, first in 0usize..3) {
        let (g, s) = random_instance(seed, joint);
        // first: 0 → C = ∅, 1 → {1}, 2 → {2}
        let coords: Vec<usize> = if first == 0 { vec![] } else { vec![first - 1] };
        let theta = build_theta(&g, 2, &s, &coords).unwrap();
        for (name, coherence) in theta.classical_coherence() {
            prop_assert!(coherence < 1e-10, "{} {}", name, coherence);
        }
        let cgs = condition_success(&theta, &g, &coords).unwrap();
        prop_assert!(lemma7_budget(&cgs, &g).unwrap().holds());
        prop_assert!(lemma3_check(&cgs).unwrap().holds());
        for (name, coherence) in cgs.phi.classical_coherence() {
            prop_assert!(coherence < 1e-10, "{} {}", name, coherence);
        }
        let j = if coords == [0] { 1 } else { 0 };
        let d = embed_single_game(&cgs, &g, j, &EmbeddingConfig::default()).unwrap();
        prop_assert!((d.omega_j - coordinate_success(&cgs, &g, j).unwrap()).abs() < 1e-12);
        prop_assert!(d.chain_holds(), "{:?}", d);
    }
}

#[test]
fn random_instances_match_born_sampling() {
    for seed in 0..4 {
        let (g, s) = random_instance(seed, seed % 2 == 1);
        let theta = build_theta(&g, 2, &s, &[]).unwrap();
        let mut rng = seeded_rng(100 + seed);
        for coords in [vec![0], vec![0, 1]] {
            let q = condition_success(&theta, &g, &coords).unwrap().q;
            let (est, se) = sample_success(&g, 2, &s, &coords, 100_000, &mut rng);
            assert!((q - est).abs() <= 3.0 * se + 1e-12, "seed {seed} {coords:?}: {q} vs {est} ± {se}");
        }
    }
}

#[test]
fn embedded_win_rate_respects_tsirelson() {
    let g = Game::chsh();
    let (single, _) = seesaw(&g, &SeesawConfig::default()).unwrap();
    let s2 = product_strategy(&single, 2).unwrap();
    let theta = build_theta(&g, 2, &s2, &[0]).unwrap();
    let cgs = condition_success(&theta, &g, &[0]).unwrap();
    let d = embed_single_game(&cgs, &g, 1, &EmbeddingConfig { shots: Some(100_000), ..EmbeddingConfig::default() })
        .unwrap();
    let ceiling = FRAC_PI_8.cos().powi(2);
    assert!(d.p4_value <= ceiling + 3.0 * d.p4_stderr + 1e-9, "{d:?}");
    assert!(d.p4_exact <= ceiling + 1e-9);
}
