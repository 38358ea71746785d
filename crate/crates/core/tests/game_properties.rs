use games_lab::games::*;
use games_lab::linalg::{self, CMatrix};
use games_lab::random::{haar_unitary, random_game, random_strategy};
use games_lab::seeded_rng;
use games_lab::strategies::{evaluate, product_strategy, seesaw, EntangledStrategy, SeesawConfig};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

/// Brute force over every `(f, g)` pair, independent of the library's
/// per-`f` best-response decomposition.
fn brute_force_value(game: &Game) -> f64 {
    let (nx, ny, na, nb) = game.sizes();
    let (fs, gs) = (na.pow(nx as u32), nb.pow(ny as u32));
    let mut best = 0.0f64;
    for fi in 0..fs {
        let f = DeterministicStrategy::decode_map(fi, nx, na);
        for gi in 0..gs {
            let g = DeterministicStrategy::decode_map(gi, ny, nb);
            let v: f64 = f
                .iter()
                .enumerate()
                .flat_map(|(x, &a)| g.iter().enumerate().map(move |(y, &b)| (x, y, a, b)))
                .filter(|&(x, y, a, b)| game.wins(x, y, a, b))
                .map(|(x, y, _, _)| game.mu(x, y))
                .sum();
            best = best.max(v);
        }
    }
    best
}

fn conjugate(ops: &[Vec<CMatrix>], u: &CMatrix) -> Vec<Vec<CMatrix>> {
    ops.iter().map(|row| row.iter().map(|m| u * m * u.adjoint()).collect()).collect()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn classical_value_matches_brute_force(nx in 1usize..=3, ny in 1usize..=3, na in 1usize..=3, nb in 1usize..=3, product: bool, seed: u64) {
        let game = random_game(nx, ny, na, nb, product, &mut seeded_rng(seed));
        let cv = classical_value(&game).unwrap();
        prop_assert!((cv.value - brute_force_value(&game)).abs() <= 1e-12);
        prop_assert!((evaluate_deterministic(&game, &cv.strategy).unwrap() - cv.value).abs() <= 1e-12);
    }

    #[test]
    fn classical_value_dominates_every_strategy(nx in 1usize..=3, ny in 1usize..=3, na in 1usize..=3, nb in 1usize..=3, fi: usize, gi: usize, seed: u64) {
        let game = random_game(nx, ny, na, nb, true, &mut seeded_rng(seed));
        let s = DeterministicStrategy {
            f: DeterministicStrategy::decode_map(fi % na.pow(nx as u32), nx, na),
            g: DeterministicStrategy::decode_map(gi % nb.pow(ny as u32), ny, nb),
        };
        prop_assert!(classical_value(&game).unwrap().value + 1e-12 >= evaluate_deterministic(&game, &s).unwrap());
    }

    #[test]
    fn repetition_never_beats_independent_play(product: bool, seed: u64) {
        let game = random_game(2, 2, 2, 2, product, &mut seeded_rng(seed));
        let w = classical_value(&game).unwrap().value;
        let w2 = classical_value(&product_game(&game, 2).unwrap()).unwrap().value;
        prop_assert!(w2 + 1e-12 >= w * w);
    }

    #[test]
    fn product_game_of_one_is_identity(nx in 1usize..=3, ny in 1usize..=3, na in 1usize..=3, nb in 1usize..=3, seed: u64) {
        let game = random_game(nx, ny, na, nb, false, &mut seeded_rng(seed));
        prop_assert_eq!(product_game(&game, 1).unwrap(), game);
    }

    #[test]
    fn residual_vanishes_exactly_for_product_mu(nx in 2usize..=4, ny in 2usize..=4, seed: u64) {
        let mut rng = seeded_rng(seed);
        let product = random_game(nx, ny, 2, 2, true, &mut rng);
        prop_assert!(marginals(&product).residual <= 1e-12);
        // Moving mass between two cells of a full-support product breaks it.
        let mut mu = product.mu_flat().to_vec();
        let shift = mu[0].min(mu[ny + 1]) / 2.0;
        mu[0] -= shift;
        mu[ny + 1] -= shift;
        mu[1] += shift;
        mu[ny] += shift;
        let skewed = Game::new(nx, ny, 2, 2, mu, product.predicate_flat().to_vec()).unwrap();
        prop_assert!(marginals(&skewed).residual > 1e-6);
    }

    #[test]
    fn product_strategy_squares_value(na in 2usize..=3, dim in 1usize..=2, product: bool, seed: u64) {
        let mut rng = seeded_rng(seed);
        let game = random_game(2, 2, na, 2, product, &mut rng);
        let s = random_strategy(&game, dim, &mut rng);
        let s2 = product_strategy(&s, 2).unwrap();
        let g2 = product_game(&game, 2).unwrap();
        let v = evaluate(&game, &s).unwrap();
        prop_assert!((evaluate(&g2, &s2).unwrap() - v * v).abs() <= 1e-9);
    }

    #[test]
    fn value_invariant_under_local_unitaries(dim in 1usize..=3, seed: u64) {
        let mut rng = seeded_rng(seed);
        let game = random_game(2, 2, 2, 2, true, &mut rng);
        let s = random_strategy(&game, dim, &mut rng);
        let (u, v) = (haar_unitary(dim, &mut rng), haar_unitary(dim, &mut rng));
        let psi = linalg::kron(&u, &v) * nalgebra::DVector::from_column_slice(s.shared());
        let rotated = EntangledStrategy::new(dim, dim, psi.iter().copied().collect(), conjugate(s.alice(), &u), conjugate(s.bob(), &v)).unwrap();
        prop_assert!((evaluate(&game, &rotated).unwrap() - evaluate(&game, &s).unwrap()).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn seesaw_trace_is_monotone(na in 2usize..=3, seed: u64) {
        let game = random_game(2, 2, na, 2, true, &mut seeded_rng(seed));
        let cfg = SeesawConfig { iters: 60, restarts: 2, seed, ..SeesawConfig::default() };
        let (s, report) = seesaw(&game, &cfg).unwrap();
        for w in report.value_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10, "{} then {}", w[0], w[1]);
        }
        prop_assert!((evaluate(&game, &s).unwrap() - report.final_value).abs() <= 1e-9);
    }
}

#[test]
fn seesaw_respects_tsirelson_ceiling() {
    let ceiling = (std::f64::consts::FRAC_PI_8.cos()).powi(2) + 1e-6;
    for dim in 1..=4 {
        let cfg = SeesawConfig { dim, iters: 200, restarts: 4, ..SeesawConfig::default() };
        let (_, report) = seesaw(&Game::chsh(), &cfg).unwrap();
        assert!(report.final_value <= ceiling, "dim {dim}: {}", report.final_value);
    }
}
