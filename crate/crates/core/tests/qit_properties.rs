use games_lab::linalg::{self, CMatrix, C64};
use games_lab::multireg::{LabeledPureState, Register, RegisterLayout};
use games_lab::qit::*;
use games_lab::random::{random_density_with, random_probability, random_unit_vector};
use games_lab::seeded_rng;
use proptest::prelude::*;

const SLACK: f64 = 1e-9;

fn pair(dim: usize, rank_a: usize, rank_b: usize, seed: u64) -> (DensityOperator, DensityOperator) {
    let mut rng = seeded_rng(seed);
    (random_density_with(dim, rank_a, &mut rng), random_density_with(dim, rank_b, &mut rng))
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn fuchs_van_de_graaf(dim in 2usize..=6, ra in 1usize..=6, rb in 1usize..=6, seed: u64) {
        let (rho, sigma) = pair(dim, ra.min(dim), rb.min(dim), seed);
        let l1 = trace_norm_distance(&rho, &sigma).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!(2.0 * (1.0 - f) <= l1 + SLACK, "lower: 2(1-F)={} l1={l1}", 2.0 * (1.0 - f));
        prop_assert!(l1 <= 2.0 * (1.0 - f * f).max(0.0).sqrt() + SLACK, "upper: l1={l1} F={f}");
    }

    #[test]
    fn pure_state_distance_identity(dim in 2usize..=6, seed: u64) {
        let mut rng = seeded_rng(seed);
        let (a, b) = (random_unit_vector(dim, &mut rng), random_unit_vector(dim, &mut rng));
        let dense = trace_norm_distance(&DensityOperator::from_pure(&a).unwrap(), &DensityOperator::from_pure(&b).unwrap()).unwrap();
        let overlap = linalg::inner(&a, &b).norm();
        prop_assert!((dense - 2.0 * (1.0 - overlap * overlap).sqrt()).abs() <= SLACK);
        prop_assert!((pure_trace_distance(&a, &b) - dense).abs() <= SLACK);
    }

    #[test]
    fn partial_trace_contracts(da in 2usize..=3, db in 2usize..=3, ra in 1usize..=9, rb in 1usize..=9, seed: u64) {
        let d = da * db;
        let (rho, sigma) = pair(d, ra.min(d), rb.min(d), seed);
        let (r, s) = (partial_trace(&rho, &[da, db], &[1]).unwrap(), partial_trace(&sigma, &[da, db], &[1]).unwrap());
        prop_assert!(trace_norm_distance(&r, &s).unwrap() <= trace_norm_distance(&rho, &sigma).unwrap() + SLACK);
        prop_assert!(fidelity(&r, &s).unwrap() + SLACK >= fidelity(&rho, &sigma).unwrap());
    }

    #[test]
    fn relative_entropy_below_max_relative_entropy(dim in 2usize..=6, ra in 1usize..=6, seed: u64) {
        let (rho, sigma) = pair(dim, ra.min(dim), dim, seed);
        let d = relative_entropy(&rho, &sigma).unwrap();
        let dmax = relative_min_entropy(&rho, &sigma).unwrap();
        prop_assert!(d <= dmax + SLACK, "D={d} Dmax={dmax}");
    }

    // ‖ρ−σ‖₁ ≤ √D fails with base-2 D near ρ = σ (see the counterexample
    // below); the acceptance suite reports it as a failing criterion.
    #[test]
    #[ignore = "false for base-2 relative entropy; reported by the acceptance suite"]
    fn relative_entropy_controls_l1(dim in 2usize..=6, seed: u64) {
        let (rho, sigma) = pair(dim, dim, dim, seed);
        let d = relative_entropy(&rho, &sigma).unwrap();
        let l1 = trace_norm_distance(&rho, &sigma).unwrap();
        prop_assert!(l1 <= d.sqrt() + SLACK, "l1={l1} sqrt(D)={}", d.sqrt());
    }

    #[test]
    fn relative_entropy_controls_fidelity(dim in 2usize..=6, seed: u64) {
        let (rho, sigma) = pair(dim, dim, dim, seed);
        let d = relative_entropy(&rho, &sigma).unwrap();
        prop_assert!(1.0 - fidelity(&rho, &sigma).unwrap() <= d + SLACK);
        // The correctly scaled Pinsker form always holds.
        let l1 = trace_norm_distance(&rho, &sigma).unwrap();
        prop_assert!(l1 <= (2.0 * std::f64::consts::LN_2 * d).sqrt() + SLACK);
    }

    #[test]
    fn joint_convexity(dim in 2usize..=6, p in 0.0f64..=1.0, seed: u64) {
        let (r0, s0) = pair(dim, dim, dim, seed);
        let (r1, s1) = pair(dim, dim, dim, seed.wrapping_add(1));
        let lhs = relative_entropy(&r0.mix(&r1, p).unwrap(), &s0.mix(&s1, p).unwrap()).unwrap();
        let rhs = p * relative_entropy(&r0, &s0).unwrap() + (1.0 - p) * relative_entropy(&r1, &s1).unwrap();
        prop_assert!(lhs <= rhs + SLACK);
    }

    #[test]
    fn cq_chain_rule(n in 2usize..=4, d in 2usize..=3, seed: u64) {
        let mut rng = seeded_rng(seed);
        let (mu, mu1) = (random_probability(n, &mut rng), random_probability(n, &mut rng));
        let blocks: Vec<_> = (0..n).map(|_| random_density_with(d, d, &mut rng)).collect();
        let blocks1: Vec<_> = (0..n).map(|_| random_density_with(d, d, &mut rng)).collect();
        let expected = classical_relative_entropy(&mu1, &mu)
            + (0..n).map(|x| mu1[x] * relative_entropy(&blocks1[x], &blocks[x]).unwrap()).sum::<f64>();
        let rho = ClassicalQuantumState::new(mu, blocks).unwrap().to_density();
        let rho1 = ClassicalQuantumState::new(mu1, blocks1).unwrap().to_density();
        prop_assert!((relative_entropy(&rho1, &rho).unwrap() - expected).abs() <= 1e-8);
    }

    #[test]
    fn mutual_information_is_minimal_divergence(dx in 2usize..=3, dy in 2usize..=3, rank in 1usize..=9, seed: u64) {
        let d = dx * dy;
        let mut rng = seeded_rng(seed);
        let rho = random_density_with(d, rank.min(d), &mut rng);
        let (sigma, tau) = (random_density_with(dx, dx, &mut rng), random_density_with(dy, dy, &mut rng));
        let (rx, ry) = (partial_trace(&rho, &[dx, dy], &[0]).unwrap(), partial_trace(&rho, &[dx, dy], &[1]).unwrap());
        let i = mutual_information(&rho, &[dx, dy], &[0]).unwrap();
        prop_assert!((relative_entropy(&rho, &rx.tensor(&ry)).unwrap() - i).abs() <= 1e-8);
        prop_assert!(i <= relative_entropy(&rho, &sigma.tensor(&tau)).unwrap() + SLACK);
    }

    #[test]
    fn relative_entropy_monotone_under_subsystems(dx in 2usize..=3, dy in 2usize..=3, seed: u64) {
        let d = dx * dy;
        let (rho, sigma) = pair(d, d, d, seed);
        let lhs = relative_entropy(&partial_trace(&rho, &[dx, dy], &[0]).unwrap(), &partial_trace(&sigma, &[dx, dy], &[0]).unwrap()).unwrap();
        prop_assert!(lhs <= relative_entropy(&rho, &sigma).unwrap() + SLACK);
    }

    #[test]
    fn mutual_information_chain_rule_classical_y(ny in 2usize..=3, dx in 2usize..=3, dz in 2usize..=3, seed: u64) {
        // ρ on Y ⊗ X ⊗ Z with Y classical.
        let mut rng = seeded_rng(seed);
        let py = random_probability(ny, &mut rng);
        let rank = dx * dz;
        let blocks: Vec<_> = (0..ny).map(|_| random_density_with(dx * dz, rank, &mut rng)).collect();
        let cq = ClassicalQuantumState::new(py, blocks).unwrap();
        let rho = cq.to_density();
        let i_x_yz = mutual_information(&rho, &[ny, dx, dz], &[1]).unwrap();
        let rho_yx = partial_trace(&rho, &[ny, dx, dz], &[0, 1]).unwrap();
        let i_x_y = mutual_information(&rho_yx, &[ny, dx], &[1]).unwrap();
        let i_x_z_given_y = conditional_mutual_information(&cq, &[dx, dz], &[0]).unwrap();
        prop_assert!((i_x_yz - i_x_y - i_x_z_given_y).abs() <= 1e-8);
    }

    #[test]
    fn uhlmann_overlap_is_fidelity(dim in 1usize..=6, ra in 1usize..=6, rb in 1usize..=6, seed: u64) {
        let (rho, sigma) = pair(dim, ra.min(dim), rb.min(dim), seed);
        let (p, q) = (purify(&rho), purify(&sigma));
        let u = uhlmann_unitary(&p, &q).unwrap();
        let moved = p.apply_purifier_unitary(&u).unwrap();
        let overlap = linalg::inner(q.state(), moved.state()).norm();
        prop_assert!((overlap - fidelity(&rho, &sigma).unwrap()).abs() <= 1e-8);
    }
}

fn random_labeled(dims: &[usize], seed: u64) -> LabeledPureState {
    let names = ["R0", "R1", "R2", "R3"];
    let regs = dims.iter().zip(names).map(|(&d, n)| Register::quantum(n, d)).collect();
    let layout = RegisterLayout::new(regs).unwrap();
    let amps = random_unit_vector(layout.total_dim(), &mut seeded_rng(seed));
    LabeledPureState::new(layout, amps).unwrap()
}

/// `|v⟩⟨v|` on register `at` of `dims`, identity elsewhere.
fn basis_projector(dims: &[usize], at: usize, value: usize) -> CMatrix {
    dims.iter().enumerate().fold(linalg::identity(1), |acc, (i, &d)| {
        let factor = if i == at { linalg::outer(&basis_vector(d, value)) } else { linalg::identity(d) };
        linalg::kron(&acc, &factor)
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn measurement_consistency(d0 in 1usize..=3, d1 in 1usize..=3, d2 in 1usize..=3, seed: u64) {
        let psi = random_labeled(&[d0, d1, d2], seed);
        let probs = psi.outcome_distribution(&["R0", "R2"]).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let mut averaged = CMatrix::zeros(d1, d1);
        for v0 in 0..d0 {
            for v2 in 0..d2 {
                let p = probs[v0 * d2 + v2];
                if p <= 1e-14 {
                    continue;
                }
                let (post, w) = psi.condition_on(&[("R0", v0), ("R2", v2)]).unwrap();
                prop_assert!((w - p).abs() <= 1e-12);
                averaged += post.reduced_state(&["R1"]).unwrap().matrix().scale(p);
            }
        }
        let direct = psi.reduced_state(&["R1"]).unwrap();
        prop_assert!((averaged - direct.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn conditioning_matches_density_projection(d0 in 2usize..=3, d1 in 1usize..=3, d2 in 1usize..=3, value in 0usize..3, seed: u64) {
        let dims = [d0, d1, d2];
        let value = value % d0;
        let psi = random_labeled(&dims, seed);
        let (post, p) = psi.condition_on(&[("R0", value)]).unwrap();
        let full = linalg::outer(psi.amplitudes());
        let proj = basis_projector(&dims, 0, value);
        let projected = &proj * full * &proj;
        let q = linalg::trace(&projected).re;
        prop_assert!((p - q).abs() <= 1e-12);
        let direct = partial_trace(&DensityOperator::new(projected.unscale(q)).unwrap(), &dims, &[1, 2]).unwrap();
        let via_state = post.reduced_state(&["R1", "R2"]).unwrap();
        prop_assert!(direct.max_abs_diff(&via_state) <= 1e-10);
    }
}

#[test]
fn fidelity_on_shared_support_is_exact() {
    // Rank-deficient states sharing a support: round-off must not leak into F.
    let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
    let rho = DensityOperator::from_pure(&v).unwrap();
    assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn l1_exceeds_sqrt_relative_entropy_near_equal_states() {
    // diag(1/2 + δ, 1/2 − δ) vs I/2: ‖·‖₁ = 2δ while D ≈ 2δ²/ln 2.
    let delta = 0.05;
    let rho = DensityOperator::from_diagonal(&[0.5 + delta, 0.5 - delta]).unwrap();
    let sigma = DensityOperator::maximally_mixed(2);
    let d = relative_entropy(&rho, &sigma).unwrap();
    let l1 = trace_norm_distance(&rho, &sigma).unwrap();
    assert!((l1 - 2.0 * delta).abs() < 1e-12);
    assert!(l1 > d.sqrt() + 0.01, "l1 {l1} sqrt(D) {}", d.sqrt());
    assert!(l1 <= (2.0 * std::f64::consts::LN_2 * d).sqrt());
}
