//! Seeded random states, unitaries and measurements.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::games::Game;
use crate::linalg::{self, CMatrix, C64};
use crate::qit::DensityOperator;
use crate::strategies::EntangledStrategy;

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // Explicit loop: entry order is part of the reproducibility contract.
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = complex_gaussian(rng);
        }
    }
    m
}

/// Uniform unit vector in `C^dim`.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let n = linalg::norm_sqr(&v).sqrt();
    for z in &mut v {
        *z /= n;
    }
    v
}

/// Uniform (flat Dirichlet) point of the probability simplex.
pub fn random_probability<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x: f64| x / t).collect()
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Normalized `G G†` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density_with<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let g = gaussian_matrix(dim, rank.clamp(1, dim), rng);
    let m = &g * g.adjoint();
    let t = linalg::trace(&m).re;
    DensityOperator::assume_valid(m.unscale(t))
}

/// Random POVM with `outcomes` full-rank elements `S^{-1/2} G_a G_a† S^{-1/2}`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let total = raw.iter().fold(CMatrix::zeros(dim, dim), |acc, m| acc + m);
    let inv_sqrt = linalg::hermitian_map(&total, |v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
    raw.iter().map(|m| &inv_sqrt * m * &inv_sqrt).collect()
}

/// Projective measurement from the columns of a Haar unitary: outcomes
/// `0..min(outcomes, dim)−1` are rank one, the last outcome takes the rest.
pub fn random_projective<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let u = haar_unitary(dim, rng);
    let mut out = Vec::with_capacity(outcomes);
    let mut used = CMatrix::zeros(dim, dim);
    for a in 0..outcomes {
        if a + 1 == outcomes {
            out.push(linalg::identity(dim) - &used);
        } else if a < dim {
            let col: Vec<C64> = u.column(a).iter().copied().collect();
            let p = linalg::outer(&col);
            used += &p;
            out.push(p);
        } else {
            out.push(CMatrix::zeros(dim, dim));
        }
    }
    out
}

/// Orthogonal projector of the given rank onto a Haar-random subspace.
pub fn random_projector<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMatrix {
    let u = haar_unitary(dim, rng);
    let cols = u.columns(0, rank.min(dim));
    cols * cols.adjoint()
}

/// Full-support μ (the outer product of two random marginals when
/// `product`) and a predicate accepting each tuple with probability 1/2.
pub fn random_game<R: Rng + ?Sized>(nx: usize, ny: usize, na: usize, nb: usize, product: bool, rng: &mut R) -> Game {
    let mu = if product {
        let (px, py) = (random_probability(nx, rng), random_probability(ny, rng));
        px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect()
    } else {
        random_probability(nx * ny, rng)
    };
    let predicate = (0..nx * ny * na * nb).map(|_| rng.random_bool(0.5)).collect();
    Game::new(nx, ny, na, nb, mu, predicate).expect("generated game is valid")
}

/// Haar-random shared state on `dim × dim` and random POVMs shaped for `game`.
pub fn random_strategy<R: Rng + ?Sized>(game: &Game, dim: usize, rng: &mut R) -> EntangledStrategy {
    let shared = random_unit_vector(dim * dim, rng);
    let alice = (0..game.nx()).map(|_| random_povm(dim, game.na(), rng)).collect();
    let bob = (0..game.ny()).map(|_| random_povm(dim, game.nb(), rng)).collect();
    EntangledStrategy::new(dim, dim, shared, alice, bob).expect("generated strategy is valid")
}
