//! Finite two-player one-round games.
//!
//! Product-set indices are coordinate-major: the tuple `(x_1, …, x_k)` maps to
//! `Σ x_i · n^(k−i)`, first coordinate most significant. File formats depend
//! on this encoding; do not change it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::qit::{l1_distance, DEFAULT_TOL};

/// Default cap on `na^nx · nb^ny` deterministic strategy pairs.
pub const DEFAULT_STRATEGY_BUDGET: u128 = 1 << 26;
/// Default cap on the predicate table size `(nx·ny·na·nb)^k` of a product game.
pub const DEFAULT_GAME_BUDGET: u128 = 1 << 26;
/// Values closer than this are ties; ties go to the lexicographically smaller strategy.
pub const TIE_EPS: f64 = 1e-12;

const ENUM_BLOCK: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    nx: usize,
    ny: usize,
    na: usize,
    nb: usize,
    /// Row-major `nx × ny`.
    mu: Vec<f64>,
    /// Indexed `((x·ny + y)·na + a)·nb + b`.
    predicate: Vec<bool>,
}

impl Game {
    pub fn new(nx: usize, ny: usize, na: usize, nb: usize, mu: Vec<f64>, predicate: Vec<bool>) -> Result<Self> {
        if [nx, ny, na, nb].contains(&0) {
            return Err(Error::InvalidGame("all set sizes must be positive".into()));
        }
        if mu.len() != nx * ny {
            return Err(Error::InvalidGame(format!("mu has {} entries, expected {}", mu.len(), nx * ny)));
        }
        if predicate.len() != nx * ny * na * nb {
            return Err(Error::InvalidGame(format!(
                "predicate has {} entries, expected {}",
                predicate.len(),
                nx * ny * na * nb
            )));
        }
        if let Some(bad) = mu.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidGame(format!("mu entry {bad} is negative or not finite")));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidGame(format!("mu sums to {total}, expected 1")));
        }
        Ok(Game { nx, ny, na, nb, mu, predicate })
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        na: usize,
        nb: usize,
        mu: Vec<f64>,
        wins: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut predicate = Vec::with_capacity(nx * ny * na * nb);
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        predicate.push(wins(x, y, a, b));
                    }
                }
            }
        }
        Self::new(nx, ny, na, nb, mu, predicate)
    }

    /// Win iff `a ⊕ b = x ∧ y`, uniform questions.
    pub fn chsh() -> Self {
        Self::from_fn(2, 2, 2, 2, vec![0.25; 4], |x, y, a, b| (a ^ b) == (x & y)).expect("valid")
    }

    /// Predicate identically `value`, uniform questions.
    pub fn constant(nx: usize, ny: usize, na: usize, nb: usize, value: bool) -> Self {
        let n = (nx * ny) as f64;
        Self::from_fn(nx, ny, na, nb, vec![1.0 / n; nx * ny], |_, _, _, _| value).expect("valid")
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn na(&self) -> usize {
        self.na
    }
    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        (self.nx, self.ny, self.na, self.nb)
    }

    #[inline]
    pub fn mu(&self, x: usize, y: usize) -> f64 {
        self.mu[x * self.ny + y]
    }

    pub fn mu_flat(&self) -> &[f64] {
        &self.mu
    }

    #[inline]
    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.predicate[((x * self.ny + y) * self.na + a) * self.nb + b]
    }

    pub fn predicate_flat(&self) -> &[bool] {
        &self.predicate
    }

    /// All winning `(x, y, a, b)` tuples in index order.
    pub fn winning_tuples(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for x in 0..self.nx {
            for y in 0..self.ny {
                for a in 0..self.na {
                    for b in 0..self.nb {
                        if self.wins(x, y, a, b) {
                            out.push([x, y, a, b]);
                        }
                    }
                }
            }
        }
        out
    }

    /// Number of deterministic strategy pairs `na^nx · nb^ny` (saturating).
    pub fn strategy_pair_count(&self) -> u128 {
        let f = (self.na as u128).checked_pow(self.nx as u32);
        let g = (self.nb as u128).checked_pow(self.ny as u32);
        match (f, g) {
            (Some(f), Some(g)) => f.saturating_mul(g),
            _ => u128::MAX,
        }
    }
}

/// Marginals of μ and the ℓ₁ gap `‖μ − μ_X ⊗ μ_Y‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistributionWitness {
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub residual: f64,
}

impl ProductDistributionWitness {
    pub fn is_product(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

pub fn marginals(game: &Game) -> ProductDistributionWitness {
    let mut mu_x = vec![0.0; game.nx];
    let mut mu_y = vec![0.0; game.ny];
    for x in 0..game.nx {
        for y in 0..game.ny {
            mu_x[x] += game.mu(x, y);
            mu_y[y] += game.mu(x, y);
        }
    }
    let product: Vec<f64> = mu_x.iter().flat_map(|px| mu_y.iter().map(move |py| px * py)).collect();
    let residual = l1_distance(&game.mu, &product);
    ProductDistributionWitness { mu_x, mu_y, residual }
}

/// Deterministic answer maps `f: X → A`, `g: Y → B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

impl DeterministicStrategy {
    /// Decode `f` from its lexicographic rank (f(0) most significant).
    pub fn decode_map(mut rank: usize, len: usize, base: usize) -> Vec<usize> {
        let mut out = vec![0; len];
        for i in (0..len).rev() {
            out[i] = rank % base;
            rank /= base;
        }
        out
    }
}

pub fn evaluate_deterministic(game: &Game, s: &DeterministicStrategy) -> Result<f64> {
    if s.f.len() != game.nx || s.g.len() != game.ny {
        return Err(Error::InvalidStrategy("answer maps must be total".into()));
    }
    if s.f.iter().any(|&a| a >= game.na) || s.g.iter().any(|&b| b >= game.nb) {
        return Err(Error::InvalidStrategy("answer out of range".into()));
    }
    let mut v = 0.0;
    for x in 0..game.nx {
        for y in 0..game.ny {
            if game.wins(x, y, s.f[x], s.g[y]) {
                v += game.mu(x, y);
            }
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalValue {
    pub value: f64,
    pub strategy: DeterministicStrategy,
}

pub fn classical_value(game: &Game) -> Result<ClassicalValue> {
    classical_value_with_budget(game, DEFAULT_STRATEGY_BUDGET)
}

/// Exact ω(G) over all deterministic pairs.
///
/// For each `f` the best `g` decomposes over `y`, so the inner maximization
/// over all `nb^ny` maps is done coordinate-wise; the result is identical to
/// scoring every pair. Ties resolve to the lexicographically smallest `(f, g)`
/// regardless of how the parallel blocks are scheduled.
pub fn classical_value_with_budget(game: &Game, budget: u128) -> Result<ClassicalValue> {
    let required = game.strategy_pair_count();
    if required > budget {
        return Err(Error::Budget { required, limit: budget });
    }
    let f_count = game.na.pow(game.nx as u32);
    let blocks = f_count.div_ceil(ENUM_BLOCK);
    let best_per_block: Vec<(f64, usize, Vec<usize>)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut best: Option<(f64, usize, Vec<usize>)> = None;
            let end = ((blk + 1) * ENUM_BLOCK).min(f_count);
            for rank in blk * ENUM_BLOCK..end {
                let f = DeterministicStrategy::decode_map(rank, game.nx, game.na);
                let (v, g) = best_response(game, &f);
                if best.as_ref().is_none_or(|b| v > b.0 + TIE_EPS) {
                    best = Some((v, rank, g));
                }
            }
            best.expect("non-empty block")
        })
        .collect();
    let mut best = best_per_block[0].clone();
    for cand in best_per_block.into_iter().skip(1) {
        if cand.0 > best.0 + TIE_EPS {
            best = cand;
        }
    }
    let f = DeterministicStrategy::decode_map(best.1, game.nx, game.na);
    Ok(ClassicalValue { value: best.0, strategy: DeterministicStrategy { f, g: best.2 } })
}

fn best_response(game: &Game, f: &[usize]) -> (f64, Vec<usize>) {
    let mut total = 0.0;
    let mut g = vec![0; game.ny];
    for y in 0..game.ny {
        let mut best = f64::NEG_INFINITY;
        for b in 0..game.nb {
            let mut v = 0.0;
            for x in 0..game.nx {
                if game.wins(x, y, f[x], b) {
                    v += game.mu(x, y);
                }
            }
            if v > best + TIE_EPS {
                best = v;
                g[y] = b;
            }
        }
        total += best;
    }
    (total, g)
}

/// Coordinate-major flat index of a digit tuple.
pub fn product_index(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}

/// Digits of a coordinate-major flat index.
pub fn product_digits(index: usize, base: usize, k: usize) -> Vec<usize> {
    linalg::unflatten(index, &vec![base; k])
}

pub fn product_game(game: &Game, k: usize) -> Result<Game> {
    product_game_with_budget(game, k, DEFAULT_GAME_BUDGET)
}

/// `G^k`: μ^k on `X^k × Y^k`, winning iff every coordinate wins.
pub fn product_game_with_budget(game: &Game, k: usize, budget: u128) -> Result<Game> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let cell = (game.nx * game.ny * game.na * game.nb) as u128;
    let required = cell.checked_pow(k as u32).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::Budget { required, limit: budget });
    }
    let p = |n: usize| n.pow(k as u32);
    let (nx, ny, na, nb) = (p(game.nx), p(game.ny), p(game.na), p(game.nb));
    let mut mu = vec![0.0; nx * ny];
    for xi in 0..nx {
        let xs = product_digits(xi, game.nx, k);
        for yi in 0..ny {
            let ys = product_digits(yi, game.ny, k);
            mu[xi * ny + yi] = xs.iter().zip(&ys).map(|(&x, &y)| game.mu(x, y)).product();
        }
    }
    let digits = |n: usize, base: usize| -> Vec<Vec<usize>> { (0..n).map(|i| product_digits(i, base, k)).collect() };
    let (dx, dy, da, db) = (digits(nx, game.nx), digits(ny, game.ny), digits(na, game.na), digits(nb, game.nb));
    let mut predicate = Vec::with_capacity(nx * ny * na * nb);
    for x in &dx {
        for y in &dy {
            for a in &da {
                for b in &db {
                    predicate.push((0..k).all(|i| game.wins(x[i], y[i], a[i], b[i])));
                }
            }
        }
    }
    // μ^k may drift from 1 by rounding only.
    Ok(Game { nx, ny, na, nb, mu, predicate })
}
