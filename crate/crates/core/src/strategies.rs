//! Entangled strategies: validation, evaluation, products and see-saw search.
//!
//! The shared state is a vector on `C^da ⊗ C^db` indexed `i·db + j`; its
//! coefficient matrix `Ψ` is `da × db`. Throughout,
//! `⟨ψ|A ⊗ B|ψ⟩ = Σ_{jj'} (Ψ†AΨ)_{jj'} B_{jj'}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::games::{product_digits, DeterministicStrategy, Game};
use crate::linalg::{self, eigh, CMatrix, C64, ZERO};
use crate::qit::DEFAULT_TOL;
use crate::random::random_projective;
use crate::seeded_rng;

/// Cap on `(local dim)^k` for product strategies.
pub const DEFAULT_LOCAL_DIM_BUDGET: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EntangledStrategy {
    da: usize,
    db: usize,
    shared: Vec<C64>,
    /// `alice[x][a]`, `da × da`.
    alice: Vec<Vec<CMatrix>>,
    /// `bob[y][b]`, `db × db`.
    bob: Vec<Vec<CMatrix>>,
}

fn check_povms(family: &[Vec<CMatrix>], dim: usize, who: &str) -> Result<()> {
    let outcomes = family.first().map(Vec::len).unwrap_or(0);
    if family.is_empty() || outcomes == 0 {
        return Err(Error::InvalidMeasurement(format!("{who}: no questions or no outcomes")));
    }
    for (q, povm) in family.iter().enumerate() {
        if povm.len() != outcomes {
            return Err(Error::InvalidMeasurement(format!(
                "{who}: question {q} has {} outcomes, expected {outcomes}",
                povm.len()
            )));
        }
        let mut total = CMatrix::zeros(dim, dim);
        for (o, m) in povm.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidMeasurement(format!("{who}: element ({q},{o}) is not {dim}×{dim}")));
            }
            if linalg::hermiticity_gap(m) > DEFAULT_TOL {
                return Err(Error::InvalidMeasurement(format!("{who}: element ({q},{o}) is not Hermitian")));
            }
            let min = eigh(m).values.last().copied().unwrap_or(0.0);
            if min < -DEFAULT_TOL {
                return Err(Error::InvalidMeasurement(format!("{who}: element ({q},{o}) has eigenvalue {min}")));
            }
            total += m;
        }
        let gap = (total - linalg::identity(dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if gap > DEFAULT_TOL {
            return Err(Error::InvalidMeasurement(format!("{who}: question {q} sums to identity only within {gap:e}")));
        }
    }
    Ok(())
}

impl EntangledStrategy {
    pub fn new(
        da: usize,
        db: usize,
        shared: Vec<C64>,
        alice: Vec<Vec<CMatrix>>,
        bob: Vec<Vec<CMatrix>>,
    ) -> Result<Self> {
        if shared.len() != da * db {
            return Err(Error::DimensionMismatch { expected: da * db, actual: shared.len() });
        }
        let norm = linalg::norm_sqr(&shared);
        if (norm - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("shared state has squared norm {norm}")));
        }
        check_povms(&alice, da, "alice")?;
        check_povms(&bob, db, "bob")?;
        Ok(EntangledStrategy { da, db, shared, alice, bob })
    }

    /// The deterministic strategy as a one-dimensional entangled strategy.
    pub fn from_deterministic(game: &Game, s: &DeterministicStrategy) -> Result<Self> {
        crate::games::evaluate_deterministic(game, s)?;
        let one = |hit: bool| CMatrix::from_element(1, 1, C64::new(if hit { 1.0 } else { 0.0 }, 0.0));
        let alice = s.f.iter().map(|&fx| (0..game.na()).map(|a| one(a == fx)).collect()).collect();
        let bob = s.g.iter().map(|&gy| (0..game.nb()).map(|b| one(b == gy)).collect()).collect();
        Self::new(1, 1, vec![C64::new(1.0, 0.0)], alice, bob)
    }

    pub fn da(&self) -> usize {
        self.da
    }
    pub fn db(&self) -> usize {
        self.db
    }
    pub fn nx(&self) -> usize {
        self.alice.len()
    }
    pub fn ny(&self) -> usize {
        self.bob.len()
    }
    pub fn na(&self) -> usize {
        self.alice[0].len()
    }
    pub fn nb(&self) -> usize {
        self.bob[0].len()
    }
    pub fn shared(&self) -> &[C64] {
        &self.shared
    }
    pub fn alice(&self) -> &[Vec<CMatrix>] {
        &self.alice
    }
    pub fn bob(&self) -> &[Vec<CMatrix>] {
        &self.bob
    }

    /// `Ψ`, `da × db`.
    pub fn shared_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.da, self.db, |i, j| self.shared[i * self.db + j])
    }

    pub fn check_game(&self, game: &Game) -> Result<()> {
        if (self.nx(), self.ny(), self.na(), self.nb()) != game.sizes() {
            return Err(Error::InvalidStrategy(format!(
                "strategy shape {:?} does not match game {:?}",
                (self.nx(), self.ny(), self.na(), self.nb()),
                game.sizes()
            )));
        }
        Ok(())
    }

    /// `p(a, b | x, y)` indexed `a·nb + b`.
    pub fn answer_distribution(&self, x: usize, y: usize) -> Vec<f64> {
        let psi = self.shared_matrix();
        let conj = self.alice[x].iter().map(|a| psi.adjoint() * a * &psi);
        let mut out = Vec::with_capacity(self.na() * self.nb());
        for c in conj {
            for b in &self.bob[y] {
                out.push(c.iter().zip(b.iter()).map(|(u, v)| (u * v).re).sum());
            }
        }
        out
    }
}

/// Winning probability of `s` on `game`.
pub fn evaluate(game: &Game, s: &EntangledStrategy) -> Result<f64> {
    s.check_game(game)?;
    let psi = s.shared_matrix();
    let conj: Vec<Vec<CMatrix>> =
        s.alice.iter().map(|povm| povm.iter().map(|a| psi.adjoint() * a * &psi).collect()).collect();
    let mut value = 0.0;
    for x in 0..game.nx() {
        for y in 0..game.ny() {
            let mu = game.mu(x, y);
            if mu == 0.0 {
                continue;
            }
            for a in 0..game.na() {
                for b in 0..game.nb() {
                    if game.wins(x, y, a, b) {
                        let p: f64 = conj[x][a].iter().zip(s.bob[y][b].iter()).map(|(u, v)| (u * v).re).sum();
                        value += mu * p;
                    }
                }
            }
        }
    }
    Ok(value)
}

fn rank_one(theta: f64) -> [CMatrix; 2] {
    let (c, s) = (theta.cos(), theta.sin());
    let v0 = linalg::real_vector_pair(c, s);
    let v1 = linalg::real_vector_pair(-s, c);
    [linalg::outer(&v0), linalg::outer(&v1)]
}

/// Optimal CHSH strategy on `(|00⟩+|11⟩)/√2`, value `cos²(π/8)`.
pub fn tsirelson_chsh() -> EntangledStrategy {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};
    let shared = vec![C64::new(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, C64::new(FRAC_1_SQRT_2, 0.0)];
    let alice = [0.0, FRAC_PI_4].iter().map(|&t| rank_one(t).to_vec()).collect();
    let bob = [FRAC_PI_8, -FRAC_PI_8].iter().map(|&t| rank_one(t).to_vec()).collect();
    EntangledStrategy::new(2, 2, shared, alice, bob).expect("valid by construction")
}

pub fn product_strategy(s: &EntangledStrategy, k: usize) -> Result<EntangledStrategy> {
    product_strategy_with_budget(s, k, DEFAULT_LOCAL_DIM_BUDGET)
}

/// `s^{⊗k}` for `G^k`: shared state `ψ^{⊗k}` with Alice's `k` factors
/// grouped first, measurements `⊗_i A^{x_i}_{a_i}`.
pub fn product_strategy_with_budget(s: &EntangledStrategy, k: usize, budget: usize) -> Result<EntangledStrategy> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let pow = |n: usize| n.checked_pow(k as u32);
    let (da, db) = match (pow(s.da), pow(s.db)) {
        (Some(a), Some(b)) if a <= budget && b <= budget => (a, b),
        _ => {
            let required = (s.da.max(s.db) as u128).saturating_pow(k as u32);
            return Err(Error::Budget { required, limit: budget as u128 });
        }
    };
    let mut shared = vec![ZERO; da * db];
    for ai in 0..da {
        let ad = product_digits(ai, s.da, k);
        for bi in 0..db {
            let bd = product_digits(bi, s.db, k);
            shared[ai * db + bi] = (0..k).map(|i| s.shared[ad[i] * s.db + bd[i]]).product();
        }
    }
    let lift = |family: &[Vec<CMatrix>]| -> Vec<Vec<CMatrix>> {
        let (nq, no) = (family.len(), family[0].len());
        (0..nq.pow(k as u32))
            .map(|qi| {
                let qd = product_digits(qi, nq, k);
                (0..no.pow(k as u32))
                    .map(|oi| {
                        let od = product_digits(oi, no, k);
                        (1..k).fold(family[qd[0]][od[0]].clone(), |acc, i| linalg::kron(&acc, &family[qd[i]][od[i]]))
                    })
                    .collect()
            })
            .collect()
    };
    let alice = lift(&s.alice);
    let bob = lift(&s.bob);
    Ok(EntangledStrategy { da, db, shared, alice, bob })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeesawConfig {
    /// Local dimension for both players.
    pub dim: usize,
    pub iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Permit projected ascent for measurements with more than two outcomes.
    pub allow_ascent: bool,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig { dim: 2, iters: 500, restarts: 10, seed: 42, allow_ascent: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeesawReport {
    /// Value after each full iteration of the best restart; non-decreasing.
    pub value_trace: Vec<f64>,
    pub final_value: f64,
    pub restarts_used: usize,
    pub best_restart: usize,
    pub converged: bool,
}

/// Stop once an iteration gains less than this.
pub const SEESAW_CONVERGENCE: f64 = 1e-10;

/// Alternating optimization of the shared state and both measurement
/// families. Every sub-step is an exact (binary outcomes) or monotone
/// (projected ascent) maximization, so values never decrease.
pub fn seesaw(game: &Game, config: &SeesawConfig) -> Result<(EntangledStrategy, SeesawReport)> {
    if config.dim == 0 || config.iters == 0 || config.restarts == 0 {
        return Err(Error::InvalidArgument("dim, iters and restarts must be positive".into()));
    }
    if (game.na() > 2 || game.nb() > 2) && !config.allow_ascent {
        return Err(Error::UnsupportedArity { na: game.na(), nb: game.nb() });
    }
    let runs: Vec<(EntangledStrategy, Vec<f64>, bool)> = (0..config.restarts)
        .into_par_iter()
        .map(|i| run_restart(game, config, config.seed.wrapping_add(i as u64)))
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate().skip(1) {
        if run.1.last() > runs[best].1.last() {
            best = i;
        }
    }
    let (strategy, trace, converged) = runs.into_iter().nth(best).expect("at least one restart");
    let final_value = *trace.last().expect("at least one iteration");
    let report =
        SeesawReport { value_trace: trace, final_value, restarts_used: config.restarts, best_restart: best, converged };
    Ok((strategy, report))
}

fn run_restart(game: &Game, config: &SeesawConfig, seed: u64) -> (EntangledStrategy, Vec<f64>, bool) {
    let d = config.dim;
    let mut rng = seeded_rng(seed);
    let mut alice: Vec<Vec<CMatrix>> = (0..game.nx()).map(|_| random_projective(d, game.na(), &mut rng)).collect();
    let mut bob: Vec<Vec<CMatrix>> = (0..game.ny()).map(|_| random_projective(d, game.nb(), &mut rng)).collect();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut psi = CMatrix::zeros(d, d);
    for _ in 0..config.iters {
        psi = state_step(game, &alice, &bob, d);

        // Alice: maximize Σ Tr(A^x_a Ψ (K^x_a)ᵀ Ψ†).
        for x in 0..game.nx() {
            let r: Vec<CMatrix> = (0..game.na())
                .map(|a| {
                    let k = (0..game.ny()).fold(CMatrix::zeros(d, d), |acc, y| {
                        (0..game.nb())
                            .filter(|&b| game.wins(x, y, a, b))
                            .fold(acc, |acc, b| acc + bob[y][b].scale(game.mu(x, y)))
                    });
                    &psi * k.transpose() * psi.adjoint()
                })
                .collect();
            improve_povm(&mut alice[x], &r);
        }
        // Bob: maximize Σ Tr(B^y_b Ψᵀ (K^y_b)ᵀ Ψ̄).
        for y in 0..game.ny() {
            let r: Vec<CMatrix> = (0..game.nb())
                .map(|b| {
                    let k = (0..game.nx()).fold(CMatrix::zeros(d, d), |acc, x| {
                        (0..game.na())
                            .filter(|&a| game.wins(x, y, a, b))
                            .fold(acc, |acc, a| acc + alice[x][a].scale(game.mu(x, y)))
                    });
                    psi.transpose() * k.transpose() * psi.conjugate()
                })
                .collect();
            improve_povm(&mut bob[y], &r);
        }

        let s = EntangledStrategy { da: d, db: d, shared: flatten_psi(&psi), alice: alice.clone(), bob: bob.clone() };
        let v = evaluate(game, &s).expect("shapes match");
        let gain = trace.last().map(|&prev: &f64| v - prev);
        trace.push(v);
        if gain.is_some_and(|g| g < SEESAW_CONVERGENCE) {
            converged = true;
            break;
        }
    }
    let s = EntangledStrategy { da: d, db: d, shared: flatten_psi(&psi), alice, bob };
    (s, trace, converged)
}

fn flatten_psi(psi: &CMatrix) -> Vec<C64> {
    let (r, c) = psi.shape();
    (0..r * c).map(|i| psi[(i / c, i % c)]).collect()
}

/// Top eigenvector of the game operator `Σ μ V A ⊗ B`, reshaped to `Ψ`.
fn state_step(game: &Game, alice: &[Vec<CMatrix>], bob: &[Vec<CMatrix>], d: usize) -> CMatrix {
    let mut w = CMatrix::zeros(d * d, d * d);
    for x in 0..game.nx() {
        for a in 0..game.na() {
            let k = (0..game.ny()).fold(CMatrix::zeros(d, d), |acc, y| {
                (0..game.nb())
                    .filter(|&b| game.wins(x, y, a, b))
                    .fold(acc, |acc, b| acc + bob[y][b].scale(game.mu(x, y)))
            });
            w += linalg::kron(&alice[x][a], &k);
        }
    }
    let top = eigh(&w).vectors.column(0).clone_owned();
    CMatrix::from_fn(d, d, |i, j| top[i * d + j])
}

fn objective(povm: &[CMatrix], r: &[CMatrix]) -> f64 {
    povm.iter().zip(r).map(|(m, r)| linalg::trace(&(m * r)).re).sum()
}

fn improve_povm(povm: &mut [CMatrix], r: &[CMatrix]) {
    if povm.len() == 2 {
        // Optimal two-outcome measurement: project onto the nonnegative part of R_0 − R_1.
        let d = povm[0].nrows();
        let p0 = linalg::hermitian_map(&(&r[0] - &r[1]), |v| if v >= 0.0 { 1.0 } else { 0.0 });
        povm[1] = linalg::identity(d) - &p0;
        povm[0] = p0;
    } else if povm.len() > 2 {
        projected_ascent(povm, r);
    }
}

/// Step along `R`, clamp to PSD, renormalize with `S^{-1/2}`; accept only improvements.
fn projected_ascent(povm: &mut [CMatrix], r: &[CMatrix]) {
    let d = povm[0].nrows();
    let scale = r.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    let mut eta = 1.0 / scale;
    let mut current = objective(povm, r);
    for _ in 0..200 {
        let stepped: Vec<CMatrix> =
            povm.iter().zip(r).map(|(m, r)| linalg::hermitian_map(&(m + r.scale(eta)), |v| v.max(0.0))).collect();
        let total = stepped.iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m);
        let inv_sqrt = linalg::hermitian_map(&total, |v| if v > 1e-12 { 1.0 / v.sqrt() } else { 0.0 });
        let mut cand: Vec<CMatrix> = stepped.iter().map(|m| &inv_sqrt * m * &inv_sqrt).collect();
        let support = cand.iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m);
        cand[0] += linalg::identity(d) - support;
        let value = objective(&cand, r);
        if value > current + 1e-15 {
            let gain = value - current;
            povm.clone_from_slice(&cand);
            current = value;
            eta *= 1.5;
            if gain < 1e-13 {
                break;
            }
        } else {
            eta *= 0.5;
            if eta * scale < 1e-12 {
                break;
            }
        }
    }
}
