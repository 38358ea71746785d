//! Conditioned states of the k-fold repeated game and the single-game
//! embedding protocol.
//!
//! Coordinates are 0-based in this API; register names are 1-based
//! (`X1` is the question register of coordinate 0).
//!
//! `θ` lives on
//! `Xt1..Xtk X1..Xk Yt1..Ytk Y1..Yk A1..Ak B1..Bk SA NA1..NAk SB NB1..NBk`.
//! `Xt_i`/`Yt_i` are coherent copies of the questions. Each player's POVM is
//! Naimark-dilated as `|s⟩ ↦ Σ_a |a⟩_A |a⟩_NA √M_a|s⟩`, so `NA_i` is an
//! ancilla copy of `A_i`. Alice's purifying space `E_A` is `SA NA A_{C̄}`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::games::{marginals, product_digits, Game};
use crate::io::{fmt_f64, CsvTable};
use crate::linalg::{self, eigh, psd_sqrt, CMatrix, ZERO};
use crate::multireg::{sample_index, LabeledPureState, Register, RegisterLayout, ZERO_PROBABILITY};
use crate::qit::{
    compress_factors, entropy_of_spectrum, relative_entropy, relative_min_entropy, uhlmann_from_matrices, DEFAULT_TOL,
};
use crate::strategies::EntangledStrategy;
use crate::{derive_seed, seeded_rng};

/// Cap on the number of amplitudes of `θ`.
pub const DEFAULT_STATE_BUDGET: u128 = 1 << 22;
/// Public-coin supports larger than this are sampled instead of enumerated.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 4096;

pub fn xt(i: usize) -> String {
    format!("Xt{}", i + 1)
}
pub fn x(i: usize) -> String {
    format!("X{}", i + 1)
}
pub fn yt(i: usize) -> String {
    format!("Yt{}", i + 1)
}
pub fn y(i: usize) -> String {
    format!("Y{}", i + 1)
}
pub fn a(i: usize) -> String {
    format!("A{}", i + 1)
}
pub fn b(i: usize) -> String {
    format!("B{}", i + 1)
}
pub fn na(i: usize) -> String {
    format!("NA{}", i + 1)
}
pub fn nb(i: usize) -> String {
    format!("NB{}", i + 1)
}

/// Registers held by Alice: her question copies, questions, answers, system and ancillas.
pub fn is_alice(name: &str) -> bool {
    name.starts_with('X') || name.starts_with('A') || name == "SA" || name.starts_with("NA")
}

fn check_product(game: &Game) -> Result<()> {
    let w = marginals(game);
    if !w.is_product(DEFAULT_TOL) {
        return Err(Error::NonProduct { residual: w.residual });
    }
    Ok(())
}

fn check_coords(coords: &[usize], k: usize) -> Result<()> {
    for (n, &c) in coords.iter().enumerate() {
        if c >= k {
            return Err(Error::InvalidArgument(format!("coordinate {} outside 1..={k}", c + 1)));
        }
        if coords[..n].contains(&c) {
            return Err(Error::InvalidArgument(format!("coordinate {} repeated", c + 1)));
        }
    }
    Ok(())
}

fn theta_layout(game: &Game, k: usize, da: usize, db: usize) -> Result<RegisterLayout> {
    let mut regs = Vec::with_capacity(8 * k + 2);
    let group = |f: fn(usize) -> String, dim: usize, classical: bool| -> Vec<Register> {
        (0..k).map(|i| if classical { Register::classical(f(i), dim) } else { Register::quantum(f(i), dim) }).collect()
    };
    regs.extend(group(xt, game.nx(), true));
    regs.extend(group(x, game.nx(), true));
    regs.extend(group(yt, game.ny(), true));
    regs.extend(group(y, game.ny(), true));
    regs.extend(group(a, game.na(), true));
    regs.extend(group(b, game.nb(), true));
    regs.push(Register::quantum("SA", da));
    regs.extend(group(na, game.na(), false));
    regs.push(Register::quantum("SB", db));
    regs.extend(group(nb, game.nb(), false));
    RegisterLayout::new(regs)
}

pub fn build_theta(game: &Game, k: usize, s: &EntangledStrategy, coords: &[usize]) -> Result<LabeledPureState> {
    build_theta_with_budget(game, k, s, coords, DEFAULT_STATE_BUDGET)
}

/// The purified global state of strategy `s` (for `G^k`) run on `μ^k`:
/// `Σ √μ(x,y) |x x y y⟩ Σ_{a,b} |a b⟩ ⊗ |a⟩_NA |b⟩_NB ⊗ (√A^x_a ⊗ √B^y_b)|ψ⟩`.
///
/// The state does not depend on `coords`; they are validated here because
/// every consumer interprets `A_C`, `B_C` against the same layout.
pub fn build_theta_with_budget(
    game: &Game,
    k: usize,
    s: &EntangledStrategy,
    coords: &[usize],
    budget: u128,
) -> Result<LabeledPureState> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    check_product(game)?;
    check_coords(coords, k)?;
    let p = |n: usize| n.checked_pow(k as u32).ok_or(Error::Budget { required: u128::MAX, limit: budget });
    let (nxk, nyk, nak, nbk) = (p(game.nx())?, p(game.ny())?, p(game.na())?, p(game.nb())?);
    if (s.nx(), s.ny(), s.na(), s.nb()) != (nxk, nyk, nak, nbk) {
        return Err(Error::InvalidStrategy(format!(
            "strategy shape {:?} is not that of the {k}-fold game {:?}",
            (s.nx(), s.ny(), s.na(), s.nb()),
            (nxk, nyk, nak, nbk)
        )));
    }
    let required = [nxk, nxk, nyk, nyk, nak, nak, nbk, nbk, s.da(), s.db()]
        .iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if required > budget {
        return Err(Error::Budget { required, limit: budget });
    }
    let layout = theta_layout(game, k, s.da(), s.db())?;
    let dims = layout.dims();
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len() - 1).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    // Offsets of the grouped registers: each group of k registers is one
    // mixed-radix number whose flat value times the group's last stride is
    // the contribution of the whole tuple.
    let group_stride = |g: usize| strides[g * k + k - 1];
    let (s_xt, s_x, s_yt, s_y, s_a, s_b) =
        (group_stride(0), group_stride(1), group_stride(2), group_stride(3), group_stride(4), group_stride(5));
    let pos_sa = 6 * k;
    let s_sa = strides[pos_sa];
    let s_na = strides[pos_sa + k];
    let pos_sb = 7 * k + 1;
    let s_sb = strides[pos_sb];
    let s_nb = strides[pos_sb + k];

    let psi = s.shared_matrix();
    let sqrt_a: Vec<Vec<CMatrix>> = s.alice().iter().map(|povm| povm.iter().map(psd_sqrt).collect()).collect();
    let sqrt_b: Vec<Vec<CMatrix>> = s.bob().iter().map(|povm| povm.iter().map(psd_sqrt).collect()).collect();
    let mu_k = |xi: usize, yi: usize| -> f64 {
        let xd = product_digits(xi, game.nx(), k);
        let yd = product_digits(yi, game.ny(), k);
        xd.iter().zip(&yd).map(|(&x, &y)| game.mu(x, y)).product()
    };

    let mut amps = vec![ZERO; layout.total_dim()];
    for xi in 0..nxk {
        for yi in 0..nyk {
            let w = mu_k(xi, yi);
            if w == 0.0 {
                continue;
            }
            let amp = w.sqrt();
            let q_off = xi * (s_xt + s_x) + yi * (s_yt + s_y);
            for ai in 0..nak {
                let left = &sqrt_a[xi][ai] * &psi;
                for bi in 0..nbk {
                    let m = &left * sqrt_b[yi][bi].transpose();
                    let off = q_off + ai * (s_a + s_na) + bi * (s_b + s_nb);
                    for sa in 0..s.da() {
                        for sb in 0..s.db() {
                            amps[off + sa * s_sa + sb * s_sb] = m[(sa, sb)] * amp;
                        }
                    }
                }
            }
        }
    }
    LabeledPureState::new(layout, amps)
}

fn coordinate_count(state: &LabeledPureState) -> usize {
    state.layout().names().iter().filter(|n| n.starts_with('X') && !n.starts_with("Xt")).count()
}

/// `θ`, the success-conditioned `φ` and the normalizer `q`.
#[derive(Debug, Clone)]
pub struct ConditionedGameState {
    pub theta: LabeledPureState,
    pub phi: LabeledPureState,
    pub q: f64,
    pub coords: Vec<usize>,
    pub k: usize,
}

impl ConditionedGameState {
    /// Names of `X̃_{C̄} Ỹ_{C̄} X Y E_A E_B`, i.e. everything but `X̃_C Ỹ_C A_C B_C`.
    pub fn residual_registers(&self) -> Vec<String> {
        let excluded: Vec<String> = self.coords.iter().flat_map(|&c| [xt(c), yt(c), a(c), b(c)]).collect();
        self.theta
            .layout()
            .names()
            .into_iter()
            .filter(|n| !excluded.iter().any(|e| e == n))
            .map(str::to_string)
            .collect()
    }

    fn success_names(&self) -> Vec<String> {
        let c = &self.coords;
        c.iter()
            .map(|&i| x(i))
            .chain(c.iter().map(|&i| y(i)))
            .chain(c.iter().map(|&i| a(i)))
            .chain(c.iter().map(|&i| b(i)))
            .collect()
    }
}

/// Project `θ` onto winning `(x_C, y_C, a_C, b_C)` and renormalize.
pub fn condition_success(theta: &LabeledPureState, game: &Game, coords: &[usize]) -> Result<ConditionedGameState> {
    let k = coordinate_count(theta);
    check_coords(coords, k)?;
    let names: Vec<String> = coords
        .iter()
        .map(|&i| x(i))
        .chain(coords.iter().map(|&i| y(i)))
        .chain(coords.iter().map(|&i| a(i)))
        .chain(coords.iter().map(|&i| b(i)))
        .collect();
    let c = coords.len();
    let (amps, q) =
        theta.project_where(&names, |d| (0..c).all(|i| game.wins(d[i], d[c + i], d[2 * c + i], d[3 * c + i])))?;
    if q <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability);
    }
    let phi = LabeledPureState::normalized(theta.layout().clone(), amps)?;
    Ok(ConditionedGameState { theta: theta.clone(), phi, q, coords: coords.to_vec(), k })
}

/// Both sides of the relative-entropy budget
/// `E D(φ_{x_C y_C a_C b_C} ‖ θ_{x_C y_C}) ≤ −log q + |C| log(na·nb)` on the
/// residual registers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl BudgetCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-9
    }
}

pub fn lemma7_budget(cgs: &ConditionedGameState, game: &Game) -> Result<BudgetCheck> {
    let names = cgs.success_names();
    let c = cgs.coords.len();
    let dist = cgs.phi.outcome_distribution(&names)?;
    let dims: Vec<usize> =
        cgs.phi.layout().positions(&names)?.iter().map(|&p| cgs.phi.layout().registers()[p].dim).collect();
    let copies: Vec<String> = cgs.coords.iter().flat_map(|&i| [xt(i), yt(i)]).collect();
    let mut theta_cache: Vec<(Vec<usize>, CMatrix)> = Vec::new();
    let mut lhs = 0.0;
    for (index, &p) in dist.iter().enumerate() {
        if p <= ZERO_PROBABILITY {
            continue;
        }
        let digits = linalg::unflatten(index, &dims);
        let assignment: Vec<(&str, usize)> = names.iter().map(String::as_str).zip(digits.iter().copied()).collect();
        // X_C, Y_C are fixed to the same values in both states and can be dropped.
        let (phi_r, _) = cgs.phi.restrict(&assignment)?;
        let keep: Vec<&str> = phi_r.layout().names().into_iter().filter(|n| !copies.iter().any(|cp| cp == n)).collect();
        let f_phi = phi_r.reduced_factor(&keep)?;
        let qd = digits[..2 * c].to_vec();
        let f_theta = match theta_cache.iter().find(|(d, _)| *d == qd) {
            Some((_, f)) => f.clone(),
            None => {
                let (theta_r, _) = cgs.theta.restrict(&assignment[..2 * c])?;
                let f = theta_r.reduced_factor(&keep)?;
                theta_cache.push((qd, f.clone()));
                f
            }
        };
        let small = compress_factors(&[&f_phi, &f_theta])?;
        lhs += p * relative_entropy(&small[0], &small[1])?;
    }
    let rhs = -cgs.q.log2() + c as f64 * ((game.na() * game.nb()) as f64).log2();
    Ok(BudgetCheck { lhs, rhs })
}

/// `D∞(φ ‖ θ)` on the residual registers against `log₂(1/q)`.
pub fn lemma3_check(cgs: &ConditionedGameState) -> Result<BudgetCheck> {
    let keep = cgs.residual_registers();
    let f_phi = cgs.phi.reduced_factor(&keep)?;
    let f_theta = cgs.theta.reduced_factor(&keep)?;
    let small = compress_factors(&[&f_phi, &f_theta])?;
    Ok(BudgetCheck { lhs: relative_min_entropy(&small[0], &small[1])?, rhs: -cgs.q.log2() })
}

/// `Pr[T_j = 1 | success on C]`. The dilated state already carries every
/// coordinate's answers, so no strategy argument is needed.
pub fn coordinate_success(cgs: &ConditionedGameState, game: &Game, j: usize) -> Result<f64> {
    if j >= cgs.k || cgs.coords.contains(&j) {
        return Err(Error::InvalidArgument(format!("coordinate {} must lie outside C", j + 1)));
    }
    let dist = cgs.phi.outcome_distribution(&[x(j), y(j), a(j), b(j)])?;
    let (nx, ny, na, nb) = game.sizes();
    let mut v = 0.0;
    for (i, p) in dist.iter().enumerate() {
        let d = linalg::unflatten(i, &[nx, ny, na, nb]);
        if game.wins(d[0], d[1], d[2], d[3]) {
            v += p;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    /// Sampled protocol runs; `None` reports the exact value.
    pub shots: Option<u64>,
    pub seed: u64,
    pub enumeration_limit: usize,
    /// Coins drawn when the support exceeds `enumeration_limit`.
    pub coin_samples: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            shots: None,
            seed: 42,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
            coin_samples: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDiagnostics {
    pub j: usize,
    pub omega_j: f64,
    /// `I(X_j : Bob | R_j)` in bits.
    pub eps_x: f64,
    /// `I(Y_j : Alice | R_j)` in bits.
    pub eps_y: f64,
    /// `E_r ‖φ_r^{X_jY_j} − φ_r^{X_j} ⊗ φ_r^{Y_j}‖₁`.
    pub gamma: f64,
    /// `E_{xy} ‖φ^{R_j}_{xy} − φ^{R_j}‖₁`.
    pub tau: f64,
    /// `‖φ^{X_jY_j} − μ‖₁`.
    pub kappa: f64,
    /// Sampled win rate, or the exact value without shots.
    pub p4_value: f64,
    pub p4_exact: f64,
    /// Binomial standard error of `p4_value`; 0 when exact.
    pub p4_stderr: f64,
    pub coin_support: usize,
    pub coins_sampled: bool,
}

impl EmbeddingDiagnostics {
    /// `4√eps_x + 4√eps_y + 2γ + τ + κ`.
    pub fn degradation(&self) -> f64 {
        4.0 * self.eps_x.sqrt() + 4.0 * self.eps_y.sqrt() + 2.0 * self.gamma + self.tau + self.kappa
    }

    /// `p4 ≥ ω_j − degradation − 3σ` (coin-sampling error is not included).
    pub fn chain_holds(&self) -> bool {
        self.p4_value >= self.omega_j - self.degradation() - 3.0 * self.p4_stderr - 1e-9
    }
}

/// Per-coin protocol data.
struct CoinRun {
    eps_x: f64,
    eps_y: f64,
    gamma: f64,
    /// `p(a, b)` for each `(x', y')`, indexed `[x'·ny + y'][a·nb + b]`.
    answers: Vec<Vec<f64>>,
}

fn factor_entropy(m: &CMatrix) -> f64 {
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let t = linalg::trace(&gram).re;
    if t <= 0.0 {
        return 0.0;
    }
    let vals: Vec<f64> = eigh(&gram).values.iter().map(|v| v / t).collect();
    entropy_of_spectrum(&vals)
}

fn masked(m: &CMatrix, keep_row: impl Fn(usize) -> bool, keep_col: impl Fn(usize) -> bool) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| if keep_row(r) && keep_col(c) { m[(r, c)] } else { ZERO })
}

/// One public-coin value: Uhlmann corrections for each question, and the
/// answer distribution after applying them to `φ_r`.
fn run_coin(phi_r: &LabeledPureState, game: &Game, j: usize) -> Result<CoinRun> {
    let names = phi_r.layout().names();
    let alice: Vec<&str> = names.iter().copied().filter(|n| is_alice(n)).collect();
    let bob: Vec<&str> = names.iter().copied().filter(|n| !is_alice(n)).collect();
    let full = phi_r.matrix(&bob)?; // Bob × Alice
    let dims_of = |regs: &[&str]| -> Vec<usize> {
        regs.iter().map(|n| phi_r.layout().dim_of(&[*n]).expect("register exists")).collect()
    };
    let (adims, bdims) = (dims_of(&alice), dims_of(&bob));
    let (xpos, apos) =
        (alice.iter().position(|n| *n == x(j)).expect("X_j"), alice.iter().position(|n| *n == a(j)).expect("A_j"));
    let (ypos, bpos) =
        (bob.iter().position(|n| *n == y(j)).expect("Y_j"), bob.iter().position(|n| *n == b(j)).expect("B_j"));

    // Vectors of φ_r live on the span of its nonzero basis states; work there.
    let cols: Vec<usize> = (0..full.ncols()).filter(|&c| full.column(c).iter().any(|z| *z != ZERO)).collect();
    let rows: Vec<usize> = (0..full.nrows()).filter(|&r| full.row(r).iter().any(|z| *z != ZERO)).collect();
    let m = CMatrix::from_fn(rows.len(), cols.len(), |r, c| full[(rows[r], cols[c])]);
    let col_digits: Vec<Vec<usize>> = cols.iter().map(|&c| linalg::unflatten(c, &adims)).collect();
    let row_digits: Vec<Vec<usize>> = rows.iter().map(|&r| linalg::unflatten(r, &bdims)).collect();
    let (xj, aj): (Vec<usize>, Vec<usize>) = col_digits.iter().map(|d| (d[xpos], d[apos])).unzip();
    let (yj, bj): (Vec<usize>, Vec<usize>) = row_digits.iter().map(|d| (d[ypos], d[bpos])).unzip();

    let (nx, ny, na, nb) = game.sizes();
    let mut pxy = vec![0.0; nx * ny];
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            pxy[xj[c] * ny + yj[r]] += m[(r, c)].norm_sqr();
        }
    }
    let px: Vec<f64> = (0..nx).map(|x| (0..ny).map(|y| pxy[x * ny + y]).sum()).collect();
    let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| pxy[x * ny + y]).sum()).collect();
    let gamma = (0..nx * ny).map(|i| (pxy[i] - px[i / ny] * py[i % ny]).abs()).sum();

    // X_j is decohered by its copy, so I(X_j : Bob) = S(Bob) − Σ p_x S(Bob | x).
    let s_total = factor_entropy(&m);
    let mut eps_x = s_total;
    let mut u: Vec<CMatrix> = Vec::with_capacity(nx);
    for xv in 0..nx {
        if px[xv] <= ZERO_PROBABILITY {
            u.push(linalg::identity(m.ncols()));
            continue;
        }
        let mx = masked(&m, |_| true, |c| xj[c] == xv).unscale(px[xv].sqrt());
        eps_x -= px[xv] * factor_entropy(&mx);
        u.push(uhlmann_from_matrices(&m, &mx));
    }
    let mt = m.transpose();
    let mut eps_y = s_total;
    let mut v: Vec<CMatrix> = Vec::with_capacity(ny);
    for yv in 0..ny {
        if py[yv] <= ZERO_PROBABILITY {
            v.push(linalg::identity(m.nrows()));
            continue;
        }
        let my = masked(&mt, |_| true, |r| yj[r] == yv).unscale(py[yv].sqrt());
        eps_y -= py[yv] * factor_entropy(&my);
        v.push(uhlmann_from_matrices(&mt, &my));
    }

    let mut answers = Vec::with_capacity(nx * ny);
    for xv in 0..nx {
        let right = m.clone() * u[xv].transpose();
        for yv in 0..ny {
            let moved = &v[yv] * &right;
            let mut dist = vec![0.0; na * nb];
            for r in 0..moved.nrows() {
                for c in 0..moved.ncols() {
                    dist[aj[c] * nb + bj[r]] += moved[(r, c)].norm_sqr();
                }
            }
            answers.push(dist);
        }
    }
    Ok(CoinRun { eps_x: eps_x.max(0.0), eps_y: eps_y.max(0.0), gamma, answers })
}

/// The single-game protocol extracted from `φ` at coordinate `j`: public
/// coin `r_j ← φ^{R_j}` with `R_j = X_C Y_C X_{<j} Y_{<j} A_C B_C`, fresh
/// questions `(x', y') ← μ`, Uhlmann corrections `U_{x'} ⊗ V_{y'}` on `φ_{r_j}`,
/// then `A_j B_j` are measured.
pub fn embed_single_game(
    cgs: &ConditionedGameState,
    game: &Game,
    j: usize,
    config: &EmbeddingConfig,
) -> Result<EmbeddingDiagnostics> {
    check_product(game)?;
    let omega_j = coordinate_success(cgs, game, j)?;
    let (nx, ny, na, nb) = game.sizes();
    let c = &cgs.coords;
    let fixed_q: Vec<usize> = (0..cgs.k).filter(|i| c.contains(i) || *i < j).collect();
    let mut r_names: Vec<String> = fixed_q.iter().map(|&i| x(i)).chain(fixed_q.iter().map(|&i| y(i))).collect();
    r_names.extend(c.iter().map(|&i| a(i)).chain(c.iter().map(|&i| b(i))));
    // Copies of coin registers are fixed along with them.
    let copy_of = |name: &str| -> String {
        match name.chars().next() {
            Some('X') => format!("Xt{}", &name[1..]),
            Some('Y') => format!("Yt{}", &name[1..]),
            Some('A') => format!("NA{}", &name[1..]),
            _ => format!("NB{}", &name[1..]),
        }
    };
    let layout = cgs.phi.layout();
    let r_dims: Vec<usize> = r_names.iter().map(|n| layout.dim_of(&[n.as_str()])).collect::<Result<_>>()?;
    let r_count: usize = r_dims.iter().product();

    let mut joint_names = r_names.clone();
    joint_names.push(x(j));
    joint_names.push(y(j));
    let joint = cgs.phi.outcome_distribution(&joint_names)?;
    let p_r: Vec<f64> = (0..r_count).map(|r| joint[r * nx * ny..(r + 1) * nx * ny].iter().sum()).collect();
    let p_xy: Vec<f64> = (0..nx * ny).map(|q| (0..r_count).map(|r| joint[r * nx * ny + q]).sum()).collect();
    let tau = (0..r_count)
        .flat_map(|r| (0..nx * ny).map(move |q| (r, q)))
        .map(|(r, q)| (joint[r * nx * ny + q] - p_r[r] * p_xy[q]).abs())
        .sum();
    let kappa = crate::qit::l1_distance(&p_xy, game.mu_flat());

    let support: Vec<usize> = (0..r_count).filter(|&r| p_r[r] > ZERO_PROBABILITY).collect();
    let coins_sampled = support.len() > config.enumeration_limit;
    let coins: Vec<(usize, f64)> = if coins_sampled {
        let mut rng = seeded_rng(derive_seed(config.seed, 1, j as u64));
        let mut counts = vec![0usize; r_count];
        for _ in 0..config.coin_samples {
            counts[sample_index(&p_r, &mut rng)] += 1;
        }
        let n = config.coin_samples as f64;
        counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(r, &c)| (r, c as f64 / n)).collect()
    } else {
        let total: f64 = support.iter().map(|&r| p_r[r]).sum();
        support.iter().map(|&r| (r, p_r[r] / total)).collect()
    };

    let runs: Vec<CoinRun> = coins
        .par_iter()
        .map(|&(r, _)| {
            let digits = linalg::unflatten(r, &r_dims);
            let copies: Vec<String> = r_names.iter().map(|n| copy_of(n)).collect();
            let mut assignment: Vec<(&str, usize)> =
                r_names.iter().map(String::as_str).zip(digits.iter().copied()).collect();
            assignment.extend(copies.iter().map(String::as_str).zip(digits.iter().copied()));
            let (phi_r, _) = cgs.phi.restrict(&assignment)?;
            run_coin(&phi_r, game, j)
        })
        .collect::<Result<_>>()?;

    let mut eps_x = 0.0;
    let mut eps_y = 0.0;
    let mut gamma = 0.0;
    let mut p4_exact = 0.0;
    for ((_, w), run) in coins.iter().zip(&runs) {
        eps_x += w * run.eps_x;
        eps_y += w * run.eps_y;
        gamma += w * run.gamma;
        for (q, dist) in run.answers.iter().enumerate() {
            let (xv, yv) = (q / ny, q % ny);
            let win: f64 = (0..na * nb).filter(|&ab| game.wins(xv, yv, ab / nb, ab % nb)).map(|ab| dist[ab]).sum();
            p4_exact += w * game.mu(xv, yv) * win;
        }
    }

    let (p4_value, p4_stderr) = match config.shots {
        None => (p4_exact, 0.0),
        Some(0) => return Err(Error::InvalidArgument("shots must be positive".into())),
        Some(shots) => {
            let mut rng = seeded_rng(derive_seed(config.seed, 2, j as u64));
            let weights: Vec<f64> = coins.iter().map(|c| c.1).collect();
            let mut wins = 0u64;
            for _ in 0..shots {
                let run = &runs[sample_index(&weights, &mut rng)];
                let q = sample_index(game.mu_flat(), &mut rng);
                let ab = sample_index(&run.answers[q], &mut rng);
                if game.wins(q / ny, q % ny, ab / nb, ab % nb) {
                    wins += 1;
                }
            }
            let n = shots as f64;
            (wins as f64 / n, (p4_exact * (1.0 - p4_exact)).max(0.0).sqrt() / n.sqrt())
        }
    };

    Ok(EmbeddingDiagnostics {
        j,
        omega_j,
        eps_x,
        eps_y,
        gamma,
        tau,
        kappa,
        p4_value,
        p4_exact,
        p4_stderr,
        coin_support: support.len(),
        coins_sampled,
    })
}

/// `(1 − ε/2)^{ε² k / (12000 (log₂ na + log₂ nb))}`.
pub fn theorem_bound(epsilon: f64, k: u64, na: usize, nb: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if na == 0 || nb == 0 || na * nb < 2 {
        return Err(Error::InvalidArgument("need na·nb ≥ 2".into()));
    }
    let exponent = epsilon * epsilon * k as f64 / (12000.0 * ((na as f64).log2() + (nb as f64).log2()));
    Ok((1.0 - epsilon / 2.0).powf(exponent))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub delta1: f64,
    pub delta2: f64,
    /// Reference single-game value (typically a see-saw lower bound on ω*).
    pub omega_oracle: f64,
    /// Coordinates conditioned on before the first step.
    pub initial_coords: Vec<usize>,
    pub embedding: EmbeddingConfig,
}

impl ScanConfig {
    pub fn delta3(&self, game: &Game) -> f64 {
        self.delta2 + self.delta1 * ((game.na() * game.nb()) as f64).log2()
    }

    /// `ω_oracle + 12√(10 δ₃)`.
    pub fn bound_rhs(&self, game: &Game) -> f64 {
        self.omega_oracle + 12.0 * (10.0 * self.delta3(game)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanStep {
    /// 1-based.
    pub step: usize,
    pub coords: Vec<usize>,
    pub q: f64,
    pub j: usize,
    pub omega_j: f64,
    pub diagnostics: EmbeddingDiagnostics,
    pub bound_rhs: f64,
    /// `q ≤ 2^{−δ₂k}` or `ω_j ≤ bound_rhs`.
    pub dichotomy_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub k: usize,
    pub steps: Vec<ScanStep>,
    /// Set when conditioning on the current coordinates has zero probability.
    pub halted: Option<Vec<usize>>,
    /// `q` for the final coordinate set when every coordinate was added.
    pub final_q: Option<f64>,
}

impl ScanReport {
    pub fn all_hold(&self) -> bool {
        self.steps.iter().all(|s| s.dichotomy_holds)
    }

    /// `step,j,q,omega_j,eps_x,eps_y,gamma,tau,kappa,p4_value,bound_rhs`;
    /// coordinates 1-based. A trailing row with only `q` reports the halt
    /// (`q = 0`) or the success probability on all `k` coordinates.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "step",
            "j",
            "q",
            "omega_j",
            "eps_x",
            "eps_y",
            "gamma",
            "tau",
            "kappa",
            "p4_value",
            "bound_rhs",
        ]);
        for s in &self.steps {
            let d = &s.diagnostics;
            let mut row = vec![s.step.to_string(), (s.j + 1).to_string(), fmt_f64(s.q), fmt_f64(s.omega_j)];
            row.extend([d.eps_x, d.eps_y, d.gamma, d.tau, d.kappa, d.p4_value, s.bound_rhs].map(fmt_f64));
            t.push(row);
        }
        let tail = if self.halted.is_some() { Some(0.0) } else { self.final_q };
        if let Some(q) = tail {
            let mut row = vec![(self.steps.len() + 1).to_string(), String::new(), fmt_f64(q)];
            row.extend(std::iter::repeat_n(String::new(), 8));
            t.push(row);
        }
        t
    }
}

/// Grow `C` one coordinate at a time, always adding the `j ∉ C` with the
/// smallest conditional success (smallest index on ties), and check the
/// dichotomy at each step.
pub fn lemma8_scan(game: &Game, k: usize, s: &EntangledStrategy, config: &ScanConfig) -> Result<ScanReport> {
    let theta = build_theta(game, k, s, &config.initial_coords)?;
    let threshold = 2f64.powf(-config.delta2 * k as f64);
    let bound_rhs = config.bound_rhs(game);
    let mut coords = config.initial_coords.clone();
    let mut steps = Vec::new();
    let mut halted = None;
    while coords.len() < k {
        let cgs = match condition_success(&theta, game, &coords) {
            Ok(cgs) => cgs,
            Err(Error::ZeroProbability) => {
                halted = Some(coords.clone());
                break;
            }
            Err(e) => return Err(e),
        };
        let candidates: Vec<usize> = (0..k).filter(|i| !coords.contains(i)).collect();
        let omegas: Vec<f64> = candidates.iter().map(|&j| coordinate_success(&cgs, game, j)).collect::<Result<_>>()?;
        let mut best = 0;
        for i in 1..candidates.len() {
            if omegas[i] < omegas[best] - 1e-12 {
                best = i;
            }
        }
        let j = candidates[best];
        let emb = EmbeddingConfig {
            seed: derive_seed(config.embedding.seed, 3, steps.len() as u64),
            ..config.embedding.clone()
        };
        let diagnostics = embed_single_game(&cgs, game, j, &emb)?;
        let omega_j = omegas[best];
        steps.push(ScanStep {
            step: steps.len() + 1,
            coords: coords.clone(),
            q: cgs.q,
            j,
            omega_j,
            diagnostics,
            bound_rhs,
            dichotomy_holds: cgs.q <= threshold || omega_j <= bound_rhs,
        });
        coords.push(j);
    }
    let final_q = if halted.is_none() {
        match condition_success(&theta, game, &coords) {
            Ok(cgs) => Some(cgs.q),
            Err(Error::ZeroProbability) => {
                halted = Some(coords.clone());
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(ScanReport { k, steps, halted, final_q })
}

/// Monte Carlo estimate of winning every coordinate in `coords` by direct
/// Born-rule sampling of `s` on `G^k`; returns `(estimate, standard error)`.
pub fn sample_success<R: Rng + ?Sized>(
    game: &Game,
    k: usize,
    s: &EntangledStrategy,
    coords: &[usize],
    shots: u64,
    rng: &mut R,
) -> (f64, f64) {
    let (nxk, nyk) = (game.nx().pow(k as u32), game.ny().pow(k as u32));
    let nbk = game.nb().pow(k as u32);
    let mu: Vec<f64> = (0..nxk * nyk)
        .map(|q| {
            let xd = product_digits(q / nyk, game.nx(), k);
            let yd = product_digits(q % nyk, game.ny(), k);
            (0..k).map(|i| game.mu(xd[i], yd[i])).product()
        })
        .collect();
    let dists: Vec<Vec<f64>> = (0..nxk * nyk).map(|q| s.answer_distribution(q / nyk, q % nyk)).collect();
    let mut wins = 0u64;
    for _ in 0..shots {
        let q = sample_index(&mu, rng);
        let ab = sample_index(&dists[q], rng);
        let (xd, yd) = (product_digits(q / nyk, game.nx(), k), product_digits(q % nyk, game.ny(), k));
        let (ad, bd) = (product_digits(ab / nbk, game.na(), k), product_digits(ab % nbk, game.nb(), k));
        if coords.iter().all(|&i| game.wins(xd[i], yd[i], ad[i], bd[i])) {
            wins += 1;
        }
    }
    let p = wins as f64 / shots as f64;
    (p, (p * (1.0 - p) / shots as f64).sqrt())
}
