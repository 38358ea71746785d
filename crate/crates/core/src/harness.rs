//! Seeded randomized checks of the information-theoretic inequalities.
//!
//! Each verifier runs independent trials (seed per trial derived from the
//! run seed), records `(lhs, rhs, slack = rhs − lhs)` and counts violations.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvTable};
use crate::linalg::{self, CMatrix, C64};
use crate::multireg::{LabeledPureState, Register, RegisterLayout};
use crate::qit::{
    classical_relative_entropy, fidelity, l1_distance, mutual_information, partial_trace, pure_trace_distance,
    relative_entropy, relative_min_entropy, trace_norm_distance, uhlmann_from_matrices, ClassicalQuantumState,
    DensityOperator,
};
use crate::random::{haar_unitary, random_density_with, random_probability, random_projector, random_unit_vector};
use crate::{derive_seed, seeded_rng, SeededRng};

/// An inequality trial fails when `slack < −VIOLATION_SLACK`.
pub const VIOLATION_SLACK: f64 = 1e-7;
/// An equality trial fails when `|lhs − rhs| > EQUALITY_SLACK`.
pub const EQUALITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStateSpec {
    pub dim: usize,
    pub rank: usize,
    pub seed: u64,
}

pub fn random_density(spec: RandomStateSpec) -> Result<DensityOperator> {
    if spec.rank == 0 || spec.rank > spec.dim {
        return Err(Error::InvalidArgument(format!("rank {} outside 1..={}", spec.rank, spec.dim)));
    }
    Ok(random_density_with(spec.dim, spec.rank, &mut seeded_rng(spec.seed)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// `lhs ≤ rhs`.
    Inequality,
    /// `lhs = rhs`; slack is `−|lhs − rhs|`.
    Equality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifierReport {
    pub name: String,
    pub kind: CheckKind,
    pub records: Vec<TrialRecord>,
    pub violations: usize,
    pub worst_slack: f64,
    /// Reported but excluded from the pass/fail verdict.
    pub diagnostic: bool,
    /// Largest `| |⟨φ_x|U φ⟩| − F |` over extracted Uhlmann unitaries.
    pub max_uhlmann_gap: Option<f64>,
}

impl VerifierReport {
    fn new(name: &str, kind: CheckKind, raw: Vec<(usize, u64, f64, f64)>) -> Self {
        let records: Vec<TrialRecord> = raw
            .into_iter()
            .map(|(trial, seed, lhs, rhs)| {
                let slack = match kind {
                    CheckKind::Inequality => rhs - lhs,
                    CheckKind::Equality => -(lhs - rhs).abs(),
                };
                TrialRecord { trial, seed, lhs, rhs, slack }
            })
            .collect();
        let limit = match kind {
            CheckKind::Inequality => VIOLATION_SLACK,
            CheckKind::Equality => EQUALITY_SLACK,
        };
        let violations = records.iter().filter(|r| r.slack.is_nan() || r.slack < -limit).count();
        let worst_slack = records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        VerifierReport {
            name: name.into(),
            kind,
            records,
            violations,
            worst_slack,
            diagnostic: false,
            max_uhlmann_gap: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["trial", "seed", "lhs", "rhs", "slack"]);
        for r in &self.records {
            t.push(vec![r.trial.to_string(), r.seed.to_string(), fmt_f64(r.lhs), fmt_f64(r.rhs), fmt_f64(r.slack)]);
        }
        t
    }
}

/// Run `trials` independent trials in parallel; results stay in trial order.
fn run_trials<T: Send>(
    trials: usize,
    seed: u64,
    stream: u64,
    f: impl Fn(&mut SeededRng) -> T + Sync,
) -> Vec<(usize, u64, T)> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, stream, t as u64);
            (t, s, f(&mut seeded_rng(s)))
        })
        .collect()
}

/// How the per-question states `|ψ_x⟩` relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFamily {
    /// One state for every question.
    Identical,
    /// `|α_x⟩ ⊗ |β_y⟩` (two-sided) or `|α_x⟩ ⊗ |β⟩` (one-sided).
    Product,
    /// `normalize((1−s)|base⟩ + s|g_x⟩)` with a per-trial spread `s ~ U[0,1]`,
    /// covering near-identical through independent states.
    Perturbed,
}

fn perturbed_family<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let spread: f64 = rng.random();
    let base = random_unit_vector(dim, rng);
    (0..count)
        .map(|_| {
            let g = random_unit_vector(dim, rng);
            let mut v: Vec<C64> = base.iter().zip(&g).map(|(b, g)| b * (1.0 - spread) + g * spread).collect();
            let n = linalg::norm_sqr(&v).sqrt();
            v.iter_mut().for_each(|z| *z /= n);
            v
        })
        .collect()
}

fn flat(m: &CMatrix) -> Vec<C64> {
    (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect()
}

/// `|⟨target|(I ⊗ U)|source⟩| − F` for coefficient matrices `system × purifier`.
fn uhlmann_gap(source: &CMatrix, target: &CMatrix, u: &CMatrix) -> Result<f64> {
    let moved = source * u.transpose();
    let overlap = linalg::inner(&flat(target), &flat(&moved)).norm();
    let f = fidelity(
        &DensityOperator::assume_valid(source * source.adjoint()),
        &DensityOperator::assume_valid(target * target.adjoint()),
    )?;
    Ok((overlap - f).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma5Config {
    pub nx: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub trials: usize,
    pub seed: u64,
    pub family: StateFamily,
}

impl Default for Lemma5Config {
    fn default() -> Self {
        Lemma5Config { nx: 3, dim_a: 3, dim_b: 3, trials: 500, seed: 42, family: StateFamily::Perturbed }
    }
}

/// One-sided transformation: `E_x ‖φ_x − (U_x ⊗ I)φ‖₁ ≤ 4√I(X:B)`.
pub fn verify_lemma5(cfg: &Lemma5Config) -> Result<VerifierReport> {
    let (nx, da, db) = (cfg.nx, cfg.dim_a, cfg.dim_b);
    let layout = RegisterLayout::new(vec![
        Register::classical("Xt", nx),
        Register::classical("X", nx),
        Register::quantum("A", da),
        Register::quantum("B", db),
    ])?;
    let runs = run_trials(cfg.trials, cfg.seed, 5, |rng| -> Result<(f64, f64, f64)> {
        let mu = random_probability(nx, rng);
        let psis = match cfg.family {
            StateFamily::Perturbed => perturbed_family(nx, da * db, rng),
            StateFamily::Identical => vec![random_unit_vector(da * db, rng); nx],
            StateFamily::Product => {
                let beta = random_unit_vector(db, rng);
                (0..nx).map(|_| linalg::kron_vec(&random_unit_vector(da, rng), &beta)).collect()
            }
        };
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        for x in 0..nx {
            for (i, z) in psis[x].iter().enumerate() {
                amps[(x * nx + x) * da * db + i] = z * mu[x].sqrt();
            }
        }
        let phi = LabeledPureState::new(layout.clone(), amps)?;
        let eps = mutual_information(&phi.reduced_state(&["X", "B"])?, &[nx, db], &[0])?;
        let m = phi.matrix(&["B"])?;
        let (mut lhs, mut gap) = (0.0, 0.0f64);
        for x in 0..nx {
            let (phi_x, _) = phi.condition_on(&[("X", x)])?;
            let mx = phi_x.matrix(&["B"])?;
            let u = uhlmann_from_matrices(&m, &mx);
            lhs += mu[x] * pure_trace_distance(&flat(&mx), &flat(&(&m * u.transpose())));
            gap = gap.max(uhlmann_gap(&m, &mx, &u)?);
        }
        Ok((lhs, 4.0 * eps.sqrt(), gap))
    });
    collect_uhlmann("lemma5", runs)
}

/// `(lhs, rhs, max Uhlmann gap)` of one trial.
type UhlmannTrial = Result<(f64, f64, f64)>;

fn collect_uhlmann(name: &str, runs: Vec<(usize, u64, UhlmannTrial)>) -> Result<VerifierReport> {
    let mut raw = Vec::with_capacity(runs.len());
    let mut gap = 0.0f64;
    for (t, s, r) in runs {
        let (lhs, rhs, g) = r?;
        gap = gap.max(g);
        raw.push((t, s, lhs, rhs));
    }
    let mut rep = VerifierReport::new(name, CheckKind::Inequality, raw);
    rep.max_uhlmann_gap = Some(gap);
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma6Config {
    pub nx: usize,
    pub ny: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub trials: usize,
    pub seed: u64,
    pub family: StateFamily,
    /// Draw a generic joint μ instead of `μ_X ⊗ μ_Y`.
    pub correlated: bool,
}

impl Default for Lemma6Config {
    fn default() -> Self {
        Lemma6Config {
            nx: 2,
            ny: 2,
            dim_a: 2,
            dim_b: 2,
            trials: 200,
            seed: 42,
            family: StateFamily::Perturbed,
            correlated: false,
        }
    }
}

/// Two-sided transformation:
/// `E_{xy} ‖φ_{xy} − (U_x ⊗ V_y)φ‖₁ ≤ 8√ε + 2‖μ − μ_X ⊗ μ_Y‖₁`.
pub fn verify_lemma6(cfg: &Lemma6Config) -> Result<VerifierReport> {
    let (nx, ny, da, db) = (cfg.nx, cfg.ny, cfg.dim_a, cfg.dim_b);
    let layout = RegisterLayout::new(vec![
        Register::classical("Xt", nx),
        Register::classical("X", nx),
        Register::classical("Yt", ny),
        Register::classical("Y", ny),
        Register::quantum("A", da),
        Register::quantum("B", db),
    ])?;
    let bob = ["Yt", "Y", "B"];
    let runs = run_trials(cfg.trials, cfg.seed, 6, |rng| -> Result<(f64, f64, f64)> {
        let mu: Vec<f64> = if cfg.correlated {
            random_probability(nx * ny, rng)
        } else {
            let (px, py) = (random_probability(nx, rng), random_probability(ny, rng));
            px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect()
        };
        let psis = match cfg.family {
            StateFamily::Perturbed => perturbed_family(nx * ny, da * db, rng),
            StateFamily::Identical => vec![random_unit_vector(da * db, rng); nx * ny],
            StateFamily::Product => {
                let alphas: Vec<Vec<C64>> = (0..nx).map(|_| random_unit_vector(da, rng)).collect();
                let betas: Vec<Vec<C64>> = (0..ny).map(|_| random_unit_vector(db, rng)).collect();
                (0..nx * ny).map(|q| linalg::kron_vec(&alphas[q / ny], &betas[q % ny])).collect()
            }
        };
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        for x in 0..nx {
            for y in 0..ny {
                let base = (((x * nx + x) * ny + y) * ny + y) * da * db;
                for (i, z) in psis[x * ny + y].iter().enumerate() {
                    amps[base + i] = z * mu[x * ny + y].sqrt();
                }
            }
        }
        let phi = LabeledPureState::new(layout.clone(), amps)?;
        let ex = mutual_information(&phi.reduced_state(&["X", "Yt", "Y", "B"])?, &[nx, ny, ny, db], &[0])?;
        let ey = mutual_information(&phi.reduced_state(&["Xt", "X", "Y", "A"])?, &[nx, nx, ny, da], &[2])?;
        let px: Vec<f64> = (0..nx).map(|x| (0..ny).map(|y| mu[x * ny + y]).sum()).collect();
        let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| mu[x * ny + y]).sum()).collect();
        let prod: Vec<f64> = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
        let rhs = 8.0 * ex.max(ey).sqrt() + 2.0 * l1_distance(&mu, &prod);

        let m = phi.matrix(&bob)?; // Bob × Alice
        let mt = m.transpose();
        let mut gap = 0.0f64;
        let mut us = Vec::with_capacity(nx);
        for x in 0..nx {
            let mx = phi.condition_on(&[("X", x)])?.0.matrix(&bob)?;
            let u = uhlmann_from_matrices(&m, &mx);
            gap = gap.max(uhlmann_gap(&m, &mx, &u)?);
            us.push(u);
        }
        let mut vs = Vec::with_capacity(ny);
        for y in 0..ny {
            let myt = phi.condition_on(&[("Y", y)])?.0.matrix(&bob)?.transpose();
            let v = uhlmann_from_matrices(&mt, &myt);
            gap = gap.max(uhlmann_gap(&mt, &myt, &v)?);
            vs.push(v);
        }
        let mut lhs = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                let target = phi.condition_on(&[("X", x), ("Y", y)])?.0.matrix(&bob)?;
                let moved = &vs[y] * &m * us[x].transpose();
                lhs += mu[x * ny + y] * pure_trace_distance(&flat(&target), &flat(&moved));
            }
        }
        Ok((lhs, rhs, gap))
    });
    collect_uhlmann(if cfg.correlated { "lemma6_correlated" } else { "lemma6" }, runs)
}

/// `(D∞(ρ₁ ‖ ρ), log₂(1/q))` for a binary projective measurement
/// `{P, I − P}` on `A` of a pure state on `A ⊗ B` (`psi` row-major `dim_a × dim_b`).
pub fn lemma3_instance(psi: &[C64], dim_a: usize, dim_b: usize, projector: &CMatrix) -> Result<(f64, f64, f64)> {
    let m = CMatrix::from_fn(dim_a, dim_b, |i, j| psi[i * dim_b + j]);
    let m1 = projector * &m;
    let q = linalg::trace(&(m1.adjoint() * &m1)).re;
    if q <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    // ρ_B = Ψᵀ Ψ̄.
    let rho = DensityOperator::assume_valid(m.transpose() * m.conjugate());
    let rho1 = DensityOperator::assume_valid((m1.transpose() * m1.conjugate()).unscale(q));
    Ok((relative_min_entropy(&rho1, &rho)?, -q.log2(), q))
}

pub fn verify_lemma3(dim: usize, trials: usize, seed: u64) -> Result<VerifierReport> {
    if dim < 2 {
        return Err(Error::InvalidArgument("dim must be at least 2".into()));
    }
    let runs = run_trials(trials, seed, 3, |rng| -> Result<Option<(f64, f64)>> {
        let psi = random_unit_vector(dim * dim, rng);
        let rank = rng.random_range(1..dim);
        let p = random_projector(dim, rank, rng);
        match lemma3_instance(&psi, dim, dim, &p) {
            Ok((_, _, q)) if q < 1e-6 => Ok(None),
            Ok((lhs, rhs, _)) => Ok(Some((lhs, rhs))),
            Err(Error::ZeroProbability) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut raw = Vec::new();
    for (t, s, r) in runs {
        if let Some((lhs, rhs)) = r? {
            raw.push((t, s, lhs, rhs));
        }
    }
    Ok(VerifierReport::new("lemma3", CheckKind::Inequality, raw))
}

/// Per-fact reports of [`verify_facts`].
#[derive(Debug, Clone, PartialEq)]
pub struct FactsReport {
    pub reports: Vec<VerifierReport>,
}

impl FactsReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().filter(|r| !r.diagnostic).all(VerifierReport::passed)
    }

    pub fn get(&self, name: &str) -> Option<&VerifierReport> {
        self.reports.iter().find(|r| r.name == name)
    }
}

fn full_rank<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    random_density_with(dim, dim, rng)
}

fn any_rank<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let rank = rng.random_range(1..=dim);
    random_density_with(dim, rank, rng)
}

/// `ρ ↦ Tr_E(V ρ V†)` for a Haar-random isometry `V: C^d → C^d ⊗ C^e`.
fn random_channel<R: Rng + ?Sized>(d: usize, e: usize, rng: &mut R) -> impl Fn(&DensityOperator) -> DensityOperator {
    let u = haar_unitary(d * e, rng);
    let v = u.columns(0, d).clone_owned();
    move |rho: &DensityOperator| {
        let big = DensityOperator::assume_valid(&v * rho.matrix() * v.adjoint());
        partial_trace(&big, &[d, e], &[0]).expect("valid partition")
    }
}

type Trial = Result<(f64, f64)>;

fn fact(
    name: &str,
    kind: CheckKind,
    trials: usize,
    seed: u64,
    stream: u64,
    f: impl Fn(&mut SeededRng) -> Trial + Sync,
) -> Result<VerifierReport> {
    let runs = run_trials(trials, seed, stream, f);
    let mut raw = Vec::with_capacity(runs.len());
    for (t, s, r) in runs {
        let (lhs, rhs) = r?;
        raw.push((t, s, lhs, rhs));
    }
    Ok(VerifierReport::new(name, kind, raw))
}

/// Entropy and distance inequalities on seeded ensembles (dimensions 2 to 6): joint
/// convexity, the classical-quantum chain rule, minimality of mutual information,
/// the two relative-entropy bounds on distance, subsystem monotonicity, expectation
/// closeness, contraction under channels and the fidelity/trace-distance relations.
pub fn verify_facts(trials: usize, seed: u64) -> Result<FactsReport> {
    use CheckKind::*;
    let dim = |rng: &mut SeededRng| rng.random_range(2..=6usize);
    let pair_dims = |rng: &mut SeededRng| (rng.random_range(2..=3usize), rng.random_range(2..=3usize));
    let mut reports = Vec::new();

    reports.push(fact("fact1_joint_convexity", Inequality, trials, seed, 101, |rng| {
        let d = dim(rng);
        let (r0, r1, s0, s1) = (full_rank(d, rng), full_rank(d, rng), full_rank(d, rng), full_rank(d, rng));
        let p: f64 = rng.random();
        let lhs = relative_entropy(&r0.mix(&r1, p)?, &s0.mix(&s1, p)?)?;
        let rhs = p * relative_entropy(&r0, &s0)? + (1.0 - p) * relative_entropy(&r1, &s1)?;
        Ok((lhs, rhs))
    })?);

    reports.push(fact("fact2_chain_rule", Equality, trials, seed, 102, |rng| {
        let (n, d) = pair_dims(rng);
        let (mu, mu1) = (random_probability(n, rng), random_probability(n, rng));
        let blocks: Vec<DensityOperator> = (0..n).map(|_| full_rank(d, rng)).collect();
        let blocks1: Vec<DensityOperator> = (0..n).map(|_| full_rank(d, rng)).collect();
        let mut rhs = classical_relative_entropy(&mu1, &mu);
        for x in 0..n {
            rhs += mu1[x] * relative_entropy(&blocks1[x], &blocks[x])?;
        }
        let rho = ClassicalQuantumState::new(mu, blocks)?.to_density();
        let rho1 = ClassicalQuantumState::new(mu1, blocks1)?.to_density();
        Ok((relative_entropy(&rho1, &rho)?, rhs))
    })?);

    reports.push(fact("fact3_mutual_information_minimal", Inequality, trials, seed, 103, |rng| {
        let (dx, dy) = pair_dims(rng);
        let rho = any_rank(dx * dy, rng);
        let (sigma, tau) = (full_rank(dx, rng), full_rank(dy, rng));
        let lhs = mutual_information(&rho, &[dx, dy], &[0])?;
        Ok((lhs, relative_entropy(&rho, &sigma.tensor(&tau))?))
    })?);

    let pairs = |rng: &mut SeededRng| {
        let d = dim(rng);
        (full_rank(d, rng), full_rank(d, rng))
    };
    reports.push(fact("fact4_l1_sqrt_relative_entropy", Inequality, trials, seed, 104, |rng| {
        let (rho, sigma) = pairs(rng);
        Ok((trace_norm_distance(&rho, &sigma)?, relative_entropy(&rho, &sigma)?.sqrt()))
    })?);
    reports.push(fact("fact4_fidelity_relative_entropy", Inequality, trials, seed, 104, |rng| {
        let (rho, sigma) = pairs(rng);
        Ok((1.0 - fidelity(&rho, &sigma)?, relative_entropy(&rho, &sigma)?))
    })?);
    let mut pinsker = fact("fact4_pinsker_2ln2", Inequality, trials, seed, 104, |rng| {
        let (rho, sigma) = pairs(rng);
        Ok((
            trace_norm_distance(&rho, &sigma)?,
            (2.0 * std::f64::consts::LN_2 * relative_entropy(&rho, &sigma)?).sqrt(),
        ))
    })?;
    pinsker.diagnostic = true;
    reports.push(pinsker);

    reports.push(fact("fact5_subsystem_monotone", Inequality, trials, seed, 105, |rng| {
        let (dx, dy) = pair_dims(rng);
        let (rho, sigma) = (full_rank(dx * dy, rng), full_rank(dx * dy, rng));
        let lhs = relative_entropy(&partial_trace(&rho, &[dx, dy], &[0])?, &partial_trace(&sigma, &[dx, dy], &[0])?)?;
        Ok((lhs, relative_entropy(&rho, &sigma)?))
    })?);

    reports.push(fact("fact6_expectation_closeness", Inequality, trials, seed, 106, |rng| {
        let n = dim(rng);
        let c: f64 = rng.random_range(0.05..=1.0);
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * c).collect();
        let mu = random_probability(n, rng);
        let nu = random_probability(n, rng);
        let t: f64 = rng.random_range(0.0..0.5);
        let mu1: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let eps: f64 = mu.iter().zip(&f).map(|(p, v)| p * v).sum();
        let eps1 = l1_distance(&mu, &mu1);
        let lhs: f64 = mu1.iter().zip(&f).map(|(p, v)| p * v).sum();
        Ok((lhs, eps + c * eps1))
    })?);

    let channel_pair = |rng: &mut SeededRng| {
        let d = dim(rng);
        let (rho, sigma) = (any_rank(d, rng), any_rank(d, rng));
        let e = rng.random_range(1..=3usize);
        let ch = random_channel(d, e, rng);
        let (cr, cs) = (ch(&rho), ch(&sigma));
        (rho, sigma, cr, cs)
    };
    reports.push(fact("prop1_trace_distance_monotone", Inequality, trials, seed, 107, |rng| {
        let (rho, sigma, cr, cs) = channel_pair(rng);
        Ok((trace_norm_distance(&cr, &cs)?, trace_norm_distance(&rho, &sigma)?))
    })?);
    reports.push(fact("prop1_fidelity_monotone", Inequality, trials, seed, 107, |rng| {
        let (rho, sigma, cr, cs) = channel_pair(rng);
        Ok((fidelity(&rho, &sigma)?, fidelity(&cr, &cs)?))
    })?);

    let fvdg = |rng: &mut SeededRng| -> Result<(f64, f64)> {
        let d = dim(rng);
        let (rho, sigma) = (any_rank(d, rng), any_rank(d, rng));
        Ok((trace_norm_distance(&rho, &sigma)?, fidelity(&rho, &sigma)?))
    };
    reports.push(fact("prop2_fuchs_van_de_graaf_lower", Inequality, trials, seed, 108, |rng| {
        let (l1, f) = fvdg(rng)?;
        Ok((2.0 * (1.0 - f), l1))
    })?);
    reports.push(fact("prop2_fuchs_van_de_graaf_upper", Inequality, trials, seed, 108, |rng| {
        let (l1, f) = fvdg(rng)?;
        Ok((l1, 2.0 * (1.0 - f * f).max(0.0).sqrt()))
    })?);
    reports.push(fact("prop2_pure_state_identity", Equality, trials, seed, 109, |rng| {
        let d = dim(rng);
        let (a, b) = (random_unit_vector(d, rng), random_unit_vector(d, rng));
        let dense = trace_norm_distance(&DensityOperator::from_pure(&a)?, &DensityOperator::from_pure(&b)?)?;
        let overlap = linalg::inner(&a, &b).norm();
        Ok((dense, 2.0 * (1.0 - overlap * overlap).max(0.0).sqrt()))
    })?);

    Ok(FactsReport { reports })
}
