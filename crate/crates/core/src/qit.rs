//! Quantum-information functionals on density operators.
//!
//! Conventions: logarithms are base 2 (entropies in bits) and the trace norm
//! carries no ½ factor, so `trace_norm_distance` ranges over `[0, 2]`.
//!
//! For two pure states the trace distance is `2·√(1 − |⟨φ|ψ⟩|²)`. Some
//! references drop the factor 2 in that identity; it is required for
//! consistency with `2(1 − F) ≤ ‖ρ − σ‖₁`, so it is kept here.

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, hermiticity_gap, CMatrix, Split, C64, ZERO};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Eigenvalues at or below this fraction of the largest are outside the support.
pub const DEFAULT_SUPPORT_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Hermiticity, positivity and unit-trace slack.
    pub validation: f64,
    /// Relative eigenvalue threshold deciding support membership.
    pub support_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { validation: DEFAULT_TOL, support_rel: DEFAULT_SUPPORT_REL }
    }
}

/// A PSD, unit-trace complex matrix.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMatrix,
    tol: Tolerance,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerance::default())
    }

    pub fn with_tolerance(matrix: CMatrix, tol: Tolerance) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let gap = hermiticity_gap(&matrix);
        if gap > tol.validation {
            return Err(Error::InvalidState(format!("not Hermitian (gap {gap:.3e})")));
        }
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > tol.validation {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = eigh(&matrix).values.last().copied().unwrap_or(0.0);
        if min_eig < -tol.validation {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityOperator { matrix, tol })
    }

    /// Wrap a matrix that is valid by construction (reductions of unit vectors).
    pub(crate) fn assume_valid(matrix: CMatrix) -> Self {
        DensityOperator { matrix, tol: Tolerance::default() }
    }

    pub fn from_pure(v: &[C64]) -> Result<Self> {
        let n = linalg::norm_sqr(v);
        if (n - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("vector norm² {n} is not 1")));
        }
        Ok(Self::assume_valid(linalg::outer(v)))
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        let m = CMatrix::from_fn(p.len(), p.len(), |i, j| if i == j { C64::new(p[i], 0.0) } else { ZERO });
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::assume_valid(linalg::identity(dim).unscale(dim as f64))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    pub fn with_tol(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        eigh(&self.matrix).values
    }

    /// Convex combination `p·self + (1−p)·other`.
    pub fn mix(&self, other: &DensityOperator, p: f64) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self { matrix: self.matrix.scale(p) + other.matrix.scale(1.0 - p), tol: self.tol })
    }

    pub fn tensor(&self, other: &DensityOperator) -> Self {
        Self { matrix: linalg::kron(&self.matrix, &other.matrix), tol: self.tol }
    }

    /// Largest |off-diagonal| entry.
    pub fn off_diagonal_mass(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn same_dim(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(())
}

/// Trace norm of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &CMatrix) -> f64 {
    eigh(m).values.iter().map(|v| v.abs()).sum()
}

/// Trace norm of an arbitrary square matrix (sum of singular values).
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

pub fn trace_norm_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    Ok(hermitian_trace_norm(&(rho.matrix() - sigma.matrix())))
}

/// `‖|a⟩⟨a| − |b⟩⟨b|‖₁` for unit vectors, computed from the component of `b`
/// orthogonal to `a` (the difference has eigenvalues `±‖b⊥‖`).
pub fn pure_trace_distance(a: &[C64], b: &[C64]) -> f64 {
    let ov = linalg::inner(a, b);
    let perp: f64 = a.iter().zip(b).map(|(x, y)| (y - ov * x).norm_sqr()).sum();
    2.0 * perp.sqrt()
}

pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let prod = support_sqrt(rho) * support_sqrt(sigma);
    Ok(trace_norm(&prod).clamp(0.0, 1.0))
}

/// `√ρ` with off-support round-off eigenvalues set to zero; their square
/// roots would otherwise contribute `O(√ε)` noise.
fn support_sqrt(rho: &DensityOperator) -> CMatrix {
    let top = rho.spectrum().first().copied().unwrap_or(0.0);
    let cut = rho.tol.support_rel * top;
    linalg::hermitian_map(rho.matrix(), |v| if v > cut { v.sqrt() } else { 0.0 })
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    -values.iter().map(|&v| xlog2x(v)).sum::<f64>()
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(&rho.spectrum()).max(0.0)
}

/// Shannon entropy (bits) of a probability vector.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    entropy_of_spectrum(p).max(0.0)
}

/// Classical relative entropy in bits; `+∞` when `p` is not supported by `q`.
pub fn classical_relative_entropy(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        d += pi * (pi / qi).log2();
    }
    d
}

pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

struct SupportSplit {
    /// Columns spanning support(σ).
    basis: CMatrix,
    values: Vec<f64>,
    /// ⟨v|ρ|v⟩ summed over the kernel of σ.
    leak: f64,
}

fn support_split(rho: &DensityOperator, sigma: &DensityOperator) -> SupportSplit {
    let e = eigh(sigma.matrix());
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let threshold = sigma.tol.support_rel * top;
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > threshold).collect();
    let mut leak = 0.0;
    for i in 0..e.values.len() {
        if !keep.contains(&i) {
            let v = e.vectors.column(i);
            leak += (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        }
    }
    let basis = e.vectors.select_columns(keep.iter());
    let values = keep.iter().map(|&i| e.values[i]).collect();
    SupportSplit { basis, values, leak }
}

/// `D(ρ‖σ)` in bits; `f64::INFINITY` when `support(ρ) ⊄ support(σ)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let split = support_split(rho, sigma);
    if split.leak > rho.tol.validation {
        return Ok(f64::INFINITY);
    }
    let neg_entropy: f64 = rho.spectrum().iter().map(|&v| xlog2x(v.max(0.0))).sum();
    let mut cross = 0.0;
    for (c, &s) in split.values.iter().enumerate() {
        let v = split.basis.column(c);
        let w = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        cross += w * s.log2();
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// `D∞(ρ‖σ) = min{λ : ρ ≤ 2^λ σ}` in bits; `f64::INFINITY` on support violation.
pub fn relative_min_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let split = support_split(rho, sigma);
    if split.leak > rho.tol.validation {
        return Ok(f64::INFINITY);
    }
    let r = split.values.len();
    let inv_sqrt: Vec<f64> = split.values.iter().map(|s| 1.0 / s.sqrt()).collect();
    let restricted = split.basis.adjoint() * rho.matrix() * &split.basis;
    let whitened = CMatrix::from_fn(r, r, |i, j| restricted[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
    let top = eigh(&whitened).values.first().copied().unwrap_or(0.0);
    Ok(top.log2().max(0.0))
}

fn check_partition(dim: usize, dims: &[usize], part: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != dim || dims.contains(&0) {
        return Err(Error::BadPartition { dims: dims.to_vec(), dim });
    }
    for (i, &p) in part.iter().enumerate() {
        if p >= dims.len() || part[..i].contains(&p) {
            return Err(Error::InvalidArgument(format!("bad subsystem index {p} for dims {dims:?}")));
        }
    }
    Ok(())
}

/// Reduced state on the subsystems `keep` (laid out in the order given).
pub fn partial_trace(rho: &DensityOperator, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
    check_partition(rho.dim(), dims, keep)?;
    let split = Split::new(dims, keep);
    let (kd, rd) = (split.keep_dim, split.rest_dim);
    let m = rho.matrix();
    let out = CMatrix::from_fn(kd, kd, |i, j| {
        let mut acc = ZERO;
        for r in 0..rd {
            acc += m[(split.flat(i, r), split.flat(j, r))];
        }
        acc
    });
    Ok(DensityOperator { matrix: out, tol: rho.tol })
}

/// `I(X:Y)` where X is the set of subsystems `part` and Y the rest.
pub fn mutual_information(rho: &DensityOperator, dims: &[usize], part: &[usize]) -> Result<f64> {
    check_partition(rho.dim(), dims, part)?;
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !part.contains(i)).collect();
    let sx = von_neumann_entropy(&partial_trace(rho, dims, part)?);
    let sy = von_neumann_entropy(&partial_trace(rho, dims, &rest)?);
    let sxy = von_neumann_entropy(rho);
    Ok((sx + sy - sxy).max(0.0))
}

/// `Σ_x μ(x) |x⟩⟨x| ⊗ ρ_x`.
#[derive(Debug, Clone)]
pub struct ClassicalQuantumState {
    weights: Vec<f64>,
    blocks: Vec<DensityOperator>,
}

impl ClassicalQuantumState {
    pub fn new(weights: Vec<f64>, blocks: Vec<DensityOperator>) -> Result<Self> {
        if weights.is_empty() || weights.len() != blocks.len() {
            return Err(Error::InvalidState(format!("{} weights for {} blocks", weights.len(), blocks.len())));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidState("negative classical weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("classical weights sum to {total}")));
        }
        let d = blocks[0].dim();
        if let Some(b) = blocks.iter().find(|b| b.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: b.dim() });
        }
        Ok(ClassicalQuantumState { weights, blocks })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn blocks(&self) -> &[DensityOperator] {
        &self.blocks
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].dim()
    }

    /// Block-diagonal matrix with the classical register first.
    pub fn to_density(&self) -> DensityOperator {
        let d = self.block_dim();
        let n = self.weights.len();
        let mut m = CMatrix::zeros(n * d, n * d);
        for (x, (w, b)) in self.weights.iter().zip(&self.blocks).enumerate() {
            let scaled = b.matrix().scale(*w);
            m.view_mut((x * d, x * d), (d, d)).copy_from(&scaled);
        }
        DensityOperator { matrix: m, tol: self.blocks[0].tol }
    }
}

/// `I(X:Z|Y)` with Y the classical alphabet of `cq`; each block is split into
/// subsystems `dims`, X being `part`.
pub fn conditional_mutual_information(cq: &ClassicalQuantumState, dims: &[usize], part: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (w, b) in cq.weights.iter().zip(&cq.blocks) {
        if *w > 0.0 {
            total += w * mutual_information(b, dims, part)?;
        }
    }
    Ok(total)
}

/// A unit vector on system ⊗ purifier, indexed `s·purifier_dim + p`.
#[derive(Debug, Clone)]
pub struct PurificationPair {
    state: Vec<C64>,
    system_dim: usize,
    purifier_dim: usize,
}

impl PurificationPair {
    pub fn new(state: Vec<C64>, system_dim: usize, purifier_dim: usize) -> Result<Self> {
        if state.len() != system_dim * purifier_dim {
            return Err(Error::DimensionMismatch { expected: system_dim * purifier_dim, actual: state.len() });
        }
        let n = linalg::norm_sqr(&state);
        if (n - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("purification norm² {n} is not 1")));
        }
        Ok(PurificationPair { state, system_dim, purifier_dim })
    }

    pub fn state(&self) -> &[C64] {
        &self.state
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn purifier_dim(&self) -> usize {
        self.purifier_dim
    }

    /// The `system × purifier` coefficient matrix.
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.system_dim, self.purifier_dim, &self.state)
    }

    /// Extend the purifier with zero-weight dimensions.
    pub fn padded(&self, purifier_dim: usize) -> Self {
        assert!(purifier_dim >= self.purifier_dim);
        let mut state = vec![ZERO; self.system_dim * purifier_dim];
        for s in 0..self.system_dim {
            for p in 0..self.purifier_dim {
                state[s * purifier_dim + p] = self.state[s * self.purifier_dim + p];
            }
        }
        PurificationPair { state, system_dim: self.system_dim, purifier_dim }
    }

    /// The purified state (trace over the purifier).
    pub fn reduced(&self) -> DensityOperator {
        let m = self.matrix();
        DensityOperator::assume_valid(&m * m.adjoint())
    }

    /// `(I ⊗ u)|ψ⟩`.
    pub fn apply_purifier_unitary(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.purifier_dim || !u.is_square() {
            return Err(Error::DimensionMismatch { expected: self.purifier_dim, actual: u.nrows() });
        }
        let m = self.matrix() * u.transpose();
        let state = m.transpose().as_slice().to_vec();
        Ok(PurificationPair { state, system_dim: self.system_dim, purifier_dim: self.purifier_dim })
    }
}

/// Canonical purification `Σ_i √λ_i |v_i⟩|i⟩` with a full-dimension purifier.
pub fn purify(rho: &DensityOperator) -> PurificationPair {
    let e = eigh(rho.matrix());
    let n = rho.dim();
    let mut state = vec![ZERO; n * n];
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    for i in 0..n {
        // Round-off eigenvalues would otherwise contribute O(1e-8) amplitudes.
        let w = if e.values[i] > rho.tol.support_rel * top { e.values[i].sqrt() } else { 0.0 };
        for s in 0..n {
            state[s * n + i] = e.vectors[(s, i)] * w;
        }
    }
    let norm = linalg::norm_sqr(&state).sqrt();
    for z in &mut state {
        *z /= norm;
    }
    PurificationPair { state, system_dim: n, purifier_dim: n }
}

/// Unitary `U` on `psi`'s purifier maximizing `|⟨φ|(I ⊗ U)|ψ⟩|`; the maximum
/// equals `F(ρ, σ)`. The smaller purifier is zero-padded first, so `U` acts
/// on `max(psi.purifier_dim, phi.purifier_dim)` dimensions.
pub fn uhlmann_unitary(psi: &PurificationPair, phi: &PurificationPair) -> Result<CMatrix> {
    if psi.system_dim != phi.system_dim {
        return Err(Error::DimensionMismatch { expected: psi.system_dim, actual: phi.system_dim });
    }
    let p = psi.purifier_dim.max(phi.purifier_dim);
    let m_psi = psi.padded(p).matrix();
    let m_phi = phi.padded(p).matrix();
    Ok(uhlmann_from_matrices(&m_psi, &m_phi))
}

/// Core of [`uhlmann_unitary`] on `system × purifier` coefficient matrices.
pub fn uhlmann_from_matrices(m_psi: &CMatrix, m_phi: &CMatrix) -> CMatrix {
    // ⟨φ|(I⊗U)|ψ⟩ = Tr(M_φ† M_ψ Uᵀ); with M_φ† M_ψ = P Σ Q†, Uᵀ = Q P†.
    let cross = m_phi.adjoint() * m_psi;
    let svd = linalg::svd_square(&cross);
    (&svd.v * svd.u.adjoint()).transpose()
}

/// Given PSD operators `ρ_i = F_i F_i†` on a common large space, return them
/// as density operators on an orthonormal basis of the joint column space.
/// All spectral functionals (entropies, D, D∞, F, ‖·‖₁) are preserved.
pub fn compress_factors(factors: &[&CMatrix]) -> Result<Vec<DensityOperator>> {
    let n = factors.first().map(|f| f.nrows()).unwrap_or(0);
    if let Some(f) = factors.iter().find(|f| f.nrows() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: f.nrows() });
    }
    // Rows that vanish in every factor do not affect the Gram matrix.
    let rows: Vec<usize> = (0..n).filter(|&r| factors.iter().any(|f| f.row(r).iter().any(|z| *z != ZERO))).collect();
    let cols: usize = factors.iter().map(|f| f.ncols()).sum();
    let mut stacked = CMatrix::zeros(rows.len(), cols);
    let mut at = 0;
    for f in factors {
        for (dst, &r) in rows.iter().enumerate() {
            for c in 0..f.ncols() {
                stacked[(dst, at + c)] = f[(r, c)];
            }
        }
        at += f.ncols();
    }
    let gram = stacked.adjoint() * &stacked;
    let e = eigh(&gram);
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > 1e-14 * top).collect();
    // Q = F W Λ^{-1/2}; then Q† F_i = Λ^{-1/2} W† F† F_i is a small matrix.
    let w = e.vectors.select_columns(keep.iter());
    let mut coeff = w.adjoint();
    for (r, &i) in keep.iter().enumerate() {
        let s = 1.0 / e.values[i].sqrt();
        for c in 0..coeff.ncols() {
            coeff[(r, c)] *= s;
        }
    }
    let mut out = Vec::with_capacity(factors.len());
    let mut at = 0;
    for f in factors {
        let cols = gram.columns(at, f.ncols());
        let small: CMatrix = &coeff * cols;
        at += f.ncols();
        out.push(DensityOperator::assume_valid(&small * small.adjoint()));
    }
    Ok(out)
}

/// `(|0⟩⟨0|, |+⟩⟨+|)`-style helpers used by tests and examples.
pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

pub fn real_vector(entries: &[f64]) -> Vec<C64> {
    entries.iter().map(|&x| C64::new(x, 0.0)).collect()
}
