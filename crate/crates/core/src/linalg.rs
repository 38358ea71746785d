//! Dense complex linear algebra shared by every module.
//!
//! Eigen- and singular-vector outputs are canonicalized (descending order,
//! ties by pivot index, first significant entry real positive) so that
//! purifications and Uhlmann unitaries are reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Entries smaller than this never count as a pivot.
const PIVOT_EPS: f64 = 1e-12;

/// Relative gap below which two eigenvalues are treated as degenerate.
const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Eigh {
    /// Descending.
    pub values: Vec<f64>,
    /// Columns match `values`.
    pub vectors: CMatrix,
}

pub fn pivot_index(col: impl Iterator<Item = C64>) -> usize {
    let entries: Vec<C64> = col.collect();
    let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    entries.iter().position(|z| z.norm() > PIVOT_EPS.max(1e-8 * scale)).unwrap_or(0)
}

fn phase_fix_column(m: &mut CMatrix, col: usize) -> C64 {
    let p = pivot_index(m.column(col).iter().copied());
    let z = m[(p, col)];
    if z.norm() == 0.0 {
        return ONE;
    }
    let phase = z.conj() / z.norm();
    for r in 0..m.nrows() {
        m[(r, col)] *= phase;
    }
    phase
}

/// Hermitian eigendecomposition with canonical ordering and phases.
pub fn eigh(m: &CMatrix) -> Eigh {
    assert!(m.is_square(), "eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) };
    }
    // Symmetrize so round-off in the input never leaks into the solver.
    let h = (m + m.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let raw_vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
    let pivots: Vec<usize> = (0..n).map(|c| pivot_index(se.eigenvectors.column(c).iter().copied())).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_vals[b].total_cmp(&raw_vals[a]));
    // Within degenerate runs, order by pivot index.
    let scale = raw_vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (raw_vals[order[end - 1]] - raw_vals[order[end]]).abs() <= DEGENERACY_EPS * scale {
            end += 1;
        }
        order[start..end].sort_by_key(|&c| (pivots[c], c));
        start = end;
    }

    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
        values.push(raw_vals[src]);
    }
    for c in 0..n {
        phase_fix_column(&mut vectors, c);
    }
    Eigh { values, vectors }
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let e = eigh(m);
    let n = m.nrows();
    let mut scaled = e.vectors.clone();
    for c in 0..n {
        let s = f(e.values[c]);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    &scaled * e.vectors.adjoint()
}

/// Square root of a PSD matrix; tiny negative eigenvalues are clamped at 0.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_map(m, |v| v.max(0.0).sqrt())
}

pub struct Svd {
    pub u: CMatrix,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

/// Full SVD `m = u · diag(s) · v†` of a square matrix, canonicalized so that
/// singular values descend and each right-singular vector has its first
/// significant entry real positive.
pub fn svd_square(m: &CMatrix) -> Svd {
    assert!(m.is_square(), "svd_square needs a square matrix");
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let u_raw = svd.u.expect("u requested");
    let vt_raw = svd.v_t.expect("v_t requested");
    let s_raw: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s_raw[b].total_cmp(&s_raw[a]).then(a.cmp(&b)));

    let v_raw = vt_raw.adjoint();
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        s.push(s_raw[src]);
    }
    for c in 0..n {
        let phase = phase_fix_column(&mut v, c);
        // u_c s v_c† is unchanged when both columns get the same phase.
        for r in 0..n {
            u[(r, c)] *= phase;
        }
    }
    Svd { u, singular_values: s, v }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise |m − m†|.
pub fn hermiticity_gap(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise |u†u − I|.
pub fn unitarity_gap(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let g = u.adjoint() * u;
    let n = u.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn real_vector_pair(a: f64, b: f64) -> Vec<C64> {
    vec![C64::new(a, 0.0), C64::new(b, 0.0)]
}

pub fn outer(v: &[C64]) -> CMatrix {
    let n = v.len();
    CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Index bookkeeping for viewing a flat tensor index as a (kept, rest) pair.
///
/// `dims` lists subsystem dimensions in row-major order (first most
/// significant); `keep` lists the kept subsystems in the order they should be
/// laid out. `flat(k, r)` returns the original flat index.
#[derive(Debug, Clone)]
pub struct Split {
    pub keep_dim: usize,
    pub rest_dim: usize,
    table: Vec<usize>,
}

impl Split {
    pub fn new(dims: &[usize], keep: &[usize]) -> Self {
        let n = dims.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let rest: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        let keep_dim: usize = keep.iter().map(|&i| dims[i]).product();
        let rest_dim: usize = rest.iter().map(|&i| dims[i]).product();

        let offsets = |subs: &[usize]| -> Vec<usize> {
            let total: usize = subs.iter().map(|&i| dims[i]).product();
            let mut out = Vec::with_capacity(total);
            let mut digits = vec![0usize; subs.len()];
            for _ in 0..total {
                out.push(subs.iter().zip(&digits).map(|(&s, &d)| d * strides[s]).sum());
                for pos in (0..subs.len()).rev() {
                    digits[pos] += 1;
                    if digits[pos] < dims[subs[pos]] {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
            out
        };
        let keep_off = offsets(keep);
        let rest_off = offsets(&rest);
        let mut table = Vec::with_capacity(keep_dim * rest_dim);
        for k in &keep_off {
            for r in &rest_off {
                table.push(k + r);
            }
        }
        Split { keep_dim, rest_dim, table }
    }

    #[inline]
    pub fn flat(&self, k: usize, r: usize) -> usize {
        self.table[k * self.rest_dim + r]
    }

    /// Reshape a state vector into a `keep_dim × rest_dim` matrix.
    pub fn matrix(&self, v: &[C64]) -> CMatrix {
        CMatrix::from_fn(self.keep_dim, self.rest_dim, |k, r| v[self.flat(k, r)])
    }

    /// Inverse of [`Split::matrix`].
    pub fn unmatrix(&self, m: &CMatrix) -> Vec<C64> {
        let mut out = vec![ZERO; self.keep_dim * self.rest_dim];
        for k in 0..self.keep_dim {
            for r in 0..self.rest_dim {
                out[self.flat(k, r)] = m[(k, r)];
            }
        }
        out
    }
}

/// Digits of `index` in the mixed radix `dims` (first most significant).
pub fn unflatten(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = index % dims[i];
        index /= dims[i];
    }
    out
}

pub fn flatten(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_orders_descending_and_fixes_phase() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, C64::new(0.0, 1.0), C64::new(0.0, -1.0), ONE]);
        let e = eigh(&m);
        assert!((e.values[0] - 2.0).abs() < 1e-12);
        assert!(e.values[1].abs() < 1e-12);
        for c in 0..2 {
            let p = pivot_index(e.vectors.column(c).iter().copied());
            assert!(e.vectors[(p, c)].im.abs() < 1e-12 && e.vectors[(p, c)].re > 0.0);
        }
        let rebuilt = &e.vectors
            * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2, e.values.iter().map(|&v| C64::new(v, 0.0))))
            * e.vectors.adjoint();
        assert!((rebuilt - m).norm() < 1e-12);
    }

    #[test]
    fn degenerate_eigenvalues_ordered_by_pivot() {
        let e = eigh(&identity(3));
        for c in 0..3 {
            assert_eq!(pivot_index(e.vectors.column(c).iter().copied()), c);
        }
    }

    #[test]
    fn svd_reconstructs_and_is_unitary() {
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new((i * 3 + j) as f64, (i as f64) - (j as f64)));
        let s = svd_square(&m);
        assert!(unitarity_gap(&s.u) < 1e-12 && unitarity_gap(&s.v) < 1e-12);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            s.singular_values.iter().map(|&v| C64::new(v, 0.0)),
        ));
        assert!((&s.u * d * s.v.adjoint() - m).norm() < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn split_round_trips_and_permutes() {
        let dims = [2, 3, 2];
        let v: Vec<C64> = (0..12).map(|i| C64::new(i as f64, 0.0)).collect();
        let s = Split::new(&dims, &[2, 0]);
        assert_eq!((s.keep_dim, s.rest_dim), (4, 3));
        // keep digits (d2, d0), rest digit d1
        assert_eq!(s.flat(1, 2), flatten(&[1, 2, 0], &dims));
        assert_eq!(s.unmatrix(&s.matrix(&v)), v);
    }

    #[test]
    fn flatten_inverts_unflatten() {
        let dims = [3, 4, 2];
        for i in 0..24 {
            assert_eq!(flatten(&unflatten(i, &dims), &dims), i);
        }
    }
}
