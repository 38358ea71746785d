//! Pure states over named registers.
//!
//! Amplitudes are indexed row-major over the layout's register order (first
//! register most significant). Every reduction and measurement goes through
//! this one convention.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Split, C64, ZERO};
use crate::qit::{DensityOperator, DEFAULT_TOL};

/// Outcomes with less total weight than this cannot be conditioned on.
pub const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
    pub classical: bool,
}

impl Register {
    pub fn quantum(name: impl Into<String>, dim: usize) -> Self {
        Register { name: name.into(), dim, classical: false }
    }

    pub fn classical(name: impl Into<String>, dim: usize) -> Self {
        Register { name: name.into(), dim, classical: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        for (i, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::InvalidState(format!("register `{}` has dimension 0", r.name)));
            }
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::DuplicateRegister(r.name.clone()));
            }
        }
        Ok(RegisterLayout { registers })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers.iter().position(|r| r.name == name).ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let p = self.position(n.as_ref())?;
            if out.contains(&p) {
                return Err(Error::DuplicateRegister(n.as_ref().to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn dim_of<S: AsRef<str>>(&self, names: &[S]) -> Result<usize> {
        Ok(self.positions(names)?.iter().map(|&p| self.registers[p].dim).product())
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Self::new(regs)
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.registers.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.registers[i + 1].dim;
        }
        strides
    }
}

#[derive(Debug, Clone)]
pub struct LabeledPureState {
    layout: RegisterLayout,
    amplitudes: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub register_values: BTreeMap<String, usize>,
    pub probability: f64,
    pub post_state: LabeledPureState,
}

impl LabeledPureState {
    pub fn new(layout: RegisterLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch { expected: layout.total_dim(), actual: amplitudes.len() });
        }
        let n = linalg::norm_sqr(&amplitudes);
        if (n - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("state norm² {n} is not 1")));
        }
        Ok(LabeledPureState { layout, amplitudes })
    }

    /// Normalize an arbitrary non-zero vector.
    pub fn normalized(layout: RegisterLayout, mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = linalg::norm_sqr(&amplitudes);
        if n <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbability);
        }
        let s = 1.0 / n.sqrt();
        for z in &mut amplitudes {
            *z *= s;
        }
        Self::new(layout, amplitudes)
    }

    /// A single register in the given state.
    pub fn single(register: Register, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(RegisterLayout::new(vec![register])?, amplitudes)
    }

    pub fn basis(layout: RegisterLayout, digits: &[usize]) -> Result<Self> {
        let dims = layout.dims();
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(Error::InvalidArgument(format!("basis digits {digits:?} for dims {dims:?}")));
        }
        let mut amps = vec![ZERO; layout.total_dim()];
        amps[linalg::flatten(digits, &dims)] = C64::new(1.0, 0.0);
        Self::new(layout, amps)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes)
    }

    pub fn inner(&self, other: &LabeledPureState) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    /// Kronecker product in list order.
    pub fn tensor(states: &[LabeledPureState]) -> Result<Self> {
        let (first, rest) =
            states.split_first().ok_or_else(|| Error::InvalidArgument("tensor of an empty list".into()))?;
        let mut layout = first.layout.clone();
        let mut amps = first.amplitudes.clone();
        for s in rest {
            layout = layout.concat(&s.layout)?;
            amps = linalg::kron_vec(&amps, &s.amplitudes);
        }
        Ok(LabeledPureState { layout, amplitudes: amps })
    }

    fn split<S: AsRef<str>>(&self, names: &[S]) -> Result<Split> {
        let pos = self.layout.positions(names)?;
        Ok(Split::new(&self.layout.dims(), &pos))
    }

    /// Exact Born distribution of the named registers, row-major in `names` order.
    pub fn outcome_distribution<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<f64>> {
        let split = self.split(names)?;
        let mut probs = vec![0.0; split.keep_dim];
        for (k, p) in probs.iter_mut().enumerate() {
            for r in 0..split.rest_dim {
                *p += self.amplitudes[split.flat(k, r)].norm_sqr();
            }
        }
        Ok(probs)
    }

    fn assignment_positions(&self, assignment: &[(&str, usize)]) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::with_capacity(assignment.len());
        for &(name, value) in assignment {
            let p = self.layout.position(name)?;
            if value >= self.layout.registers[p].dim {
                return Err(Error::InvalidArgument(format!("value {value} out of range for `{name}`")));
            }
            if out.iter().any(|&(q, _)| q == p) {
                return Err(Error::DuplicateRegister(name.to_string()));
            }
            out.push((p, value));
        }
        Ok(out)
    }

    /// Zero every amplitude whose digits fail `keep`; returns the kept weight.
    /// `keep` sees the digits of `names` in the order given.
    pub fn project_where<S: AsRef<str>>(
        &self,
        names: &[S],
        keep: impl Fn(&[usize]) -> bool,
    ) -> Result<(Vec<C64>, f64)> {
        let pos = self.layout.positions(names)?;
        let dims = self.layout.dims();
        let strides = self.layout.strides();
        let mut digits = vec![0usize; pos.len()];
        let mut out = self.amplitudes.clone();
        let mut weight = 0.0;
        for (i, z) in out.iter_mut().enumerate() {
            for (d, &p) in digits.iter_mut().zip(&pos) {
                *d = (i / strides[p]) % dims[p];
            }
            if keep(&digits) {
                weight += z.norm_sqr();
            } else {
                *z = ZERO;
            }
        }
        Ok((out, weight))
    }

    /// Deterministic collapse onto `assignment`; returns the normalized
    /// post-measurement state and the outcome's probability.
    pub fn condition_on(&self, assignment: &[(&str, usize)]) -> Result<(LabeledPureState, f64)> {
        let fixed = self.assignment_positions(assignment)?;
        let names: Vec<&str> = assignment.iter().map(|a| a.0).collect();
        let values: Vec<usize> = fixed.iter().map(|f| f.1).collect();
        let (amps, p) = self.project_where(&names, |d| d == values.as_slice())?;
        if p <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbability);
        }
        Ok((LabeledPureState::normalized(self.layout.clone(), amps)?, p))
    }

    /// Like [`condition_on`](Self::condition_on) but drops the fixed registers
    /// from the layout.
    pub fn restrict(&self, assignment: &[(&str, usize)]) -> Result<(LabeledPureState, f64)> {
        let fixed = self.assignment_positions(assignment)?;
        let regs: Vec<Register> = self
            .layout
            .registers
            .iter()
            .enumerate()
            .filter(|(i, _)| !fixed.iter().any(|f| f.0 == *i))
            .map(|(_, r)| r.clone())
            .collect();
        let fixed_pos: Vec<usize> = fixed.iter().map(|f| f.0).collect();
        let split = Split::new(&self.layout.dims(), &fixed_pos);
        let fixed_dims: Vec<usize> = fixed_pos.iter().map(|&p| self.layout.registers[p].dim).collect();
        let k = linalg::flatten(&fixed.iter().map(|f| f.1).collect::<Vec<_>>(), &fixed_dims);
        let amps: Vec<C64> = (0..split.rest_dim).map(|r| self.amplitudes[split.flat(k, r)]).collect();
        let p = linalg::norm_sqr(&amps);
        if p <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbability);
        }
        Ok((LabeledPureState::normalized(RegisterLayout::new(regs)?, amps)?, p))
    }

    /// Sample an outcome of the named registers with Born probabilities.
    pub fn measure_registers<S: AsRef<str>, R: Rng + ?Sized>(
        &self,
        names: &[S],
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        let probs = self.outcome_distribution(names)?;
        let index = sample_index(&probs, rng);
        let pos = self.layout.positions(names)?;
        let dims: Vec<usize> = pos.iter().map(|&p| self.layout.registers[p].dim).collect();
        let digits = linalg::unflatten(index, &dims);
        let assignment: Vec<(&str, usize)> = names.iter().map(|n| n.as_ref()).zip(digits.iter().copied()).collect();
        let (post_state, probability) = self.condition_on(&assignment)?;
        let register_values = assignment.iter().map(|&(n, v)| (n.to_string(), v)).collect();
        Ok(MeasurementOutcome { register_values, probability, post_state })
    }

    /// `ψ` reshaped as a `keep × rest` matrix; `keep` in the order given and
    /// the rest in layout order. The reduced state on `keep` is `M M†`.
    pub fn matrix<S: AsRef<str>>(&self, keep: &[S]) -> Result<CMatrix> {
        Ok(self.split(keep)?.matrix(&self.amplitudes))
    }

    fn layout_ordered<S: AsRef<str>>(&self, keep: &[S]) -> Result<Vec<usize>> {
        let mut pos = self.layout.positions(keep)?;
        pos.sort_unstable();
        Ok(pos)
    }

    /// Factor `M` (kept dims × rest dims) of the reduced state, kept registers
    /// in layout order.
    pub fn reduced_factor<S: AsRef<str>>(&self, keep: &[S]) -> Result<CMatrix> {
        let pos = self.layout_ordered(keep)?;
        Ok(Split::new(&self.layout.dims(), &pos).matrix(&self.amplitudes))
    }

    /// Reduced density operator over `keep`, in layout order.
    pub fn reduced_state<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        let m = self.reduced_factor(keep)?;
        Ok(DensityOperator::assume_valid(&m * m.adjoint()))
    }

    /// Apply `u` to the named registers (row-major in `names` order).
    pub fn apply_local_unitary<S: AsRef<str>>(&self, names: &[S], u: &CMatrix) -> Result<LabeledPureState> {
        let split = self.split(names)?;
        if !u.is_square() || u.nrows() != split.keep_dim {
            return Err(Error::DimensionMismatch { expected: split.keep_dim, actual: u.nrows() });
        }
        let gap = linalg::unitarity_gap(u);
        if gap > DEFAULT_TOL {
            return Err(Error::NotUnitary { deviation: gap });
        }
        let m = u * split.matrix(&self.amplitudes);
        Ok(LabeledPureState { layout: self.layout.clone(), amplitudes: split.unmatrix(&m) })
    }

    /// Largest off-diagonal entry of each classical register's reduced state.
    pub fn classical_coherence(&self) -> Vec<(String, f64)> {
        self.layout
            .registers
            .iter()
            .filter(|r| r.classical)
            .map(|r| {
                let rho = self.reduced_state(&[r.name.as_str()]).expect("register exists");
                (r.name.clone(), rho.off_diagonal_mass())
            })
            .collect()
    }
}

/// Draw an index from a (not necessarily normalized) weight vector.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qit::{real_vector, trace_norm_distance};
    use crate::seeded_rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit(name: &str, amps: &[f64]) -> LabeledPureState {
        LabeledPureState::single(Register::quantum(name, amps.len()), real_vector(amps)).unwrap()
    }

    fn bell(a: &str, b: &str) -> LabeledPureState {
        let layout = RegisterLayout::new(vec![Register::quantum(a, 2), Register::quantum(b, 2)]).unwrap();
        LabeledPureState::new(layout, real_vector(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])).unwrap()
    }

    #[test]
    fn layout_rejects_duplicates() {
        let err = RegisterLayout::new(vec![Register::quantum("A", 2), Register::quantum("A", 3)]);
        assert!(matches!(err, Err(Error::DuplicateRegister(_))));
    }

    #[test]
    fn tensor_examples() {
        let a = qubit("A", &[0.6, 0.8]);
        assert_eq!(LabeledPureState::tensor(std::slice::from_ref(&a)).unwrap().amplitudes(), a.amplitudes());
        let t = LabeledPureState::tensor(&[qubit("A", &[1.0, 0.0]), qubit("B", &[1.0, 0.0])]).unwrap();
        assert_eq!(t.dim(), 4);
        assert!((t.amplitudes()[0].re - 1.0).abs() < 1e-15);
        let t = LabeledPureState::tensor(&[a.clone(), qubit("B", &[FRAC_1_SQRT_2, FRAC_1_SQRT_2])]).unwrap();
        assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(LabeledPureState::tensor(&[a.clone(), a]).is_err());
    }

    #[test]
    fn measure_basis_state_is_certain() {
        let s = LabeledPureState::tensor(&[qubit("A", &[0.0, 1.0]), qubit("B", &[0.6, 0.8])]).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..10 {
            let o = s.measure_registers(&["A"], &mut rng).unwrap();
            assert_eq!(o.register_values["A"], 1);
            assert!((o.probability - 1.0).abs() < 1e-12);
        }
        assert!(matches!(s.measure_registers(&["Z"], &mut rng), Err(Error::UnknownRegister(_))));
    }

    #[test]
    fn measurement_frequencies_match_born_rule() {
        let s = qubit("A", &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let mut rng = seeded_rng(42);
        let shots = 100_000;
        let zeros =
            (0..shots).filter(|_| s.measure_registers(&["A"], &mut rng).unwrap().register_values["A"] == 0).count();
        let freq = zeros as f64 / shots as f64;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn measuring_all_of_a_root_weighted_state_gives_weights() {
        let mu = [0.1, 0.2, 0.3, 0.4];
        let layout = RegisterLayout::new(vec![Register::classical("X", 2), Register::classical("Y", 2)]).unwrap();
        let s = LabeledPureState::new(layout, real_vector(&mu.map(f64::sqrt))).unwrap();
        let dist = s.outcome_distribution(&["X", "Y"]).unwrap();
        for (p, m) in dist.iter().zip(mu) {
            assert!((p - m).abs() < 1e-12);
        }
        // names order controls the index order
        let swapped = s.outcome_distribution(&["Y", "X"]).unwrap();
        assert!((swapped[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn condition_on_examples() {
        let s = LabeledPureState::tensor(&[qubit("A", &[0.0, 1.0]), qubit("B", &[0.6, 0.8])]).unwrap();
        let (post, p) = s.condition_on(&[("A", 1)]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((post.inner(&s).norm() - 1.0).abs() < 1e-12);
        assert!(matches!(s.condition_on(&[("A", 0)]), Err(Error::ZeroProbability)));

        let u = qubit("A", &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let (_, p) = u.condition_on(&[("A", 0)]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn restrict_drops_registers() {
        let s = LabeledPureState::tensor(&[bell("A", "B"), qubit("C", &[0.6, 0.8])]).unwrap();
        let (r, p) = s.restrict(&[("A", 1)]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert_eq!(r.layout().names(), vec!["B", "C"]);
        assert!((r.amplitudes()[2].re - 0.6).abs() < 1e-12);
        assert!((r.amplitudes()[3].re - 0.8).abs() < 1e-12);
    }

    #[test]
    fn reduced_state_examples() {
        let s =
            LabeledPureState::tensor(&[qubit("A", &[0.6, 0.8]), qubit("B", &[FRAC_1_SQRT_2, FRAC_1_SQRT_2])]).unwrap();
        let all = s.reduced_state(&["A", "B"]).unwrap();
        let proj = DensityOperator::from_pure(s.amplitudes()).unwrap();
        assert!(all.max_abs_diff(&proj) < 1e-12);
        // keep order is ignored: layout order wins
        let all_swapped = s.reduced_state(&["B", "A"]).unwrap();
        assert!(all_swapped.max_abs_diff(&proj) < 1e-12);
        let a = s.reduced_state(&["A"]).unwrap();
        assert!(a.max_abs_diff(&DensityOperator::from_pure(&real_vector(&[0.6, 0.8])).unwrap()) < 1e-12);
        let half = bell("A", "B").reduced_state(&["B"]).unwrap();
        assert!(trace_norm_distance(&half, &DensityOperator::maximally_mixed(2)).unwrap() < 1e-12);
    }

    #[test]
    fn local_unitary_examples() {
        let s = LabeledPureState::tensor(&[qubit("A", &[1.0, 0.0]), qubit("B", &[0.6, 0.8])]).unwrap();
        let id = linalg::identity(2);
        assert!((s.apply_local_unitary(&["A"], &id).unwrap().inner(&s).norm() - 1.0).abs() < 1e-12);
        let flip = CMatrix::from_row_slice(2, 2, &real_vector(&[0.0, 1.0, 1.0, 0.0]));
        let f = s.apply_local_unitary(&["A"], &flip).unwrap();
        assert!((f.outcome_distribution(&["A"]).unwrap()[1] - 1.0).abs() < 1e-12);
        let u =
            linalg::svd_square(&CMatrix::from_fn(4, 4, |i, j| C64::new((i * j) as f64 + 1.0, i as f64 - j as f64))).u;
        let there = s.apply_local_unitary(&["B", "A"], &u).unwrap();
        let back = there.apply_local_unitary(&["B", "A"], &u.adjoint()).unwrap();
        let diff: f64 = back.amplitudes().iter().zip(s.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!(matches!(s.apply_local_unitary(&["A"], &id.scale(2.0)), Err(Error::NotUnitary { .. })));
        assert!(s.apply_local_unitary(&["A", "B"], &id).is_err());
    }
}
