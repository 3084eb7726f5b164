//! Exact algebra of n-qubit Pauli monomials.
//!
//! A [`PauliTerm`] is a tensor product of single-qubit Paulis with the identity
//! factors left implicit. Products of terms carry a phase from the fourth roots
//! of unity, tracked exactly as the [`Phase`] enum so constraint signs never
//! pick up floating point noise.
//!
//! Qubit `0` is the leftmost tensor factor, i.e. the most significant bit of a
//! computational basis index.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register for which dense matrices are materialised.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("hierarchy level {0} is not supported (expected 1 or 2)")]
    UnsupportedLevel(usize),
    #[error("{n} qubits exceeds the dense-matrix limit of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("qubit {qubit} is out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("qubit {0} appears twice in one monomial")]
    DuplicateQubit(usize),
    #[error("register must have at least one qubit")]
    EmptyRegister,
}

/// Non-identity single-qubit Pauli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// Single-qubit product `self * other`; `None` stands for the identity.
    fn product(self, other: Axis) -> (Phase, Option<Axis>) {
        use Axis::*;
        match (self, other) {
            (X, X) | (Y, Y) | (Z, Z) => (Phase::One, None),
            (X, Y) => (Phase::I, Some(Z)),
            (Y, X) => (Phase::MinusI, Some(Z)),
            (Y, Z) => (Phase::I, Some(X)),
            (Z, Y) => (Phase::MinusI, Some(X)),
            (Z, X) => (Phase::I, Some(Y)),
            (X, Z) => (Phase::MinusI, Some(Y)),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A fourth root of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    MinusOne,
    I,
    MinusI,
}

impl Phase {
    fn quarter_turns(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    fn from_quarter_turns(q: u8) -> Phase {
        match q % 4 {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::One | Phase::MinusOne)
    }

    /// `±1` for real phases.
    pub fn real_sign(self) -> Option<f64> {
        match self {
            Phase::One => Some(1.0),
            Phase::MinusOne => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex<f64> {
        match self {
            Phase::One => Complex::new(1.0, 0.0),
            Phase::MinusOne => Complex::new(-1.0, 0.0),
            Phase::I => Complex::new(0.0, 1.0),
            Phase::MinusI => Complex::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_quarter_turns(self.quarter_turns() + rhs.quarter_turns())
    }
}

/// Tensor product of non-identity Paulis on distinct qubits, sorted by qubit.
///
/// Ordering is the canonical moment-basis order: by degree, then by the list
/// of qubits, then by the list of axes. For degree two this is `(i, j)` first
/// and the axis pair second.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliTerm {
    ops: Vec<(usize, Axis)>,
}

impl PauliTerm {
    pub fn identity() -> Self {
        Self { ops: Vec::new() }
    }

    pub fn single(qubit: usize, axis: Axis) -> Self {
        Self {
            ops: vec![(qubit, axis)],
        }
    }

    /// Two-qubit monomial `a_i b_j`; the qubits may be given in either order.
    pub fn pair(i: usize, a: Axis, j: usize, b: Axis) -> Self {
        assert_ne!(i, j, "pair monomial needs two distinct qubits");
        if i < j {
            Self {
                ops: vec![(i, a), (j, b)],
            }
        } else {
            Self {
                ops: vec![(j, b), (i, a)],
            }
        }
    }

    pub fn from_ops<I>(ops: I) -> Result<Self, PauliError>
    where
        I: IntoIterator<Item = (usize, Axis)>,
    {
        let mut ops: Vec<(usize, Axis)> = ops.into_iter().collect();
        ops.sort_by_key(|&(q, _)| q);
        for w in ops.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(PauliError::DuplicateQubit(w[0].0));
            }
        }
        Ok(Self { ops })
    }

    pub fn degree(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[(usize, Axis)] {
        &self.ops
    }

    pub fn axis_on(&self, qubit: usize) -> Option<Axis> {
        self.ops
            .binary_search_by_key(&qubit, |&(q, _)| q)
            .ok()
            .map(|k| self.ops[k].1)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.ops.last().map(|&(q, _)| q)
    }

    /// Operator product with its exact phase.
    pub fn multiply(&self, other: &PauliTerm) -> PhasedTerm {
        multiply_terms(self, other)
    }

    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        multiply_terms(self, other).phase.is_real()
    }

    /// Split into the first `h = min(k, degree)` factors and the rest.
    pub fn split_left(&self, k: usize) -> (PauliTerm, PauliTerm) {
        let h = k.min(self.ops.len());
        (
            PauliTerm {
                ops: self.ops[..h].to_vec(),
            },
            PauliTerm {
                ops: self.ops[h..].to_vec(),
            },
        )
    }
}

impl Ord for PauliTerm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| {
                self.ops
                    .iter()
                    .map(|&(q, _)| q)
                    .cmp(other.ops.iter().map(|&(q, _)| q))
            })
            .then_with(|| {
                self.ops
                    .iter()
                    .map(|&(_, a)| a)
                    .cmp(other.ops.iter().map(|&(_, a)| a))
            })
    }
}

impl PartialOrd for PauliTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return write!(f, "I");
        }
        for (k, (q, a)) in self.ops.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}{q}")?;
        }
        Ok(())
    }
}

/// A monomial together with a fourth-root-of-unity prefactor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhasedTerm {
    pub phase: Phase,
    pub term: PauliTerm,
}

impl PhasedTerm {
    pub fn new(phase: Phase, term: PauliTerm) -> Self {
        Self { phase, term }
    }

    pub fn times(&self, other: &PhasedTerm) -> PhasedTerm {
        let p = multiply_terms(&self.term, &other.term);
        PhasedTerm {
            phase: self.phase * other.phase * p.phase,
            term: p.term,
        }
    }
}

impl From<PauliTerm> for PhasedTerm {
    fn from(term: PauliTerm) -> Self {
        Self {
            phase: Phase::One,
            term,
        }
    }
}

/// Product of two monomials, merging supports qubit by qubit.
pub fn multiply_terms(a: &PauliTerm, b: &PauliTerm) -> PhasedTerm {
    let mut phase = Phase::One;
    let mut ops = Vec::with_capacity(a.ops.len() + b.ops.len());
    let (mut i, mut j) = (0, 0);
    while i < a.ops.len() || j < b.ops.len() {
        match (a.ops.get(i), b.ops.get(j)) {
            (Some(&(qa, xa)), Some(&(qb, xb))) if qa == qb => {
                let (ph, axis) = xa.product(xb);
                phase = phase * ph;
                if let Some(axis) = axis {
                    ops.push((qa, axis));
                }
                i += 1;
                j += 1;
            }
            (Some(&(qa, xa)), Some(&(qb, _))) if qa < qb => {
                ops.push((qa, xa));
                i += 1;
            }
            (Some(&op), None) => {
                ops.push(op);
                i += 1;
            }
            (_, Some(&op)) => {
                ops.push(op);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    PhasedTerm {
        phase,
        term: PauliTerm { ops },
    }
}

/// All monomials of degree at most `k` on `n` qubits in canonical order.
///
/// Identity first, then `(qubit, axis)` lexicographically, then the degree-2
/// terms by qubit pair `i < j` and axis pair.
pub fn enumerate_monomials(n: usize, k: usize) -> Result<Vec<PauliTerm>, PauliError> {
    if !(1..=2).contains(&k) {
        return Err(PauliError::UnsupportedLevel(k));
    }
    if n == 0 {
        return Err(PauliError::EmptyRegister);
    }
    let mut out = Vec::with_capacity(1 + 3 * n + if k == 2 { 9 * n * (n - 1) / 2 } else { 0 });
    out.push(PauliTerm::identity());
    for q in 0..n {
        for a in Axis::ALL {
            out.push(PauliTerm::single(q, a));
        }
    }
    if k == 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                for a in Axis::ALL {
                    for b in Axis::ALL {
                        out.push(PauliTerm::pair(i, a, j, b));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Non-zero entries `(row, col, value)` of a monomial's matrix, one per column.
pub(crate) fn term_columns(term: &PauliTerm, n: usize) -> impl Iterator<Item = (usize, usize, Complex<f64>)> + '_ {
    let mut xmask = 0usize;
    for &(q, a) in &term.ops {
        if a != Axis::Z {
            xmask |= 1 << (n - 1 - q);
        }
    }
    (0..(1usize << n)).map(move |col| {
        // Accumulate i^quarter * (-1)^sign over the factors.
        let mut quarter = 0u8;
        for &(q, a) in &term.ops {
            let bit = (col >> (n - 1 - q)) & 1;
            match a {
                Axis::X => {}
                Axis::Z => quarter += 2 * bit as u8,
                Axis::Y => quarter += if bit == 0 { 1 } else { 3 },
            }
        }
        (col ^ xmask, col, Phase::from_quarter_turns(quarter).to_complex())
    })
}

/// Dense Kronecker lift of a phased monomial.
pub fn term_matrix(t: &PhasedTerm, n: usize) -> Result<DMatrix<Complex<f64>>, PauliError> {
    if n > MAX_DENSE_QUBITS {
        return Err(PauliError::TooManyQubits {
            n,
            max: MAX_DENSE_QUBITS,
        });
    }
    if let Some(q) = t.term.max_qubit().filter(|&q| q >= n) {
        return Err(PauliError::QubitOutOfRange { qubit: q, n });
    }
    let dim = 1usize << n;
    let scale = t.phase.to_complex();
    let mut m = DMatrix::zeros(dim, dim);
    for (r, c, v) in term_columns(&t.term, n) {
        m[(r, c)] = scale * v;
    }
    Ok(m)
}

/// Real linear combination of Pauli monomials.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliPolynomial {
    coeffs: BTreeMap<PauliTerm, f64>,
}

impl PauliPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (PauliTerm, f64)>,
    {
        let mut p = Self::new();
        for (t, c) in terms {
            p.add_term(t, c);
        }
        p
    }

    pub fn add_term(&mut self, term: PauliTerm, coeff: f64) {
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(term) {
            Entry::Vacant(e) => {
                if coeff != 0.0 {
                    e.insert(coeff);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn coeff(&self, term: &PauliTerm) -> f64 {
        self.coeffs.get(term).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(PauliTerm::degree).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliTerm, f64)> {
        self.coeffs.iter().map(|(t, &c)| (t, c))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_terms(self.iter().map(|(t, c)| (t.clone(), c * s)))
    }

    /// Symmetrised product `(PQ + QP) / 2`, which is again a real polynomial.
    pub fn jordan_product(&self, other: &PauliPolynomial) -> PauliPolynomial {
        let mut out = PauliPolynomial::new();
        for (a, ca) in self.iter() {
            for (b, cb) in other.iter() {
                let p = multiply_terms(a, b);
                // Anticommuting pairs cancel against their reversed product.
                if let Some(s) = p.phase.real_sign() {
                    out.add_term(p.term, s * ca * cb);
                }
            }
        }
        out
    }

    /// Dense matrix of the Hermitian operator.
    pub fn matrix(&self, n: usize) -> Result<DMatrix<Complex<f64>>, PauliError> {
        if n > MAX_DENSE_QUBITS {
            return Err(PauliError::TooManyQubits {
                n,
                max: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for (t, c) in self.iter() {
            if let Some(q) = t.max_qubit().filter(|&q| q >= n) {
                return Err(PauliError::QubitOutOfRange { qubit: q, n });
            }
            for (r, col, v) in term_columns(t, n) {
                m[(r, col)] += v * c;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn single_qubit_table() {
        let x = PauliTerm::single(0, Axis::X);
        let y = PauliTerm::single(0, Axis::Y);
        let p = multiply_terms(&x, &y);
        assert_eq!(p.phase, Phase::I);
        assert_eq!(p.term, PauliTerm::single(0, Axis::Z));
        assert_eq!(multiply_terms(&y, &x).phase, Phase::MinusI);
    }

    #[test]
    fn two_qubit_product_cancels_shared_factor() {
        let a = PauliTerm::pair(0, Axis::X, 1, Axis::Y);
        let b = PauliTerm::pair(0, Axis::Y, 1, Axis::Y);
        let p = multiply_terms(&a, &b);
        assert_eq!(p.phase, Phase::I);
        assert_eq!(p.term, PauliTerm::single(0, Axis::Z));
    }

    #[test]
    fn involution() {
        for t in enumerate_monomials(3, 2).unwrap() {
            let p = multiply_terms(&t, &t);
            assert_eq!(p.phase, Phase::One);
            assert!(p.term.is_identity());
        }
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(enumerate_monomials(2, 1).unwrap().len(), 7);
        assert_eq!(enumerate_monomials(3, 2).unwrap().len(), 37);
        assert_eq!(enumerate_monomials(1, 2).unwrap().len(), 4);
        assert_eq!(
            enumerate_monomials(2, 3),
            Err(PauliError::UnsupportedLevel(3))
        );
        assert_eq!(enumerate_monomials(2, 0), Err(PauliError::UnsupportedLevel(0)));
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let m = enumerate_monomials(4, 2).unwrap();
        assert!(m.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(m, enumerate_monomials(4, 2).unwrap());
        // degree-2 block ordered by qubit pair before axis pair
        let first_pair = &m[1 + 12];
        assert_eq!(first_pair, &PauliTerm::pair(0, Axis::X, 1, Axis::X));
        assert_eq!(&m[1 + 12 + 9], &PauliTerm::pair(0, Axis::X, 2, Axis::X));
    }

    #[test]
    fn enumeration_covers_all_low_degree_terms() {
        // Bijection onto terms of degree <= 2: every product of two degree-1
        // terms on distinct qubits appears exactly once.
        let n = 4;
        let m = enumerate_monomials(n, 2).unwrap();
        let set: std::collections::BTreeSet<_> = m.iter().cloned().collect();
        assert_eq!(set.len(), m.len());
        let mut count = 1 + 3 * n;
        for i in 0..n {
            for j in (i + 1)..n {
                for a in Axis::ALL {
                    for b in Axis::ALL {
                        assert!(set.contains(&PauliTerm::pair(j, b, i, a)));
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, m.len());
    }

    #[test]
    fn dense_matrices() {
        let z = term_matrix(&PauliTerm::single(0, Axis::Z).into(), 1).unwrap();
        assert_eq!(z[(0, 0)], c(1.0, 0.0));
        assert_eq!(z[(1, 1)], c(-1.0, 0.0));
        let xx = term_matrix(&PauliTerm::pair(0, Axis::X, 1, Axis::X).into(), 2).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expect = if r + col == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx[(r, col)], c(expect, 0.0));
            }
        }
        let iz = term_matrix(&PhasedTerm::new(Phase::I, PauliTerm::single(0, Axis::Z)), 1).unwrap();
        assert_eq!(iz[(0, 0)], c(0.0, 1.0));
        assert_eq!(iz[(1, 1)], c(0.0, -1.0));
        let y = term_matrix(&PauliTerm::single(0, Axis::Y).into(), 1).unwrap();
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn dense_guards() {
        let t: PhasedTerm = PauliTerm::single(0, Axis::X).into();
        assert!(matches!(term_matrix(&t, 13), Err(PauliError::TooManyQubits { .. })));
        let t: PhasedTerm = PauliTerm::single(3, Axis::X).into();
        assert!(matches!(term_matrix(&t, 2), Err(PauliError::QubitOutOfRange { .. })));
    }

    #[test]
    fn duplicate_qubit_rejected() {
        assert_eq!(
            PauliTerm::from_ops([(1, Axis::X), (1, Axis::Y)]),
            Err(PauliError::DuplicateQubit(1))
        );
    }

    #[test]
    fn jordan_product_of_swaps() {
        // S_01 S_02 + S_02 S_01 = S_01 + S_02 + S_12 - I
        let swap = |i: usize, j: usize| {
            let mut p = PauliPolynomial::from_terms([(PauliTerm::identity(), 0.5)]);
            for a in Axis::ALL {
                p.add_term(PauliTerm::pair(i, a, j, a), 0.5);
            }
            p
        };
        let prod = swap(0, 1).jordan_product(&swap(0, 2));
        let mut expect = swap(0, 1);
        for (t, c) in swap(0, 2).iter().chain(swap(1, 2).iter()) {
            expect.add_term(t.clone(), c);
        }
        expect.add_term(PauliTerm::identity(), -1.0);
        let expect = expect.scaled(0.5);
        assert_eq!(prod.len(), expect.len());
        for (t, c) in expect.iter() {
            assert!((prod.coeff(t) - c).abs() < 1e-15, "{t}");
        }
    }

    fn arb_term(n: usize) -> impl Strategy<Value = PauliTerm> {
        proptest::collection::vec(0usize..4, n).prop_map(|codes| {
            PauliTerm::from_ops(
                codes
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .map(|(q, c)| (q, Axis::from_index(c - 1))),
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn associativity(a in arb_term(5), b in arb_term(5), c in arb_term(5)) {
            let (pa, pb, pc): (PhasedTerm, PhasedTerm, PhasedTerm) = (a.into(), b.into(), c.into());
            prop_assert_eq!(pa.times(&pb).times(&pc), pa.times(&pb.times(&pc)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn product_matches_dense(a in arb_term(3), b in arb_term(3)) {
            let n = 3;
            let p = multiply_terms(&a, &b);
            let ma = term_matrix(&a.clone().into(), n).unwrap();
            let mb = term_matrix(&b.clone().into(), n).unwrap();
            let mp = term_matrix(&p, n).unwrap();
            prop_assert!((&ma * &mb - &mp).norm() < 1e-12);
            // real phase iff the operators commute
            let comm = &ma * &mb - &mb * &ma;
            prop_assert_eq!(p.phase.is_real(), comm.norm() < 1e-12);
        }
    }
}
