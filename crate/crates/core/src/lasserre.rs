//! Real level-1 and level-2 quantum Lasserre relaxations.
//!
//! The moment matrix is indexed by Pauli monomials: `M(τ, σ) = ⟨τσ⟩`. Entries
//! whose product carries an imaginary phase are fixed to zero; all entries
//! whose product is `±φ` for the same `φ` are tied to one canonical entry,
//! the split of `φ` into its left part (first `min(k, deg φ)` factors) and
//! right part (the rest).
//!
//! Optionally the matrix is reordered into symmetry sectors before solving.
//! Every strictly quadratic Hamiltonian commutes with the antiunitary flip
//! `σ ↦ −σ`, so odd-degree moments may be set to zero; when all cost matrices
//! are diagonal, conjugation by `X^{⊗n}` and `Z^{⊗n}` splits the even and odd
//! parts further. Averaging any optimum over these symmetries gives an optimum
//! in the reduced program, so the optimal value is unchanged.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Complex, DMatrix, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, LocalTerm, WeightedGraph};
use crate::pauli::{enumerate_monomials, Axis, PauliError, PauliPolynomial, PauliTerm};
use crate::sdp::{self, AdmmSolver, SdpError, SdpProblem, SdpResult, SdpSolver, SolveStatus, SolverConfig, SparseSym};

/// Residual above which a decoded solution is flagged.
pub const RESIDUAL_WARNING: f64 = 1e-4;

/// Largest register for which pseudo-densities are materialised.
pub const MAX_PSEUDO_DENSITY_QUBITS: usize = 6;

#[derive(Debug, Error)]
pub enum RelaxationError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("relaxation dimension {dim} exceeds the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("moment matrix has eigenvalue {0:e} below the tolerance")]
    NotPsd(f64),
    #[error("pseudo-densities are limited to {max} qubits, got {n}")]
    TooManyQubits { n: usize, max: usize },
    #[error("rotation for qubit {0} is not a proper rotation")]
    NotRotation(usize),
    #[error("expected {expected} rotations, got {got}")]
    RotationCount { expected: usize, got: usize },
    #[error("instance has {got} qubits but the relaxation was built for {expected}")]
    QubitMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub symmetry_reduction: bool,
    pub max_dim: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            symmetry_reduction: true,
            max_dim: 1500,
        }
    }
}

/// Ordered monomials indexing the rows of the moment matrix.
#[derive(Clone, Debug)]
pub struct MomentBasis {
    pub level: usize,
    pub n: usize,
    pub terms: Vec<PauliTerm>,
    index: HashMap<PauliTerm, usize>,
}

impl MomentBasis {
    /// Degree ≤ `k` monomials; the identity row is kept only at `k = 2`.
    pub fn new(n: usize, k: usize) -> Result<Self, RelaxationError> {
        let mut terms = enumerate_monomials(n, k)?;
        if k == 1 {
            terms.remove(0);
        }
        let index = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Ok(Self { level: k, n, terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, t: &PauliTerm) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Row/column holding `⟨φ⟩` with sign `+1`.
    pub fn canonical_entry(&self, phi: &PauliTerm) -> Option<(usize, usize)> {
        let (left, right) = phi.split_left(self.level);
        Some((self.index_of(&left)?, self.index_of(&right)?))
    }

    /// Row of the degree-1 monomial `a_q`.
    pub fn single_index(&self, q: usize, a: Axis) -> usize {
        let offset = if self.level == 1 { 0 } else { 1 };
        offset + 3 * q + a.index()
    }
}

/// Symmetry sector label of a monomial.
fn sector(t: &PauliTerm, flips: bool) -> (usize, usize, usize) {
    let parity = t.degree() % 2;
    if !flips {
        return (parity, 0, 0);
    }
    // X^{⊗n} negates Y and Z; Z^{⊗n} negates X and Y.
    let (mut xc, mut zc) = (0, 0);
    for &(_, a) in t.ops() {
        match a {
            Axis::X => zc ^= 1,
            Axis::Y => {
                xc ^= 1;
                zc ^= 1
            }
            Axis::Z => xc ^= 1,
        }
    }
    (parity, xc, zc)
}

/// A built relaxation: the SDP together with the map back to monomials.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub problem: SdpProblem,
    pub basis: MomentBasis,
    /// `order[p]` is the basis row placed at problem row `p`.
    pub order: Vec<usize>,
    /// Number of equality constraints tying duplicate entries together.
    pub tie_constraints: usize,
}

/// Builds `Las_k` with default options.
pub fn build(inst: &Instance, k: usize) -> Result<Relaxation, RelaxationError> {
    build_with(inst, k, &BuildOptions::default())
}

pub fn build_with(inst: &Instance, k: usize, opts: &BuildOptions) -> Result<Relaxation, RelaxationError> {
    let n = inst.n();
    let basis = MomentBasis::new(n, k)?;
    let dim = basis.len();
    if dim > opts.max_dim {
        return Err(RelaxationError::TooLarge { dim, cap: opts.max_dim });
    }

    let flips = opts.symmetry_reduction && inst.terms().iter().all(is_diagonal);
    let keys: Vec<(usize, usize, usize)> = if opts.symmetry_reduction {
        basis.terms.iter().map(|t| sector(t, flips)).collect()
    } else {
        vec![(0, 0, 0); dim]
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by_key(|&b| (keys[b], b));
    let mut position = vec![0; dim];
    for (p, &b) in order.iter().enumerate() {
        position[b] = p;
    }
    let mut blocks = Vec::new();
    for (p, &b) in order.iter().enumerate() {
        if p == 0 || keys[b] != keys[order[p - 1]] {
            blocks.push(0);
        }
        *blocks.last_mut().expect("pushed above") += 1;
    }

    let mut problem = SdpProblem::new(dim);
    problem.blocks = blocks;

    // Group entries by the monomial their product represents.
    let mut groups: BTreeMap<PauliTerm, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for a in 0..dim {
        let mut diag = SparseSym::new();
        diag.push(position[a], position[a], 1.0);
        problem.add_constraint(diag, 1.0);
        for b in (a + 1)..dim {
            if keys[a] != keys[b] {
                continue;
            }
            let prod = basis.terms[a].multiply(&basis.terms[b]);
            match prod.phase.real_sign() {
                None => {
                    let mut zero = SparseSym::new();
                    zero.push(position[a], position[b], 1.0);
                    problem.add_constraint(zero, 0.0);
                }
                Some(sign) => groups.entry(prod.term).or_default().push((a, b, sign)),
            }
        }
    }

    let mut tie_constraints = 0;
    for (phi, entries) in &groups {
        let canon = basis.canonical_entry(phi).map(|(r, c)| (r.min(c), r.max(c)));
        let (cr, cc, cs) = entries
            .iter()
            .copied()
            .find(|&(a, b, _)| Some((a, b)) == canon)
            .unwrap_or(entries[0]);
        for &(a, b, s) in entries {
            if (a, b) == (cr, cc) {
                continue;
            }
            // s·M(a,b) = ⟨φ⟩ = cs·M(cr,cc)
            let mut tie = SparseSym::new();
            tie.push(position[a], position[b], 0.5 * s);
            tie.push(position[cr], position[cc], -0.5 * cs);
            problem.add_constraint(tie, 0.0);
            tie_constraints += 1;
        }
    }

    for (e, t) in inst.edge_terms() {
        problem.offset += e.w * t.c_id;
        for a in Axis::ALL {
            for b in Axis::ALL {
                let c = t.c[a.index()][b.index()];
                if c == 0.0 {
                    continue;
                }
                let phi = PauliTerm::pair(e.i, a, e.j, b);
                let (r, col) = basis
                    .canonical_entry(&phi)
                    .expect("degree-2 monomials always have a canonical entry");
                // ⟨A, M⟩ counts an off-diagonal entry twice.
                problem.objective.push(position[r], position[col], 0.5 * e.w * c);
            }
        }
    }

    Ok(Relaxation {
        problem,
        basis,
        order,
        tie_constraints,
    })
}

fn is_diagonal(t: &LocalTerm) -> bool {
    (0..3).all(|a| (0..3).all(|b| a == b || t.c[a][b] == 0.0))
}

impl Relaxation {
    /// Reorders a problem-space matrix into canonical basis order.
    pub fn to_canonical(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = self.order.len();
        let mut out = DMatrix::zeros(dim, dim);
        for p in 0..dim {
            for q in 0..dim {
                out[(self.order[p], self.order[q])] = m[(p, q)];
            }
        }
        out
    }

    /// Reorders a canonical-order matrix into problem space.
    pub fn from_canonical(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = self.order.len();
        DMatrix::from_fn(dim, dim, |p, q| m[(self.order[p], self.order[q])])
    }

    /// Decodes a problem-space matrix into relaxed values.
    pub fn decode(&self, m: &DMatrix<f64>, inst: &Instance) -> Result<MomentSolution, RelaxationError> {
        if inst.n() != self.basis.n {
            return Err(RelaxationError::QubitMismatch {
                expected: self.basis.n,
                got: inst.n(),
            });
        }
        let residual = self.problem.constraint_violation(m);
        let sol = MomentSolution::from_matrix(self.basis.clone(), self.to_canonical(m), inst, residual);
        if sol.status == DecodeStatus::ResidualWarning {
            log::warn!("decoded moment matrix has constraint residual {residual:e}");
        }
        Ok(sol)
    }

    pub fn solve_with(&self, inst: &Instance, solver: &dyn SdpSolver) -> Result<(MomentSolution, SdpResult), RelaxationError> {
        let result = solver.solve(&self.problem)?;
        let mut sol = self.decode(&result.m, inst)?;
        sol.solver = Some(SolveInfo {
            status: result.status,
            iterations: result.iterations,
            primal_residual: result.primal_residual,
            dual_residual: result.dual_residual,
            min_eigenvalue: result.min_eigenvalue,
        });
        Ok((sol, result))
    }
}

/// Builds and solves `Las_k` with the embedded solver.
pub fn solve_level(inst: &Instance, k: usize, cfg: &SolverConfig) -> Result<MomentSolution, RelaxationError> {
    let relax = build(inst, k)?;
    let solver = AdmmSolver { config: cfg.clone() };
    Ok(relax.solve_with(inst, &solver)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Ok,
    ResidualWarning,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub min_eigenvalue: f64,
}

/// Relaxed quantities on one edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeValues {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    /// Relaxed energy of the edge term.
    pub mu: f64,
    /// Normalised traceless value.
    pub v: f64,
    /// Relaxed SWAP expectation `(1 − 3v)/2`.
    pub s: f64,
    /// `block[a][b] = ⟨a_i b_j⟩`.
    pub block: [[f64; 3]; 3],
}

impl EdgeValues {
    pub fn block_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| self.block[a][b])
    }
}

/// Decoded solution of a relaxation.
#[derive(Clone, Debug)]
pub struct MomentSolution {
    pub basis: MomentBasis,
    /// Moment matrix in canonical basis order.
    pub m: DMatrix<f64>,
    /// `⟨φ⟩` for every monomial represented in the matrix, identity included.
    pub values: BTreeMap<PauliTerm, f64>,
    pub edges: Vec<EdgeValues>,
    /// `ν_k = Σ w_ij μ_ij`.
    pub objective: f64,
    /// `‖A(M) − b‖∞` of the source matrix.
    pub residual: f64,
    pub status: DecodeStatus,
    pub solver: Option<SolveInfo>,
}

impl MomentSolution {
    /// Decodes a canonical-order moment matrix.
    pub fn from_matrix(basis: MomentBasis, m: DMatrix<f64>, inst: &Instance, residual: f64) -> Self {
        let mut values = BTreeMap::new();
        values.insert(PauliTerm::identity(), 1.0);
        let dim = basis.len();
        for a in 0..dim {
            for b in (a + 1)..dim {
                let prod = basis.terms[a].multiply(&basis.terms[b]);
                if prod.phase.is_real() && !values.contains_key(&prod.term) {
                    let (r, c) = basis
                        .canonical_entry(&prod.term)
                        .expect("products of basis rows have a canonical entry");
                    values.insert(prod.term, m[(r, c)]);
                }
            }
        }
        let edges: Vec<EdgeValues> = inst
            .edge_terms()
            .map(|(e, t)| {
                let block: [[f64; 3]; 3] = std::array::from_fn(|a| {
                    std::array::from_fn(|b| {
                        let phi = PauliTerm::pair(e.i, Axis::from_index(a), e.j, Axis::from_index(b));
                        values.get(&phi).copied().unwrap_or(0.0)
                    })
                });
                edge_values(e.i, e.j, e.w, t, block)
            })
            .collect();
        let objective = edges.iter().map(|e| e.w * e.mu).sum();
        let status = if residual > RESIDUAL_WARNING {
            DecodeStatus::ResidualWarning
        } else {
            DecodeStatus::Ok
        };
        Self {
            basis,
            m,
            values,
            edges,
            objective,
            residual,
            status,
            solver: None,
        }
    }

    pub fn level(&self) -> usize {
        self.basis.level
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn value(&self, phi: &PauliTerm) -> f64 {
        self.values.get(phi).copied().unwrap_or(0.0)
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&EdgeValues> {
        let (i, j) = (i.min(j), i.max(j));
        self.edges.iter().find(|e| e.i == i && e.j == j)
    }

    /// Gram matrix of the degree-1 rows, ordered `(qubit, axis)`.
    pub fn degree1_gram(&self) -> DMatrix<f64> {
        let n = self.n();
        let idx: Vec<usize> = (0..n)
            .flat_map(|q| Axis::ALL.map(|a| self.basis.single_index(q, a)))
            .collect();
        DMatrix::from_fn(3 * n, 3 * n, |r, c| self.m[(idx[r], idx[c])])
    }

    /// Pseudo-density `(1/2ⁿ) Σ ⟨φ⟩ φ` over every represented monomial.
    pub fn pseudo_density(&self) -> Result<PseudoDensity, RelaxationError> {
        let n = self.n();
        if n > MAX_PSEUDO_DENSITY_QUBITS {
            return Err(RelaxationError::TooManyQubits {
                n,
                max: MAX_PSEUDO_DENSITY_QUBITS,
            });
        }
        let scale = 1.0 / (1usize << n) as f64;
        let poly = PauliPolynomial::from_terms(self.values.iter().map(|(t, &v)| (t.clone(), v * scale)));
        let rho = poly.matrix(n)?;
        let (eigs, _) = sdp::eig_hermitian(&rho)?;
        Ok(PseudoDensity {
            min_eigenvalue: eigs[0],
            rho,
        })
    }

    /// Applies a local rotation on every qubit and re-decodes against `inst`.
    ///
    /// Degree-1 rows transform by `R_q`, degree-2 rows by `R_i ⊗ R_j`, so each
    /// edge block becomes `R_iᵀ M_ij R_j`.
    pub fn rotate(&self, rotations: &[Matrix3<f64>], inst: &Instance) -> Result<MomentSolution, RelaxationError> {
        let n = self.n();
        if rotations.len() != n {
            return Err(RelaxationError::RotationCount {
                expected: n,
                got: rotations.len(),
            });
        }
        for (q, r) in rotations.iter().enumerate() {
            let orth = (r.transpose() * r - Matrix3::identity()).norm();
            if orth > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
                return Err(RelaxationError::NotRotation(q));
            }
        }
        let dim = self.basis.len();
        // T[(row, new col)]: expansion of rotated monomials in the old basis.
        let mut t = DMatrix::zeros(dim, dim);
        for (col, term) in self.basis.terms.iter().enumerate() {
            match term.ops() {
                [] => t[(col, col)] = 1.0,
                [(q, a)] => {
                    for x in Axis::ALL {
                        t[(self.basis.single_index(*q, x), col)] = rotations[*q][(x.index(), a.index())];
                    }
                }
                [(i, a), (j, b)] => {
                    for x in Axis::ALL {
                        for y in Axis::ALL {
                            let row = self
                                .basis
                                .index_of(&PauliTerm::pair(*i, x, *j, y))
                                .expect("degree-2 rows are all present");
                            t[(row, col)] = rotations[*i][(x.index(), a.index())] * rotations[*j][(y.index(), b.index())];
                        }
                    }
                }
                _ => unreachable!("basis has degree at most 2"),
            }
        }
        let m = t.transpose() * &self.m * &t;
        let mut out = MomentSolution::from_matrix(self.basis.clone(), m, inst, self.residual);
        out.solver = self.solver;
        Ok(out)
    }
}

fn edge_values(i: usize, j: usize, w: f64, t: &LocalTerm, block: [[f64; 3]; 3]) -> EdgeValues {
    let m = Matrix3::from_fn(|a, b| block[a][b]);
    let trace = (t.cost().transpose() * m).trace();
    let mu = t.c_id + trace;
    let v = if t.is_qmc() {
        (4.0 * mu - 1.0) / 3.0
    } else if t.c_id > 0.0 {
        trace / (3.0 * t.c_id)
    } else {
        4.0 * trace / 3.0
    };
    EdgeValues {
        i,
        j,
        w,
        mu,
        v,
        s: (1.0 - 3.0 * v) / 2.0,
        block,
    }
}

#[derive(Clone, Debug)]
pub struct PseudoDensity {
    pub rho: DMatrix<Complex<f64>>,
    pub min_eigenvalue: f64,
}

/// Unit Gram vectors from a PSD matrix, one per column.
///
/// Negative eigenvalues down to `−tol` are clipped; the result has one row
/// per retained eigenvalue. Non-zero columns are rescaled to unit length.
pub fn gram_vectors(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, RelaxationError> {
    let e = sdp::eig_sym(m)?;
    let min = e.values.first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(RelaxationError::NotPsd(min));
    }
    let cutoff = tol.max(1e-14 * e.values.last().copied().unwrap_or(0.0).abs());
    let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] > cutoff).collect();
    let mut l = DMatrix::from_fn(keep.len(), m.ncols(), |r, c| e.vectors[(c, keep[r])] * e.values[keep[r]].sqrt());
    for mut col in l.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        }
    }
    Ok(l)
}

/// Max Cut relaxation `max Σ w (1 − X_ij)/2` over unit-diagonal `X ⪰ 0`.
pub fn build_max_cut(g: &WeightedGraph) -> SdpProblem {
    vertex_program(g, 0.5, -0.5)
}

/// Single-vector QMC program `max Σ w (1 − 3⟨W_i, W_j⟩)/4`.
pub fn build_simplified_qmc(g: &WeightedGraph) -> SdpProblem {
    vertex_program(g, 0.25, -0.75)
}

fn vertex_program(g: &WeightedGraph, constant: f64, slope: f64) -> SdpProblem {
    let mut p = SdpProblem::new(g.n());
    for v in 0..g.n() {
        let mut a = SparseSym::new();
        a.push(v, v, 1.0);
        p.add_constraint(a, 1.0);
    }
    for e in g.edges() {
        p.offset += e.w * constant;
        p.objective.push(e.i, e.j, 0.5 * e.w * slope);
    }
    p
}
