//! Weighted interaction graphs and their 2-local terms.
//!
//! Every edge `ij` carries a [`LocalTerm`] `c_id·I + Σ C(σ,τ) σ_i τ_j` with no
//! single-qubit part. Terms are classified by the signed singular values of
//! their normalised cost matrix: the rank-1 class is a locally rotated singlet,
//! the positive class is every positive semidefinite term.

use std::collections::BTreeSet;

use nalgebra::{Complex, DMatrix, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Axis, PauliPolynomial, PauliTerm};

/// Tolerance for membership in the signed-singular-value tetrahedron.
pub const POLYTOPE_TOL: f64 = 1e-9;

/// Vertices of the tetrahedron of admissible signed singular values.
pub const POLYTOPE_VERTICES: [[f64; 3]; 4] = [
    [-1.0, -1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, -1.0],
];

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i}, {j}) references a vertex outside 0..{n}")]
    VertexOutOfRange { i: usize, j: usize, n: usize },
    #[error("edge ({i}, {j}) has invalid weight {w}")]
    InvalidWeight { i: usize, j: usize, w: f64 },
    #[error("edge ({i}, {j}) has a non-finite term coefficient")]
    NonFiniteTerm { i: usize, j: usize },
    #[error("edge ({i}, {j}) is {found:?} but the instance is declared {declared:?}")]
    KindMismatch {
        i: usize,
        j: usize,
        declared: InstanceKind,
        found: TermClass,
    },
    #[error("{0} terms supplied for {1} edges")]
    TermCount(usize, usize),
}

/// One weighted edge with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Simple undirected graph with strictly positive edge weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and normalises the edge list.
    ///
    /// Endpoints are reordered so that `i < j`. Zero-weight edges are dropped
    /// with a warning; negative or non-finite weights are rejected.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, InstanceError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let (graph, _) = Self::build(n, edges.into_iter().map(|(i, j, w)| (i, j, w, ())))?;
        Ok(graph)
    }

    /// Shared validation; keeps the payload of each surviving edge.
    fn build<T, I>(n: usize, edges: I) -> Result<(Self, Vec<T>), InstanceError>
    where
        I: IntoIterator<Item = (usize, usize, f64, T)>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut payload = Vec::new();
        for (a, b, w, t) in edges {
            if a == b {
                return Err(InstanceError::SelfLoop(a));
            }
            let (i, j) = (a.min(b), a.max(b));
            if j >= n {
                return Err(InstanceError::VertexOutOfRange { i: a, j: b, n });
            }
            if !w.is_finite() || w < 0.0 {
                return Err(InstanceError::InvalidWeight { i: a, j: b, w });
            }
            if !seen.insert((i, j)) {
                return Err(InstanceError::DuplicateEdge(i, j));
            }
            if w == 0.0 {
                log::warn!("dropping zero-weight edge ({i}, {j})");
                continue;
            }
            out.push(Edge { i, j, w });
            payload.push(t);
        }
        Ok((Self { n, edges: out }, payload))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = (i.min(j), i.max(j));
        self.edges.iter().position(|e| e.i == i && e.j == j)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.i == v {
                    Some(e.j)
                } else if e.j == v {
                    Some(e.i)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.i == v || e.j == v).count()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Same graph with weights scaled to sum to one.
    pub fn normalized(&self) -> Self {
        let total = self.total_weight();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                w: if total > 0.0 { e.w / total } else { e.w },
                ..*e
            })
            .collect();
        Self { n: self.n, edges }
    }

    /// Edges outside `set` that share an endpoint with some edge of `set`.
    ///
    /// Both input and output are edge indices into [`Self::edges`].
    pub fn edge_boundary(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let touched: BTreeSet<usize> = set
            .iter()
            .flat_map(|&k| [self.edges[k].i, self.edges[k].j])
            .collect();
        (0..self.edges.len())
            .filter(|k| !set.contains(k))
            .filter(|&k| touched.contains(&self.edges[k].i) || touched.contains(&self.edges[k].j))
            .collect()
    }
}

/// Coefficients of a strictly quadratic 2-qubit operator on an edge `(i, j)`.
///
/// `c[a][b]` multiplies `a_i b_j`, with rows indexed by the axis on the lower
/// qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    pub c_id: f64,
    pub c: [[f64; 3]; 3],
}

impl LocalTerm {
    pub fn new(c_id: f64, c: Matrix3<f64>) -> Self {
        let mut rows = [[0.0; 3]; 3];
        for (a, row) in rows.iter_mut().enumerate() {
            for (b, x) in row.iter_mut().enumerate() {
                *x = c[(a, b)];
            }
        }
        Self { c_id, c: rows }
    }

    /// The singlet projector `(I − XX − YY − ZZ)/4`.
    pub fn qmc() -> Self {
        Self::new(0.25, Matrix3::identity() * -0.25)
    }

    pub fn cost(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| self.c[a][b])
    }

    pub fn is_qmc(&self) -> bool {
        *self == Self::qmc()
    }

    fn is_finite(&self) -> bool {
        self.c_id.is_finite() && self.c.iter().flatten().all(|x| x.is_finite())
    }

    /// The operator as a Pauli polynomial on qubits `i` and `j`.
    pub fn polynomial(&self, i: usize, j: usize) -> PauliPolynomial {
        let mut p = PauliPolynomial::from_terms([(PauliTerm::identity(), self.c_id)]);
        for a in Axis::ALL {
            for b in Axis::ALL {
                p.add_term(PauliTerm::pair(i, a, j, b), self.c[a.index()][b.index()]);
            }
        }
        p
    }

    /// Dense 4×4 lift with the edge's lower qubit as the left factor.
    pub fn matrix(&self) -> DMatrix<Complex<f64>> {
        self.polynomial(0, 1)
            .matrix(2)
            .expect("two qubits are always within the dense limit")
    }

    /// Same operator with a cost matrix rotated as `C ← Rᵢᵀ C Rⱼ`.
    pub fn rotated(&self, ri: &Matrix3<f64>, rj: &Matrix3<f64>) -> Self {
        Self::new(self.c_id, ri.transpose() * self.cost() * rj)
    }

    /// Signed singular values of `C / c_id`, or `None` when `c_id ≤ 0`.
    pub fn signed_svd(&self) -> Option<SignedSvd> {
        (self.c_id > 0.0).then(|| SignedSvd::of(&(self.cost() / self.c_id)))
    }

    pub fn classify(&self) -> (TermClass, Option<SignedSvd>) {
        let svd = self.signed_svd();
        let class = match &svd {
            None => TermClass::General,
            Some(s) => {
                let rank1 = s.sigma.iter().all(|&x| (x + 1.0).abs() <= POLYTOPE_TOL);
                if rank1 {
                    TermClass::Rank1
                } else if in_polytope(s.sigma, POLYTOPE_TOL) {
                    TermClass::Positive
                } else {
                    TermClass::General
                }
            }
        };
        (class, svd)
    }
}

/// Factorisation `4C = U · diag(σ) · Vᵀ` with proper rotations `U`, `V`.
///
/// Here `C` is the cost matrix scaled to identity coefficient `1/4`. Signs are
/// moved into `σ` so both rotations have determinant one; among the valid sign
/// patterns the lexicographically smallest `σ` is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedSvd {
    pub u: Matrix3<f64>,
    pub v: Matrix3<f64>,
    pub sigma: [f64; 3],
    /// The smallest singular value is numerically zero, so the sign of the
    /// corresponding entry of `σ` is a convention rather than data.
    pub degenerate: bool,
}

impl SignedSvd {
    /// Signed SVD of `C / c_id`, which equals `4C` at `c_id = 1/4`.
    pub fn of(c_over_cid: &Matrix3<f64>) -> Self {
        let svd = c_over_cid.svd(true, true);
        let u0 = svd.u.expect("requested U");
        let v0 = svd.v_t.expect("requested Vᵀ").transpose();
        let s = svd.singular_values;
        let degenerate = s.min() < 1e-12 * s.max().max(1.0);
        let det_sign = (u0.determinant() * v0.determinant()).signum();

        let mut best: Option<([f64; 3], [f64; 3])> = None;
        for mask in 0..8u8 {
            let delta: [f64; 3] = std::array::from_fn(|k| if mask >> (2 - k) & 1 == 1 { -1.0 } else { 1.0 });
            let prod: f64 = delta.iter().product();
            if prod != det_sign && !degenerate {
                continue;
            }
            let sigma: [f64; 3] = std::array::from_fn(|k| delta[k] * s[k]);
            let better = match &best {
                None => true,
                Some((b, _)) => sigma.partial_cmp(b) == Some(std::cmp::Ordering::Less),
            };
            if better {
                best = Some((sigma, delta));
            }
        }
        let (sigma, delta) = best.expect("at least one sign pattern is valid");

        // Flip columns of U to make det U = +1, then V absorbs the rest of δ.
        let mut eps = [1.0; 3];
        if u0.determinant() < 0.0 {
            eps[2] = -1.0;
        }
        let u = u0 * Matrix3::from_diagonal(&eps.into());
        let eps_v: [f64; 3] = std::array::from_fn(|k| eps[k] * delta[k]);
        let mut v = v0 * Matrix3::from_diagonal(&eps_v.into());
        if v.determinant() < 0.0 {
            // Only reachable when degenerate: the last singular value is zero,
            // so flipping its V column leaves the product unchanged.
            let mut fix = Matrix3::identity();
            fix[(2, 2)] = -1.0;
            v *= fix;
        }
        Self {
            u,
            v,
            sigma,
            degenerate,
        }
    }

    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.u * Matrix3::from_diagonal(&self.sigma.into()) * self.v.transpose()
    }
}

/// Membership in the tetrahedron via its four facets.
pub fn in_polytope(x: [f64; 3], tol: f64) -> bool {
    let [p, q, r] = x;
    p + q + r <= 1.0 + tol
        && p - q - r <= 1.0 + tol
        && -p + q - r <= 1.0 + tol
        && -p - q + r <= 1.0 + tol
}

/// Structural class of a single term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermClass {
    Rank1,
    Positive,
    General,
}

/// Class declared for a whole instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Qmc,
    Rank1,
    Positive,
    General,
}

impl InstanceKind {
    fn admits(self, term: &LocalTerm, class: TermClass) -> bool {
        match self {
            InstanceKind::Qmc => term.is_qmc(),
            InstanceKind::Rank1 => class == TermClass::Rank1,
            InstanceKind::Positive => class != TermClass::General,
            InstanceKind::General => true,
        }
    }

    /// Every term is positive semidefinite.
    pub fn is_positive(self) -> bool {
        self != InstanceKind::General
    }
}

/// A weighted graph with one local term per edge: `H = Σ w_ij H_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    graph: WeightedGraph,
    terms: Vec<LocalTerm>,
    kind: InstanceKind,
}

impl Instance {
    /// Builds and validates an instance from `(i, j, w, term)` tuples.
    pub fn from_edges<I>(n: usize, edges: I, kind: InstanceKind) -> Result<Self, InstanceError>
    where
        I: IntoIterator<Item = (usize, usize, f64, LocalTerm)>,
    {
        let raw: Vec<(usize, usize, f64, LocalTerm)> = edges.into_iter().collect();
        // Terms given on (j, i) with j > i act with the transposed cost matrix.
        let normalised = raw.into_iter().map(|(a, b, w, t)| {
            let t = if a > b {
                LocalTerm {
                    c_id: t.c_id,
                    c: std::array::from_fn(|x| std::array::from_fn(|y| t.c[y][x])),
                }
            } else {
                t
            };
            (a, b, w, t)
        });
        let (graph, terms) = WeightedGraph::build(n, normalised)?;
        Self::new(graph, terms, kind)
    }

    pub fn new(graph: WeightedGraph, terms: Vec<LocalTerm>, kind: InstanceKind) -> Result<Self, InstanceError> {
        if terms.len() != graph.edges.len() {
            return Err(InstanceError::TermCount(terms.len(), graph.edges.len()));
        }
        for (e, t) in graph.edges.iter().zip(&terms) {
            if !t.is_finite() {
                return Err(InstanceError::NonFiniteTerm { i: e.i, j: e.j });
            }
            let (class, _) = t.classify();
            if !kind.admits(t, class) {
                return Err(InstanceError::KindMismatch {
                    i: e.i,
                    j: e.j,
                    declared: kind,
                    found: class,
                });
            }
        }
        Ok(Self { graph, terms, kind })
    }

    pub fn qmc(graph: WeightedGraph) -> Self {
        let terms = vec![LocalTerm::qmc(); graph.edges.len()];
        Self {
            graph,
            terms,
            kind: InstanceKind::Qmc,
        }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    /// `(edge, term)` pairs in edge order.
    pub fn edge_terms(&self) -> impl Iterator<Item = (&Edge, &LocalTerm)> {
        self.graph.edges.iter().zip(&self.terms)
    }

    pub fn hamiltonian(&self) -> PauliPolynomial {
        let mut h = PauliPolynomial::new();
        for (e, t) in self.edge_terms() {
            for (term, c) in t.polynomial(e.i, e.j).iter() {
                h.add_term(term.clone(), e.w * c);
            }
        }
        h
    }

    /// Copy with weights normalised to total one.
    pub fn normalized(&self) -> Self {
        Self {
            graph: self.graph.normalized(),
            terms: self.terms.clone(),
            kind: self.kind,
        }
    }
}

/// The Quantum Max Cut instance on `g`.
pub fn qmc_instance(g: WeightedGraph) -> Instance {
    Instance::qmc(g)
}
