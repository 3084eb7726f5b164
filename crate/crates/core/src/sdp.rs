//! Equality-constrained semidefinite programs and an embedded ADMM solver.
//!
//! Problems are stated over a symmetric matrix variable that may be block
//! diagonal. The solver splits the variable into an affine copy and a conic
//! copy: the affine step is an exact projection onto the constraint set
//! (factorised once per connected group of constraints), the conic step is
//! an eigenvalue clip per block.

use nalgebra::{Cholesky, Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SdpError {
    #[error("matrix is not square ({0}×{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("entry ({0}, {1}) lies outside the block structure")]
    EntryOutsideBlocks(usize, usize),
    #[error("block sizes sum to {0} but the problem dimension is {1}")]
    BlockMismatch(usize, usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Sparse symmetric matrix stored as upper-triangle entries `(row ≤ col)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` to the symmetric pair of positions `(r, c)` and `(c, r)`.
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        let (r, c) = (r.min(c), r.max(c));
        self.entries.push((r, c, v));
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Frobenius inner product `⟨A, M⟩`.
    pub fn dot(&self, m: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * m[(r, c)] } else { 2.0 * v * m[(r, c)] })
            .sum()
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }
}

/// One equality `⟨A, M⟩ = b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqConstraint {
    pub a: SparseSym,
    pub b: f64,
}

/// `maximize ⟨C, M⟩ + offset  s.t.  ⟨A_ℓ, M⟩ = b_ℓ,  M ⪰ 0`.
///
/// `blocks` lists the diagonal block sizes of `M`; entries outside the
/// blocks are identically zero and may not appear in any coefficient matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub dim: usize,
    pub blocks: Vec<usize>,
    pub objective: SparseSym,
    pub offset: f64,
    pub constraints: Vec<EqConstraint>,
}

impl SdpProblem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            blocks: vec![dim],
            objective: SparseSym::new(),
            offset: 0.0,
            constraints: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, a: SparseSym, b: f64) {
        self.constraints.push(EqConstraint { a, b });
    }

    pub fn objective_value(&self, m: &DMatrix<f64>) -> f64 {
        self.objective.dot(m) + self.offset
    }

    /// `‖A(M) − b‖∞`.
    pub fn constraint_violation(&self, m: &DMatrix<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.a.dot(m) - c.b).abs())
            .fold(0.0, f64::max)
    }

    fn block_of(&self) -> Vec<usize> {
        let mut owner = Vec::with_capacity(self.dim);
        for (b, &size) in self.blocks.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, size));
        }
        owner
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let total: usize = self.blocks.iter().sum();
        if total != self.dim {
            return Err(SdpError::BlockMismatch(total, self.dim));
        }
        let owner = self.block_of();
        let all = self
            .constraints
            .iter()
            .flat_map(|c| c.a.entries.iter())
            .chain(self.objective.entries.iter());
        for &(r, c, _) in all {
            if c >= self.dim || owner[r] != owner[c] {
                return Err(SdpError::EntryOutsideBlocks(r, c));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub adaptive_rho: bool,
    pub over_relaxation: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub psd_clip: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            adaptive_rho: true,
            over_relaxation: 1.6,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            max_iter: 50_000,
            psd_clip: 0.0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SdpError> {
        if !(self.rho > 0.0) {
            return Err(SdpError::InvalidConfig("rho must be positive"));
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(SdpError::InvalidConfig("tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(SdpError::InvalidConfig("max_iter must be at least 1"));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(SdpError::InvalidConfig("over-relaxation must lie in (0, 2)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpResult {
    pub m: DMatrix<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `‖A(M) − b‖∞` of the returned matrix.
    pub constraint_violation: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Seam for swapping the embedded solver for an external one.
pub trait SdpSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpResult, SdpError>;
}

/// The embedded ADMM solver.
#[derive(Clone, Debug, Default)]
pub struct AdmmSolver {
    pub config: SolverConfig,
}

impl SdpSolver for AdmmSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpResult, SdpError> {
        solve(problem, &self.config)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Cyclic Jacobi eigensolver for a symmetric matrix.
pub fn eig_sym(a: &DMatrix<f64>) -> Result<SymEigen, SdpError> {
    if a.nrows() != a.ncols() {
        return Err(SdpError::NotSquare(a.nrows(), a.ncols()));
    }
    let asym = (a - a.transpose()).abs().max();
    let norm = a.norm();
    if asym > JACOBI_REL_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(SdpError::NotSymmetric(asym));
    }
    let n = a.nrows();
    let mut w = a.clone();
    let mut v = DMatrix::identity(n, n);
    jacobi(&mut w, &mut v, JACOBI_REL_TOL * norm);
    Ok(sorted_eigen(&w, v))
}

fn sorted_eigen(w: &DMatrix<f64>, v: DMatrix<f64>) -> SymEigen {
    let n = w.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| w[(x, x)].total_cmp(&w[(y, y)]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| w[(k, k)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Diagonalises `a` in place, accumulating rotations into the columns of `v`.
///
/// Stops once every off-diagonal entry is at most `tol`. Returns the number of
/// sweeps performed.
fn jacobi(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, tol: f64) -> usize {
    let n = a.nrows();
    let vn = v.nrows();
    let ad = a.as_mut_slice();
    let vd = v.as_mut_slice();
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for q in 1..n {
            for p in 0..q {
                off = off.max(ad[q * n + p].abs());
            }
        }
        if off <= tol {
            return sweep;
        }
        for q in 1..n {
            for p in 0..q {
                let apq = ad[q * n + p];
                if apq.abs() <= tol {
                    continue;
                }
                let app = ad[p * n + p];
                let aqq = ad[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Columns p and q are contiguous in column-major storage.
                let (lo, hi) = ad.split_at_mut(q * n);
                let col_p = &mut lo[p * n..p * n + n];
                let col_q = &mut hi[..n];
                for k in 0..n {
                    let xp = col_p[k];
                    let xq = col_q[k];
                    col_p[k] = c * xp - s * xq;
                    col_q[k] = s * xp + c * xq;
                }
                col_p[p] = app - t * apq;
                col_q[q] = aqq + t * apq;
                col_p[q] = 0.0;
                col_q[p] = 0.0;
                for k in 0..n {
                    ad[k * n + p] = ad[p * n + k];
                    ad[k * n + q] = ad[q * n + k];
                }

                let (lo, hi) = vd.split_at_mut(q * vn);
                let vp = &mut lo[p * vn..p * vn + vn];
                let vq = &mut hi[..vn];
                for k in 0..vn {
                    let xp = vp[k];
                    let xq = vq[k];
                    vp[k] = c * xp - s * xq;
                    vq[k] = s * xp + c * xq;
                }
            }
        }
    }
    JACOBI_MAX_SWEEPS
}

/// Eigenpairs of a Hermitian matrix through its real symmetric embedding
/// `[[Re, −Im], [Im, Re]]`, in which every eigenvalue appears twice.
///
/// Values are ascending; vectors are orthonormal complex columns.
pub fn eig_hermitian(h: &DMatrix<Complex<f64>>) -> Result<(Vec<f64>, Vec<DVector<Complex<f64>>>), SdpError> {
    if h.nrows() != h.ncols() {
        return Err(SdpError::NotSquare(h.nrows(), h.ncols()));
    }
    let d = h.nrows();
    let real = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        let z = h[(r % d, c % d)];
        match (r < d, c < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let e = eig_sym(&real)?;
    let values = e.values.iter().step_by(2).copied().collect();
    // Each complex eigenvector shows up as a pair (x, i·x); keep one per pair.
    let mut vectors: Vec<DVector<Complex<f64>>> = Vec::with_capacity(d);
    for k in 0..2 * d {
        if vectors.len() == d {
            break;
        }
        let mut v = DVector::from_fn(d, |r, _| Complex::new(e.vectors[(r, k)], e.vectors[(r + d, k)]));
        for w in &vectors {
            let overlap = w.dotc(&v);
            v -= w * overlap;
        }
        let nrm = v.norm();
        if nrm > 0.5 {
            vectors.push(v / Complex::new(nrm, 0.0));
        }
    }
    Ok((values, vectors))
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>, SdpError> {
    let e = eig_sym(a)?;
    Ok(clip_reconstruct(&e.values, &e.vectors, 0.0))
}

fn clip_reconstruct(values: &[f64], vectors: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = vectors.nrows();
    let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > floor).collect();
    if keep.is_empty() {
        return DMatrix::zeros(n, n);
    }
    let v = DMatrix::from_fn(n, keep.len(), |r, c| vectors[(r, keep[c])]);
    let scaled = DMatrix::from_fn(n, keep.len(), |r, c| vectors[(r, keep[c])] * values[keep[c]]);
    scaled * v.transpose()
}

/// Layout of the packed upper-triangle vector (`svec`) of a block matrix.
struct Packing {
    blocks: Vec<(usize, usize)>, // (matrix offset, svec offset)
    sizes: Vec<usize>,
    owner: Vec<usize>,
    len: usize,
}

impl Packing {
    fn new(sizes: &[usize]) -> Self {
        let mut blocks = Vec::new();
        let mut owner = Vec::new();
        let (mut mo, mut so) = (0, 0);
        for (b, &s) in sizes.iter().enumerate() {
            blocks.push((mo, so));
            owner.extend(std::iter::repeat_n(b, s));
            mo += s;
            so += s * (s + 1) / 2;
        }
        Self {
            blocks,
            sizes: sizes.to_vec(),
            owner,
            len: so,
        }
    }

    /// Packed index and scale factor (1 on the diagonal, √2 off it).
    fn index(&self, r: usize, c: usize) -> (usize, f64) {
        let (r, c) = (r.min(c), r.max(c));
        let b = self.owner[r];
        let (mo, so) = self.blocks[b];
        let (lr, lc) = (r - mo, c - mo);
        let scale = if lr == lc { 1.0 } else { std::f64::consts::SQRT_2 };
        (so + lc * (lc + 1) / 2 + lr, scale)
    }

    fn sparse_row(&self, a: &SparseSym) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = a
            .entries
            .iter()
            .map(|&(r, c, v)| {
                let (k, s) = self.index(r, c);
                (k, v * s)
            })
            .collect();
        row.sort_by_key(|&(k, _)| k);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (k, v) in row {
            match merged.last_mut() {
                Some((lk, lv)) if *lk == k => *lv += v,
                _ => merged.push((k, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        merged
    }

    fn unpack_block(&self, x: &[f64], b: usize) -> DMatrix<f64> {
        let s = self.sizes[b];
        let so = self.blocks[b].1;
        let mut m = DMatrix::zeros(s, s);
        for c in 0..s {
            for r in 0..=c {
                let v = x[so + c * (c + 1) / 2 + r];
                if r == c {
                    m[(r, c)] = v;
                } else {
                    let v = v / std::f64::consts::SQRT_2;
                    m[(r, c)] = v;
                    m[(c, r)] = v;
                }
            }
        }
        m
    }

    fn pack_block(&self, m: &DMatrix<f64>, x: &mut [f64], b: usize) {
        let s = self.sizes[b];
        let so = self.blocks[b].1;
        for c in 0..s {
            for r in 0..=c {
                x[so + c * (c + 1) / 2 + r] = if r == c {
                    m[(r, c)]
                } else {
                    0.5 * (m[(r, c)] + m[(c, r)]) * std::f64::consts::SQRT_2
                };
            }
        }
    }

    fn unpack_full(&self, x: &[f64], dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..self.sizes.len() {
            let mo = self.blocks[b].0;
            let s = self.sizes[b];
            m.view_mut((mo, mo), (s, s)).copy_from(&self.unpack_block(x, b));
        }
        m
    }
}

/// Exact projection onto `{x : Ax = b}` with `A` split into independent
/// groups of constraints that share no variables.
struct AffineProjector {
    groups: Vec<AffineGroup>,
}

struct AffineGroup {
    vars: Vec<usize>,
    rows: DMatrix<f64>, // constraints × local vars
    rhs: DVector<f64>,
    gram_inv: DMatrix<f64>,
}

impl AffineProjector {
    fn new(rows: &[Vec<(usize, f64)>], rhs: &[f64], nvars: usize) -> Self {
        // Union-find over constraints, joined through shared variables.
        let m = rows.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut first_row_of_var = vec![usize::MAX; nvars];
        for (ri, row) in rows.iter().enumerate() {
            for &(k, _) in row {
                if first_row_of_var[k] == usize::MAX {
                    first_row_of_var[k] = ri;
                } else {
                    let (a, b) = (find(&mut parent, ri), find(&mut parent, first_row_of_var[k]));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for ri in 0..m {
            let root = find(&mut parent, ri);
            members.entry(root).or_default().push(ri);
        }

        let groups = members
            .into_values()
            .map(|rs| {
                let mut vars: Vec<usize> = rs.iter().flat_map(|&ri| rows[ri].iter().map(|&(k, _)| k)).collect();
                vars.sort_unstable();
                vars.dedup();
                let mut a = DMatrix::<f64>::zeros(rs.len(), vars.len());
                for (li, &ri) in rs.iter().enumerate() {
                    for &(k, v) in &rows[ri] {
                        let lk = vars.binary_search(&k).expect("variable collected above");
                        a[(li, lk)] += v;
                    }
                }
                let rhs = DVector::from_iterator(rs.len(), rs.iter().map(|&ri| rhs[ri]));
                let gram = &a * a.transpose();
                let gram_inv = match Cholesky::new(gram.clone()) {
                    Some(ch) => ch.inverse(),
                    None => pseudo_inverse(&gram),
                };
                AffineGroup {
                    vars,
                    rows: a,
                    rhs,
                    gram_inv,
                }
            })
            .collect();
        Self { groups }
    }

    fn project(&self, y: &mut [f64]) {
        for g in &self.groups {
            let local = DVector::from_iterator(g.vars.len(), g.vars.iter().map(|&k| y[k]));
            let resid = &g.rows * &local - &g.rhs;
            let corr = g.rows.transpose() * (&g.gram_inv * resid);
            for (li, &k) in g.vars.iter().enumerate() {
                y[k] -= corr[li];
            }
        }
    }
}

fn pseudo_inverse(g: &DMatrix<f64>) -> DMatrix<f64> {
    let e = eig_sym(g).expect("Gram matrices are symmetric");
    let cutoff = 1e-10 * e.values.last().copied().unwrap_or(0.0).abs().max(1.0);
    let inv: Vec<f64> = e.values.iter().map(|&l| if l > cutoff { 1.0 / l } else { 0.0 }).collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(inv));
    &e.vectors * d * e.vectors.transpose()
}

/// Per-block eigensolver that reuses the previous eigenbasis as a starting
/// rotation; consecutive ADMM iterates differ little, so a warm start needs
/// only a sweep or two.
struct WarmEig {
    basis: Option<DMatrix<f64>>,
    calls: usize,
}

impl WarmEig {
    const COLD_EVERY: usize = 100;

    fn project(&mut self, a: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
        let n = a.nrows();
        let tol = JACOBI_REL_TOL * a.norm();
        let cold = self.calls % Self::COLD_EVERY == 0;
        self.calls += 1;
        let (mut w, q) = match (&self.basis, cold) {
            (Some(q), false) => (q.transpose() * a * q, q.clone()),
            _ => (a.clone(), DMatrix::identity(n, n)),
        };
        let mut v = DMatrix::identity(n, n);
        jacobi(&mut w, &mut v, tol);
        let vectors = q * v;
        let values: Vec<f64> = (0..n).map(|k| w[(k, k)]).collect();
        let out = clip_reconstruct(&values, &vectors, floor);
        self.basis = Some(vectors);
        out
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves `p` with ADMM; see [`SolverConfig`] for the stopping rule.
pub fn solve(p: &SdpProblem, cfg: &SolverConfig) -> Result<SdpResult, SdpError> {
    cfg.validate()?;
    p.validate()?;
    let pack = Packing::new(&p.blocks);
    let nvar = pack.len;

    // Normalise each constraint row; scaling leaves the feasible set unchanged.
    let mut rows = Vec::with_capacity(p.constraints.len());
    let mut rhs = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let row = pack.sparse_row(&c.a);
        let nrm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if nrm == 0.0 {
            continue;
        }
        rows.push(row.into_iter().map(|(k, v)| (k, v / nrm)).collect::<Vec<_>>());
        rhs.push(c.b / nrm);
    }
    let affine = AffineProjector::new(&rows, &rhs, nvar);
    let mut cvec = vec![0.0; nvar];
    for (k, v) in pack.sparse_row(&p.objective) {
        cvec[k] += v;
    }

    let mut rho = cfg.rho;
    let alpha = cfg.over_relaxation;
    let sqrt_n = (nvar as f64).sqrt();
    let mut x = vec![0.0; nvar];
    let mut z = vec![0.0; nvar];
    let mut u = vec![0.0; nvar];
    let mut xhat = vec![0.0; nvar];
    let mut eig: Vec<WarmEig> = p.blocks.iter().map(|_| WarmEig { basis: None, calls: 0 }).collect();
    let mut history: Vec<f64> = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let (mut r_pri, mut r_dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        for k in 0..nvar {
            x[k] = z[k] - u[k] + cvec[k] / rho;
        }
        affine.project(&mut x);
        for k in 0..nvar {
            xhat[k] = alpha * x[k] + (1.0 - alpha) * z[k];
        }
        let z_prev = std::mem::take(&mut z);
        let mut znew = vec![0.0; nvar];
        let target: Vec<f64> = (0..nvar).map(|k| xhat[k] + u[k]).collect();
        for (b, e) in eig.iter_mut().enumerate() {
            let blk = pack.unpack_block(&target, b);
            let proj = e.project(&blk, cfg.psd_clip);
            pack.pack_block(&proj, &mut znew, b);
        }
        z = znew;
        for k in 0..nvar {
            u[k] += xhat[k] - z[k];
        }

        r_pri = norm(&x.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
        r_dual = rho * norm(&z.iter().zip(&z_prev).map(|(a, b)| a - b).collect::<Vec<_>>());
        let eps_pri = sqrt_n * cfg.eps_abs + cfg.eps_rel * norm(&x).max(norm(&z));
        let eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * rho * norm(&u);
        if r_pri <= eps_pri && r_dual <= eps_dual {
            status = SolveStatus::Optimal;
            break;
        }

        if it % 1000 == 0 {
            let combined = r_pri + r_dual;
            if let Some(&past) = history.last() {
                if combined > 10.0 * past && combined > 1.0 {
                    status = SolveStatus::Diverged;
                    break;
                }
            }
            history.push(combined);
        }

        if cfg.adaptive_rho && it % 25 == 0 {
            let scale = if r_pri > 10.0 * r_dual {
                2.0
            } else if r_dual > 10.0 * r_pri {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                for uk in u.iter_mut() {
                    *uk /= scale;
                }
            }
        }
    }

    let m = pack.unpack_full(&z, p.dim);
    let min_eigenvalue = (0..p.blocks.len())
        .map(|b| {
            let blk = pack.unpack_block(&z, b);
            eig_sym(&blk).map(|e| e.values.first().copied().unwrap_or(0.0))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    log::debug!("admm finished after {iterations} iterations with status {status:?}");
    Ok(SdpResult {
        objective: p.objective_value(&m),
        constraint_violation: p.constraint_violation(&m),
        m,
        primal_residual: r_pri,
        dual_residual: r_dual,
        min_eigenvalue,
        iterations,
        status,
    })
}
