//! Rounding relaxation solutions to cuts and product states.
//!
//! Covers hyperplane rounding for Max Cut, Gaussian Bloch-vector rounding of
//! the degree-1 moment vectors, the minimum-degree variant, the threshold
//! algorithm that plants anti-aligned pairs on large edges, and its
//! generalisation to positive terms with Schmidt mixtures.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::hermite::HermiteTable;
use crate::analysis::special::{alpha_d, gp_f};
use crate::analysis::AnalysisError;
use crate::instance::{Instance, LocalTerm, TermClass, WeightedGraph};
use crate::lasserre::{gram_vectors, MomentSolution, RelaxationError};
use crate::sdp::{eig_hermitian, solve, SdpError, SolverConfig};

/// Tolerance on eigenvalue clipping when extracting Gram vectors.
pub const GRAM_TOL: f64 = 1e-6;

/// Margin below `γ` at which two adjacent edges count as a matching conflict.
pub const MATCHING_TOL: f64 = 1e-6;

/// Gap below which the top eigenvalue of a local term counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Expansion order for analytic per-axis expectations.
pub const EXPECTATION_ORDER: usize = 70;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error(transparent)]
    Relaxation(#[from] RelaxationError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("large edges ({}, {}) with v = {v_first} and ({}, {}) with v = {v_second} share a vertex", first.0, first.1, second.0, second.1)]
    NotMatching {
        first: (usize, usize),
        v_first: f64,
        second: (usize, usize),
        v_second: f64,
    },
    #[error("threshold {0} outside (-1/3, 1]")]
    InvalidGamma(f64),
    #[error("algorithm requires an unweighted instance")]
    Weighted,
    #[error("algorithm requires {expected} terms, edge ({i}, {j}) is {found:?}")]
    KindMismatch {
        expected: &'static str,
        i: usize,
        j: usize,
        found: TermClass,
    },
    #[error("state does not assign qubit {0}")]
    Unassigned(usize),
    #[error("qubit {0} is assigned twice")]
    AssignedTwice(usize),
    #[error("solution has {got} qubits, instance has {expected}")]
    QubitMismatch { expected: usize, got: usize },
    #[error("sample count must be positive")]
    NoSamples,
}

/// Unit Bloch vector of a pure single-qubit state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    /// Normalises `x`; `None` for the zero vector.
    pub fn from_unnormalized(x: [f64; 3]) -> Option<Self> {
        let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        (n > 0.0 && n.is_finite()).then(|| Self([x[0] / n, x[1] / n, x[2] / n]))
    }

    pub fn z(sign: f64) -> Self {
        Self([0.0, 0.0, sign.signum()])
    }

    /// Bloch vector of the pure state `c₀|0⟩ + c₁|1⟩` (normalised).
    pub fn of_state(c0: Complex<f64>, c1: Complex<f64>) -> Self {
        let x = c0.conj() * c1;
        let n = c0.norm_sqr() + c1.norm_sqr();
        Self([2.0 * x.re / n, 2.0 * x.im / n, (c0.norm_sqr() - c1.norm_sqr()) / n])
    }

    pub fn dot(&self, o: &Self) -> f64 {
        (0..3).map(|a| self.0[a] * o.0[a]).sum()
    }
}

/// State planted on a pair of qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairState {
    /// `(I − ZᵢZⱼ)/4`, the even mixture of `|01⟩` and `|10⟩`.
    MixedAntiAligned,
    /// `Σ_k w_k |l_k⟩⟨l_k| ⊗ |r_k⟩⟨r_k|`.
    SchmidtMixture {
        weights: Vec<f64>,
        left: Vec<BlochVector>,
        right: Vec<BlochVector>,
    },
}

impl PairState {
    /// `⟨aᵢ bⱼ⟩` for the pair's lower qubit `i`.
    fn correlation(&self) -> [[f64; 3]; 3] {
        match self {
            PairState::MixedAntiAligned => {
                let mut c = [[0.0; 3]; 3];
                c[2][2] = -1.0;
                c
            }
            PairState::SchmidtMixture { weights, left, right } => std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    weights
                        .iter()
                        .zip(left.iter().zip(right))
                        .map(|(w, (l, r))| w * l.0[a] * r.0[b])
                        .sum()
                })
            }),
        }
    }

    fn marginals(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            PairState::MixedAntiAligned => ([0.0; 3], [0.0; 3]),
            PairState::SchmidtMixture { weights, left, right } => {
                let m = |v: &[BlochVector]| -> [f64; 3] {
                    std::array::from_fn(|a| weights.iter().zip(v).map(|(w, x)| w * x.0[a]).sum())
                };
                (m(left), m(right))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairAssignment {
    pub i: usize,
    pub j: usize,
    pub state: PairState,
}

/// Tensor product of single-qubit states and planted pair states.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub singles: BTreeMap<usize, BlochVector>,
    pub pairs: Vec<PairAssignment>,
}

impl ProductState {
    pub fn from_singles(singles: impl IntoIterator<Item = (usize, BlochVector)>) -> Self {
        Self {
            singles: singles.into_iter().collect(),
            pairs: Vec::new(),
        }
    }

    /// Every qubit below `n` appears exactly once.
    pub fn validate(&self, n: usize) -> Result<(), RoundingError> {
        let mut seen = BTreeSet::new();
        let qubits = self.singles.keys().copied().chain(self.pairs.iter().flat_map(|p| [p.i, p.j]));
        for q in qubits {
            if !seen.insert(q) {
                return Err(RoundingError::AssignedTwice(q));
            }
        }
        match (0..n).find(|q| !seen.contains(q)) {
            Some(q) => Err(RoundingError::Unassigned(q)),
            None => Ok(()),
        }
    }

    fn pair_of(&self, q: usize) -> Option<&PairAssignment> {
        self.pairs.iter().find(|p| p.i == q || p.j == q)
    }

    /// Single-qubit Bloch vector `⟨σ_q⟩`.
    pub fn marginal(&self, q: usize) -> [f64; 3] {
        if let Some(b) = self.singles.get(&q) {
            return b.0;
        }
        match self.pair_of(q) {
            Some(p) => {
                let (l, r) = p.state.marginals();
                if p.i == q {
                    l
                } else {
                    r
                }
            }
            None => [0.0; 3],
        }
    }

    /// `⟨aᵢ bⱼ⟩` for `i ≠ j`.
    pub fn correlation(&self, i: usize, j: usize) -> [[f64; 3]; 3] {
        if let Some(p) = self.pair_of(i).filter(|p| (p.i == i && p.j == j) || (p.i == j && p.j == i)) {
            let c = p.state.correlation();
            return if p.i == i { c } else { std::array::from_fn(|a| std::array::from_fn(|b| c[b][a])) };
        }
        let (mi, mj) = (self.marginal(i), self.marginal(j));
        std::array::from_fn(|a| std::array::from_fn(|b| mi[a] * mj[b]))
    }

    /// Replaces the `k`-th anti-aligned pair by `|01⟩` when bit `k` of
    /// `pattern` is clear and by `|10⟩` when it is set.
    pub fn pure_resolution(&self, pattern: u64) -> ProductState {
        let mut out = ProductState {
            singles: self.singles.clone(),
            pairs: Vec::new(),
        };
        let mut k = 0;
        for p in &self.pairs {
            match p.state {
                PairState::MixedAntiAligned => {
                    let s = if pattern >> k & 1 == 0 { 1.0 } else { -1.0 };
                    out.singles.insert(p.i, BlochVector::z(s));
                    out.singles.insert(p.j, BlochVector::z(-s));
                    k += 1;
                }
                _ => out.pairs.push(p.clone()),
            }
        }
        out
    }

    pub fn mixed_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.state == PairState::MixedAntiAligned).count()
    }
}

/// `c_id + Σ C[a][b]·corr[a][b]`.
pub fn term_energy(term: &LocalTerm, corr: &[[f64; 3]; 3]) -> f64 {
    term.c_id + (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| term.c[a][b] * corr[a][b]).sum::<f64>()
}

/// Weighted energy of every edge.
pub fn edge_energies(inst: &Instance, s: &ProductState) -> Vec<f64> {
    inst.edge_terms()
        .map(|(e, t)| e.w * term_energy(t, &s.correlation(e.i, e.j)))
        .collect()
}

/// `tr[Hρ]` for a product state covering every qubit.
pub fn energy(inst: &Instance, s: &ProductState) -> Result<f64, RoundingError> {
    s.validate(inst.n())?;
    Ok(edge_energies(inst, s).iter().sum())
}

/// Deterministic random stream for `(seed, sample, lane)`. Lane 0 carries the
/// shared Gaussian vectors; lane `1 + q` carries draws private to qubit `q`.
pub fn stream(seed: u64, sample: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng.set_word_pos((lane as u128) << 48);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random-hyperplane rounding of unit vectors stored as columns: the sign of
/// `⟨vᵢ, r⟩`, with exact zeros mapped to `+1`.
pub fn gw_round(vectors: &DMatrix<f64>, seed: u64, sample: u64) -> Vec<i8> {
    let r = gaussian_vector(&mut stream(seed, sample, 0), vectors.nrows());
    vectors
        .column_iter()
        .map(|v| if v.dot(&r) >= 0.0 { 1 } else { -1 })
        .collect()
}

/// Source of the per-qubit Gaussian projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingMode {
    /// One vector `Wᵢ = (Xᵢ ⊕ Yᵢ ⊕ Zᵢ)/√3` per qubit and three Gaussians.
    WVector,
    /// The three vectors `Xᵢ, Yᵢ, Zᵢ` and one shared Gaussian.
    PerQubit,
}

/// Gaussian Bloch-vector rounding of the degree-1 moment vectors.
#[derive(Clone, Debug)]
pub struct ProductRounder {
    mode: RoundingMode,
    n: usize,
    /// Unit vectors as columns: `n` of them in w-vector mode, `3n` (ordered
    /// by qubit then axis) in per-qubit mode.
    vectors: DMatrix<f64>,
}

impl ProductRounder {
    /// From the `3n × 3n` Gram matrix of the degree-1 vectors.
    pub fn new(gram: &DMatrix<f64>, mode: RoundingMode) -> Result<Self, RoundingError> {
        let n = gram.nrows() / 3;
        let vectors = match mode {
            RoundingMode::WVector => {
                let w = DMatrix::from_fn(n, n, |i, j| (0..3).map(|a| gram[(3 * i + a, 3 * j + a)]).sum::<f64>() / 3.0);
                gram_vectors(&w, GRAM_TOL)?
            }
            RoundingMode::PerQubit => gram_vectors(gram, GRAM_TOL)?,
        };
        Ok(Self { mode, n, vectors })
    }

    pub fn from_solution(sol: &MomentSolution, mode: RoundingMode) -> Result<Self, RoundingError> {
        Self::new(&sol.degree1_gram(), mode)
    }

    pub fn mode(&self) -> RoundingMode {
        self.mode
    }

    /// Bloch vectors of every qubit for one sample. A zero projection, a
    /// probability-zero event, triggers a fresh draw of all Gaussians.
    pub fn sample(&self, seed: u64, sample: u64) -> Vec<BlochVector> {
        let d = self.vectors.nrows();
        let mut rng = stream(seed, sample, 0);
        loop {
            let raw: Vec<[f64; 3]> = match self.mode {
                RoundingMode::WVector => {
                    let rs = [gaussian_vector(&mut rng, d), gaussian_vector(&mut rng, d), gaussian_vector(&mut rng, d)];
                    self.vectors
                        .column_iter()
                        .map(|w| std::array::from_fn(|a| w.dot(&rs[a])))
                        .collect()
                }
                RoundingMode::PerQubit => {
                    let r = gaussian_vector(&mut rng, d);
                    (0..self.n)
                        .map(|q| std::array::from_fn(|a| self.vectors.column(3 * q + a).dot(&r)))
                        .collect()
                }
            };
            let unit: Option<Vec<BlochVector>> = raw.into_iter().map(BlochVector::from_unnormalized).collect();
            if let Some(u) = unit {
                return u;
            }
        }
    }
}

/// One sample of Gaussian product rounding.
pub fn qmc_product_round(gram: &DMatrix<f64>, seed: u64, mode: RoundingMode) -> Result<Vec<BlochVector>, RoundingError> {
    Ok(ProductRounder::new(gram, mode)?.sample(seed, 0))
}

/// Role of an edge in the threshold algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRole {
    /// Both endpoints rounded independently.
    Bulk,
    /// A large edge carrying a planted pair.
    Large,
    /// Adjacent to a large edge.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub v: f64,
    pub role: EdgeRole,
    /// Mean weighted energy over the samples.
    pub realized: f64,
    /// Standard error of `realized`.
    pub std_error: f64,
    /// Weighted analytic expectation.
    pub expected: f64,
    /// Half-width of the truncation bracket around `expected`.
    pub expected_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingReport {
    pub algorithm: String,
    pub seed: u64,
    pub samples: u64,
    pub edges: Vec<EdgeReport>,
    pub realized_total: f64,
    pub expected_total: f64,
    /// Relaxation value the ratios refer to.
    pub relaxation_value: f64,
    pub realized_ratio: f64,
    pub expected_ratio: f64,
    /// Guarantee the algorithm claims on this instance, if any.
    pub guarantee: Option<f64>,
    pub notes: Vec<String>,
}

impl RoundingReport {
    fn assemble(algorithm: &str, seed: u64, samples: u64, edges: Vec<EdgeReport>, relaxation_value: f64) -> Self {
        let realized_total = edges.iter().map(|e| e.realized).sum();
        let expected_total = edges.iter().map(|e| e.expected).sum();
        let ratio = |x: f64| if relaxation_value > 0.0 { x / relaxation_value } else { f64::NAN };
        Self {
            algorithm: algorithm.to_string(),
            seed,
            samples,
            edges,
            realized_total,
            expected_total,
            relaxation_value,
            realized_ratio: ratio(realized_total),
            expected_ratio: ratio(expected_total),
            guarantee: None,
            notes: Vec::new(),
        }
    }
}

/// Options shared by the product-state algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOptions {
    pub seed: u64,
    pub samples: u64,
    pub mode: RoundingMode,
    pub gamma: f64,
    /// Sample `|01⟩`/`|10⟩` on planted pairs instead of the mixed state.
    pub pure: bool,
}

impl Default for RoundOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 1,
            mode: RoundingMode::WVector,
            gamma: crate::analysis::special::GAMMA_DEFAULT,
            pure: false,
        }
    }
}

/// Per-edge mean and standard error over samples of a state generator.
fn sample_edges(inst: &Instance, samples: u64, gen: impl Fn(u64) -> ProductState + Sync) -> (Vec<(f64, f64)>, ProductState) {
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| edge_energies(inst, &gen(s)))
        .collect();
    let m = inst.graph().edges().len();
    let k = samples as f64;
    let stats = (0..m)
        .map(|e| {
            let mean = per_sample.iter().map(|x| x[e]).sum::<f64>() / k;
            let var = if samples > 1 {
                per_sample.iter().map(|x| (x[e] - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            (mean, (var / k).sqrt())
        })
        .collect();
    (stats, gen(0))
}

fn check_solution(inst: &Instance, sol: &MomentSolution) -> Result<(), RoundingError> {
    if sol.n() != inst.n() {
        return Err(RoundingError::QubitMismatch {
            expected: inst.n(),
            got: sol.n(),
        });
    }
    Ok(())
}

fn check_samples(opts: &RoundOptions) -> Result<(), RoundingError> {
    if opts.samples == 0 {
        return Err(RoundingError::NoSamples);
    }
    Ok(())
}

/// Product rounding of every qubit; the analytic expectation of a QMC
/// edge is `w(1 + F(3, v))/4`, of a generic edge the per-axis series.
pub fn product_round(inst: &Instance, sol: &MomentSolution, opts: &RoundOptions) -> Result<(ProductState, RoundingReport), RoundingError> {
    check_solution(inst, sol)?;
    check_samples(opts)?;
    let rounder = ProductRounder::from_solution(sol, opts.mode)?;
    let gen = |s: u64| ProductState::from_singles(rounder.sample(opts.seed, s).into_iter().enumerate());
    let (stats, state) = sample_edges(inst, opts.samples, gen);
    let table = HermiteTable::new(EXPECTATION_ORDER)?;
    let edges = inst
        .edge_terms()
        .zip(&sol.edges)
        .zip(stats)
        .map(|(((e, t), ev), (realized, std_error))| {
            let (expected, expected_error) = bulk_expectation(t, ev.block_matrix(), opts.mode, &table);
            EdgeReport {
                i: e.i,
                j: e.j,
                w: e.w,
                v: ev.v,
                role: EdgeRole::Bulk,
                realized,
                std_error,
                expected: e.w * expected,
                expected_error: e.w * expected_error,
            }
        })
        .collect();
    let report = RoundingReport::assemble("product", opts.seed, opts.samples, edges, sol.objective);
    Ok((state, report))
}

/// Analytic expectation of a term under independent Gaussian rounding, with
/// the moment block `M[a][b] = ⟨aᵢ bⱼ⟩`.
fn bulk_expectation(term: &LocalTerm, block: Matrix3<f64>, mode: RoundingMode, table: &HermiteTable) -> (f64, f64) {
    if mode == RoundingMode::WVector || term.is_qmc() {
        // In w-vector mode only the averaged correlation ⟨Wᵢ, Wⱼ⟩ enters.
        let t = block.trace() / 3.0;
        let f = gp_f(3, t);
        let corr = Matrix3::identity() * (f / 3.0);
        return (term.c_id + (term.cost().transpose() * corr).trace(), 0.0);
    }
    let svd = crate::instance::SignedSvd::of(&block);
    let [a, b, c] = svd.sigma;
    let comps = table.components(a, b, c);
    let corr = svd.u * Matrix3::from_diagonal(&comps.into()) * svd.v.transpose();
    let rotated = svd.u.transpose() * term.cost() * svd.v;
    let err = table.remainder * (0..3).map(|k| rotated[(k, k)].abs()).sum::<f64>();
    (term.c_id + (term.cost().transpose() * corr).trace(), err)
}

/// Product rounding on an unweighted instance, reporting the guarantee
/// `α(d)` for its minimum degree `d`.
pub fn min_degree_round(inst: &Instance, sol: &MomentSolution, opts: &RoundOptions) -> Result<(ProductState, RoundingReport), RoundingError> {
    if !inst.graph().is_unweighted() {
        return Err(RoundingError::Weighted);
    }
    let (state, mut report) = product_round(inst, sol, opts)?;
    report.algorithm = "mindeg".to_string();
    let d = inst.graph().min_degree();
    report.guarantee = (d >= 1).then(|| alpha_d(d));
    Ok((state, report))
}

/// Edges with `v > γ`, checked to form a matching.
pub fn large_edges(sol: &MomentSolution, gamma: f64) -> Result<Vec<usize>, RoundingError> {
    if !(gamma > -1.0 / 3.0 && gamma <= 1.0) {
        return Err(RoundingError::InvalidGamma(gamma));
    }
    let near: Vec<usize> = (0..sol.edges.len()).filter(|&k| sol.edges[k].v > gamma - MATCHING_TOL).collect();
    for (x, &a) in near.iter().enumerate() {
        for &b in &near[x + 1..] {
            let (ea, eb) = (&sol.edges[a], &sol.edges[b]);
            if ea.i == eb.i || ea.i == eb.j || ea.j == eb.i || ea.j == eb.j {
                return Err(RoundingError::NotMatching {
                    first: (ea.i, ea.j),
                    v_first: ea.v,
                    second: (eb.i, eb.j),
                    v_second: eb.v,
                });
            }
        }
    }
    Ok(near.into_iter().filter(|&k| sol.edges[k].v > gamma).collect())
}

fn roles(inst: &Instance, large: &[usize]) -> (Vec<EdgeRole>, BTreeSet<usize>) {
    let covered: BTreeSet<usize> = large
        .iter()
        .flat_map(|&k| {
            let e = &inst.graph().edges()[k];
            [e.i, e.j]
        })
        .collect();
    let roles = inst
        .graph()
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if large.contains(&k) {
                EdgeRole::Large
            } else if covered.contains(&e.i) || covered.contains(&e.j) {
                EdgeRole::Boundary
            } else {
                EdgeRole::Bulk
            }
        })
        .collect();
    (roles, covered)
}

/// Threshold algorithm for QMC: large edges get `(I − ZZ)/4`, every other
/// qubit is rounded with Gaussian product rounding.
pub fn threshold_round(inst: &Instance, sol: &MomentSolution, opts: &RoundOptions) -> Result<(ProductState, RoundingReport), RoundingError> {
    check_solution(inst, sol)?;
    check_samples(opts)?;
    if let Some((e, t)) = inst.edge_terms().find(|(_, t)| !t.is_qmc()) {
        return Err(RoundingError::KindMismatch {
            expected: "qmc",
            i: e.i,
            j: e.j,
            found: t.classify().0,
        });
    }
    let large = large_edges(sol, opts.gamma)?;
    let (edge_roles, covered) = roles(inst, &large);
    let rounder = ProductRounder::from_solution(sol, opts.mode)?;
    let pairs: Vec<PairAssignment> = large
        .iter()
        .map(|&k| {
            let e = &inst.graph().edges()[k];
            PairAssignment {
                i: e.i,
                j: e.j,
                state: PairState::MixedAntiAligned,
            }
        })
        .collect();
    let gen = |s: u64| {
        let singles = rounder
            .sample(opts.seed, s)
            .into_iter()
            .enumerate()
            .filter(|(q, _)| !covered.contains(q));
        let state = ProductState {
            singles: singles.collect(),
            pairs: pairs.clone(),
        };
        if opts.pure {
            state.pure_resolution(pure_pattern(opts.seed, s, &pairs))
        } else {
            state
        }
    };
    let (stats, state) = sample_edges(inst, opts.samples, gen);
    let edges = inst
        .graph()
        .edges()
        .iter()
        .zip(&sol.edges)
        .zip(edge_roles)
        .zip(stats)
        .map(|(((e, ev), role), (realized, std_error))| {
            let per_unit = match role {
                EdgeRole::Large => 0.5,
                EdgeRole::Boundary => 0.25,
                EdgeRole::Bulk => (1.0 + gp_f(3, ev.v)) / 4.0,
            };
            EdgeReport {
                i: e.i,
                j: e.j,
                w: e.w,
                v: ev.v,
                role,
                realized,
                std_error,
                expected: e.w * per_unit,
                expected_error: 0.0,
            }
        })
        .collect();
    let mut report = RoundingReport::assemble("threshold", opts.seed, opts.samples, edges, sol.objective);
    report.guarantee = Some(0.5);
    Ok((state, report))
}

/// One fair coin per planted pair, drawn from the pair's lower qubit lane.
fn pure_pattern(seed: u64, sample: u64, pairs: &[PairAssignment]) -> u64 {
    pairs
        .iter()
        .filter(|p| p.state == PairState::MixedAntiAligned)
        .enumerate()
        .fold(0u64, |acc, (k, p)| {
            let bit = stream(seed, sample, 1 + p.i as u64).random::<bool>();
            acc | (u64::from(bit) << k)
        })
}

/// Schmidt mixture of the top eigenvector of a local term.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtPlan {
    pub state: PairState,
    /// `tr[H η]` for the unit-weight term.
    pub energy: f64,
    pub lambda_max: f64,
    /// The top eigenvalue was degenerate.
    pub tie: bool,
}

/// Mixture `Σ_k α_k² |l_k⟩⟨l_k| ⊗ |r_k⟩⟨r_k|` from the Schmidt decomposition
/// `ψ = Σ_k α_k |l_k⟩|r_k⟩` of a two-qubit vector in `|ab⟩` order.
pub fn schmidt_mixture(psi: &DVector<Complex<f64>>) -> PairState {
    let m = Matrix2::new(psi[0], psi[1], psi[2], psi[3]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᴴ");
    let norm: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut weights = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for k in 0..2 {
        let w = svd.singular_values[k].powi(2) / norm;
        if w <= 1e-15 {
            continue;
        }
        weights.push(w);
        left.push(BlochVector::of_state(u[(0, k)], u[(1, k)]));
        right.push(BlochVector::of_state(vt[(k, 0)], vt[(k, 1)]));
    }
    PairState::SchmidtMixture { weights, left, right }
}

/// Top eigenvector of the 4×4 term, its Schmidt decomposition and the
/// resulting mixture of product states.
pub fn schmidt_plan(term: &LocalTerm) -> Result<SchmidtPlan, RoundingError> {
    let h = term.matrix();
    let (values, vectors) = eig_hermitian(&h)?;
    let lambda_max = values[3];
    let tie = values[3] - values[2] < DEGENERACY_TOL;
    let state = schmidt_mixture(&vectors[3]);
    let energy = term_energy(term, &state.correlation());
    Ok(SchmidtPlan {
        state,
        energy,
        lambda_max,
        tie,
    })
}

/// Threshold algorithm for positive terms: large edges (by the generic
/// value) get the Schmidt mixture of their term's top eigenvector, the rest
/// is rounded per qubit.
pub fn generic_threshold_round(inst: &Instance, sol: &MomentSolution, opts: &RoundOptions) -> Result<(ProductState, RoundingReport), RoundingError> {
    check_solution(inst, sol)?;
    check_samples(opts)?;
    for (e, t) in inst.edge_terms() {
        let class = t.classify().0;
        if class == TermClass::General {
            return Err(RoundingError::KindMismatch {
                expected: "positive",
                i: e.i,
                j: e.j,
                found: class,
            });
        }
    }
    let large = large_edges(sol, opts.gamma)?;
    let (edge_roles, covered) = roles(inst, &large);
    let rounder = ProductRounder::from_solution(sol, RoundingMode::PerQubit)?;
    let mut notes = Vec::new();
    let mut pairs = Vec::new();
    let mut pair_energy = BTreeMap::new();
    for &k in &large {
        let e = &inst.graph().edges()[k];
        let plan = schmidt_plan(&inst.terms()[k])?;
        if plan.tie {
            notes.push(format!("edge ({}, {}): degenerate top eigenvalue, solver order used", e.i, e.j));
        }
        pair_energy.insert(k, plan.energy);
        pairs.push(PairAssignment {
            i: e.i,
            j: e.j,
            state: plan.state,
        });
    }
    let gen = |s: u64| ProductState {
        singles: rounder
            .sample(opts.seed, s)
            .into_iter()
            .enumerate()
            .filter(|(q, _)| !covered.contains(q))
            .collect(),
        pairs: pairs.clone(),
    };
    let (stats, state) = sample_edges(inst, opts.samples, gen);
    let table = HermiteTable::new(EXPECTATION_ORDER)?;
    let edges = inst
        .edge_terms()
        .enumerate()
        .zip(&sol.edges)
        .zip(edge_roles)
        .zip(stats)
        .map(|((((k, (e, t)), ev), role), (realized, std_error))| {
            let (expected, err) = match role {
                EdgeRole::Large => (pair_energy[&k], 0.0),
                EdgeRole::Boundary => (t.c_id, 0.0),
                EdgeRole::Bulk => bulk_expectation(t, ev.block_matrix(), RoundingMode::PerQubit, &table),
            };
            EdgeReport {
                i: e.i,
                j: e.j,
                w: e.w,
                v: ev.v,
                role,
                realized,
                std_error,
                expected: e.w * expected,
                expected_error: e.w * err,
            }
        })
        .collect();
    let mut report = RoundingReport::assemble("generic", opts.seed, opts.samples, edges, sol.objective);
    report.notes = notes;
    Ok((state, report))
}

/// Max Cut assignment with its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutOutcome {
    /// `±1` per vertex from sample 0.
    pub assignment: Vec<i8>,
    pub report: RoundingReport,
}

/// Solves the Max Cut relaxation of `g` and applies hyperplane rounding.
/// The expected cut weight of an edge is `w(1 − F(1, Xᵢⱼ))/2`.
pub fn max_cut_round(g: &WeightedGraph, cfg: &SolverConfig, seed: u64, samples: u64) -> Result<CutOutcome, RoundingError> {
    if samples == 0 {
        return Err(RoundingError::NoSamples);
    }
    let problem = crate::lasserre::build_max_cut(g);
    let res = solve(&problem, cfg)?;
    let vectors = gram_vectors(&res.m, GRAM_TOL)?;
    let cuts: Vec<Vec<i8>> = (0..samples).into_par_iter().map(|s| gw_round(&vectors, seed, s)).collect();
    let k = samples as f64;
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            let vals: Vec<f64> = cuts
                .iter()
                .map(|c| if c[e.i] != c[e.j] { e.w } else { 0.0 })
                .collect();
            let mean = vals.iter().sum::<f64>() / k;
            let var = if samples > 1 {
                vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            let x = res.m[(e.i, e.j)];
            EdgeReport {
                i: e.i,
                j: e.j,
                w: e.w,
                v: x,
                role: EdgeRole::Bulk,
                realized: mean,
                std_error: (var / k).sqrt(),
                expected: e.w * (1.0 - gp_f(1, x)) / 2.0,
                expected_error: 0.0,
            }
        })
        .collect();
    let mut report = RoundingReport::assemble("gw", seed, samples, edges, res.objective);
    report.guarantee = Some(0.878);
    Ok(CutOutcome {
        assignment: cuts.into_iter().next().unwrap_or_default(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{qmc_instance, InstanceKind};
    use crate::lasserre::solve_level;
    use crate::pauli::{Axis, PauliPolynomial, PauliTerm};
    use approx::assert_relative_eq;

    fn graph(n: usize, edges: &[(usize, usize)]) -> WeightedGraph {
        WeightedGraph::new(n, edges.iter().map(|&(i, j)| (i, j, 1.0))).unwrap()
    }

    fn bloch_poly(q: usize, v: &[f64; 3], scale: f64) -> PauliPolynomial {
        let mut p = PauliPolynomial::from_terms([(PauliTerm::identity(), scale * 0.5)]);
        for a in Axis::ALL {
            p.add_term(PauliTerm::single(q, a), scale * 0.5 * v[a.index()]);
        }
        p
    }

    /// Dense `tr[Hρ]` with `ρ` built as a Pauli polynomial.
    fn dense_energy(inst: &Instance, s: &ProductState) -> f64 {
        let n = inst.n();
        let mut rho = PauliPolynomial::from_terms([(PauliTerm::identity(), 1.0)]);
        for (&q, b) in &s.singles {
            rho = rho.jordan_product(&bloch_poly(q, &b.0, 1.0));
        }
        for p in &s.pairs {
            let factor = match &p.state {
                PairState::MixedAntiAligned => PauliPolynomial::from_terms([
                    (PauliTerm::identity(), 0.25),
                    (PauliTerm::pair(p.i, Axis::Z, p.j, Axis::Z), -0.25),
                ]),
                PairState::SchmidtMixture { weights, left, right } => {
                    let mut acc = PauliPolynomial::new();
                    for k in 0..weights.len() {
                        let term = bloch_poly(p.i, &left[k].0, weights[k]).jordan_product(&bloch_poly(p.j, &right[k].0, 1.0));
                        for (t, c) in term.iter() {
                            acc.add_term(t.clone(), c);
                        }
                    }
                    acc
                }
            };
            rho = rho.jordan_product(&factor);
        }
        let h = inst.hamiltonian().matrix(n).unwrap();
        let r = rho.matrix(n).unwrap();
        (h * r).trace().re
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> BlochVector {
        loop {
            let x: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
            if let Some(b) = BlochVector::from_unnormalized(x) {
                return b;
            }
        }
    }

    #[test]
    fn energy_examples() {
        let inst = qmc_instance(graph(2, &[(0, 1)]));
        let anti = ProductState::from_singles([(0, BlochVector([0.0, 0.0, 1.0])), (1, BlochVector([0.0, 0.0, -1.0]))]);
        assert_relative_eq!(energy(&inst, &anti).unwrap(), 0.5, epsilon = 1e-15);
        let same = ProductState::from_singles([(0, BlochVector([0.0, 1.0, 0.0])), (1, BlochVector([0.0, 1.0, 0.0]))]);
        assert_relative_eq!(energy(&inst, &same).unwrap(), 0.0, epsilon = 1e-15);
        let mixed = ProductState {
            singles: BTreeMap::new(),
            pairs: vec![PairAssignment {
                i: 0,
                j: 1,
                state: PairState::MixedAntiAligned,
            }],
        };
        assert_relative_eq!(energy(&inst, &mixed).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(energy(&inst, &ProductState::default()), Err(RoundingError::Unassigned(0))));
    }

    #[test]
    fn energy_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = 2 + trial % 5;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < 0.6 {
                        edges.push((i, j, rng.random::<f64>() + 0.1));
                    }
                }
            }
            if edges.is_empty() {
                edges.push((0, 1, 1.0));
            }
            let terms: Vec<LocalTerm> = edges
                .iter()
                .map(|_| LocalTerm::new(rng.random::<f64>(), Matrix3::from_fn(|_, _| rng.random::<f64>() - 0.5)))
                .collect();
            let inst = Instance::from_edges(
                n,
                edges.iter().zip(terms).map(|(&(i, j, w), t)| (i, j, w, t)),
                InstanceKind::General,
            )
            .unwrap();
            let mut state = ProductState::default();
            let mut q = 0;
            while q < n {
                if q + 1 < n && rng.random::<bool>() {
                    let st = if rng.random::<bool>() {
                        PairState::MixedAntiAligned
                    } else {
                        let w = rng.random::<f64>();
                        PairState::SchmidtMixture {
                            weights: vec![w, 1.0 - w],
                            left: vec![random_unit(&mut rng), random_unit(&mut rng)],
                            right: vec![random_unit(&mut rng), random_unit(&mut rng)],
                        }
                    };
                    state.pairs.push(PairAssignment { i: q, j: q + 1, state: st });
                    q += 2;
                } else {
                    state.singles.insert(q, random_unit(&mut rng));
                    q += 1;
                }
            }
            let fast = energy(&inst, &state).unwrap();
            assert_relative_eq!(fast, dense_energy(&inst, &state), epsilon = 1e-10);
        }
    }

    #[test]
    fn hyperplane_rounding_examples() {
        let anti = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let same = DMatrix::from_column_slice(2, 2, &[0.6, 0.8, 0.6, 0.8]);
        let orth = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let mut cut = 0;
        let samples = 100_000;
        for s in 0..samples {
            let a = gw_round(&anti, 3, s);
            assert_ne!(a[0], a[1]);
            let b = gw_round(&same, 3, s);
            assert_eq!(b[0], b[1]);
            let c = gw_round(&orth, 3, s);
            cut += usize::from(c[0] != c[1]);
        }
        let p = cut as f64 / samples as f64;
        let sigma = (0.25 / samples as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * sigma, "{p}");
    }

    #[test]
    fn anti_aligned_w_vectors_round_to_opposite_bloch_vectors() {
        // ⟨aᵢ aⱼ⟩ = −1 on every axis.
        let gram = DMatrix::from_fn(6, 6, |r, c| {
            if r == c {
                1.0
            } else if r % 3 == c % 3 {
                -1.0
            } else {
                0.0
            }
        });
        let rounder = ProductRounder::new(&gram, RoundingMode::WVector).unwrap();
        for s in 0..100 {
            let b = rounder.sample(5, s);
            assert_relative_eq!(b[0].dot(&b[1]), -1.0, epsilon = 1e-12);
        }
    }

    fn two_qubit_gram(t: f64) -> DMatrix<f64> {
        // ⟨aᵢ aⱼ⟩ = t on every axis.
        DMatrix::from_fn(6, 6, |r, c| {
            if r == c {
                1.0
            } else if r % 3 == c % 3 {
                t
            } else {
                0.0
            }
        })
    }

    #[test]
    fn monte_carlo_matches_the_closed_form() {
        let inst = qmc_instance(graph(2, &[(0, 1)]));
        for mode in [RoundingMode::WVector, RoundingMode::PerQubit] {
            for &v in &[0.0, 0.5] {
                let rounder = ProductRounder::new(&two_qubit_gram(-v), mode).unwrap();
                let samples = 20_000u64;
                let vals: Vec<f64> = (0..samples)
                    .map(|s| {
                        let b = rounder.sample(9, s);
                        energy(&inst, &ProductState::from_singles(b.into_iter().enumerate())).unwrap()
                    })
                    .collect();
                let mean = vals.iter().sum::<f64>() / samples as f64;
                let sd = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0)).sqrt();
                let want = (1.0 + gp_f(3, v)) / 4.0;
                assert!((mean - want).abs() < 3.0 * sd / (samples as f64).sqrt(), "{mode:?} v={v}: {mean} vs {want}");
            }
        }
    }

    #[test]
    fn samples_are_reproducible_and_parallel_safe() {
        let inst = qmc_instance(graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]));
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let opts = RoundOptions {
            samples: 64,
            seed: 17,
            ..Default::default()
        };
        let (s1, r1) = product_round(&inst, &sol, &opts).unwrap();
        let (s2, r2) = product_round(&inst, &sol, &opts).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(r1, r2);
        let rounder = ProductRounder::from_solution(&sol, RoundingMode::WVector).unwrap();
        let seq: Vec<_> = (0..64).map(|s| rounder.sample(17, s)).collect();
        let par: Vec<_> = (0..64u64).into_par_iter().map(|s| rounder.sample(17, s)).collect();
        assert_eq!(seq, par);
    }

    #[test]
    fn threshold_on_a_single_edge() {
        let inst = qmc_instance(graph(2, &[(0, 1)]));
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let (state, rep) = threshold_round(&inst, &sol, &RoundOptions::default()).unwrap();
        assert_eq!(state.mixed_pairs(), 1);
        assert_relative_eq!(rep.realized_total, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rep.expected_total, 0.5, epsilon = 1e-15);
        assert!((rep.expected_ratio - 0.5).abs() < 1e-5);
    }

    #[test]
    fn threshold_without_large_edges_is_product_rounding() {
        let inst = qmc_instance(graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]));
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        assert!(sol.edges.iter().all(|e| e.v < 0.911));
        let opts = RoundOptions {
            samples: 8,
            ..Default::default()
        };
        let (a, ra) = threshold_round(&inst, &sol, &opts).unwrap();
        let (b, rb) = product_round(&inst, &sol, &opts).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(ra.realized_total, rb.realized_total, epsilon = 1e-12);
        assert_relative_eq!(ra.expected_total, rb.expected_total, epsilon = 1e-12);
    }

    #[test]
    fn threshold_on_a_weighted_path() {
        // A heavy edge pulls its value above γ; the light neighbour stays small.
        let g = WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 0.05)]).unwrap();
        let inst = qmc_instance(g);
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        assert!(sol.edges[0].v > 0.911);
        let (_, rep) = threshold_round(&inst, &sol, &RoundOptions::default()).unwrap();
        let boundary = &rep.edges[1];
        assert_eq!(boundary.role, EdgeRole::Boundary);
        assert!(boundary.v < 1.0 / 3.0);
        assert!(boundary.expected / boundary.w > sol.edges[1].mu / 2.0);
        assert!(rep.expected_total >= 0.5 * sol.objective - 1e-8);
    }

    #[test]
    fn matching_violation_is_reported() {
        let inst = qmc_instance(graph(3, &[(0, 1), (1, 2)]));
        let basis = crate::lasserre::MomentBasis::new(3, 1).unwrap();
        let mut m = DMatrix::<f64>::identity(basis.len(), basis.len());
        for (i, j) in [(0usize, 1usize), (1, 2)] {
            for a in Axis::ALL {
                let (r, c) = (basis.single_index(i, a), basis.single_index(j, a));
                m[(r, c)] = -0.95;
                m[(c, r)] = -0.95;
            }
        }
        let sol = MomentSolution::from_matrix(basis, m, &inst, 0.0);
        let err = threshold_round(&inst, &sol, &RoundOptions::default()).unwrap_err();
        assert!(matches!(err, RoundingError::NotMatching { .. }), "{err}");
    }

    #[test]
    fn pure_patterns_average_to_the_mixed_energy() {
        let g = WeightedGraph::new(6, [(0, 1, 1.0), (2, 3, 1.0), (4, 5, 1.0), (1, 2, 0.3), (3, 4, 0.7)]).unwrap();
        let inst = qmc_instance(g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut state = ProductState::default();
        for (i, j) in [(0, 1), (2, 3), (4, 5)] {
            state.pairs.push(PairAssignment {
                i,
                j,
                state: PairState::MixedAntiAligned,
            });
        }
        let mixed = energy(&inst, &state).unwrap();
        let avg = (0..8u64).map(|p| energy(&inst, &state.pure_resolution(p)).unwrap()).sum::<f64>() / 8.0;
        assert_relative_eq!(mixed, avg, epsilon = 1e-14);
        let _ = random_unit(&mut rng);
    }

    #[test]
    fn schmidt_plans() {
        let plan = schmidt_plan(&LocalTerm::qmc()).unwrap();
        match &plan.state {
            PairState::SchmidtMixture { weights, .. } => {
                assert_eq!(weights.len(), 2);
                assert_relative_eq!(weights[0], 0.5, epsilon = 1e-10);
            }
            _ => unreachable!(),
        }
        assert_relative_eq!(plan.energy, 0.5, epsilon = 1e-10);
        assert!(!plan.tie);

        // (I + Z⊗I + I⊗Z + Z⊗Z)/4 = |00⟩⟨00| is not strictly quadratic, so
        // use (I + ZZ)/2 whose top eigenspace contains product states.
        let mut c = Matrix3::zeros();
        c[(2, 2)] = 0.5;
        let plan = schmidt_plan(&LocalTerm::new(0.5, c)).unwrap();
        assert!(plan.tie);
        assert!(plan.energy <= plan.lambda_max + 1e-12);
        assert!(plan.energy >= plan.lambda_max / 2.0 - 1e-12);
    }

    #[test]
    fn product_vector_has_a_single_schmidt_component() {
        // |0⟩ ⊗ |+i⟩
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = DVector::from_vec(vec![
            Complex::new(h, 0.0),
            Complex::new(0.0, h),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
        ]);
        match schmidt_mixture(&psi) {
            PairState::SchmidtMixture { weights, left, right } => {
                assert_eq!(weights.len(), 1);
                assert_relative_eq!(weights[0], 1.0, epsilon = 1e-12);
                assert_relative_eq!(left[0].0[2], 1.0, epsilon = 1e-12);
                assert_relative_eq!(right[0].0[1], 1.0, epsilon = 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn random_rank_one_terms_get_half_their_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let rot = |rng: &mut ChaCha8Rng| {
                let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                ));
                q.to_rotation_matrix().into_inner()
            };
            let term = LocalTerm::qmc().rotated(&rot(&mut rng), &rot(&mut rng));
            let plan = schmidt_plan(&term).unwrap();
            assert_relative_eq!(plan.lambda_max, 1.0, epsilon = 1e-10);
            assert!(plan.energy >= plan.lambda_max / 2.0 - 1e-10);
        }
    }

    #[test]
    fn min_degree_on_a_perfect_matching() {
        let inst = qmc_instance(graph(4, &[(0, 1), (2, 3)]));
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let (_, rep) = min_degree_round(&inst, &sol, &RoundOptions::default()).unwrap();
        assert_eq!(rep.guarantee, Some(0.5));
        assert!((rep.realized_ratio - 0.5).abs() < 1e-5);
        assert!((rep.expected_ratio - 0.5).abs() < 1e-5);
    }

    #[test]
    fn min_degree_on_k4() {
        let inst = qmc_instance(graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]));
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let (_, rep) = min_degree_round(&inst, &sol, &RoundOptions::default()).unwrap();
        assert!(rep.expected_ratio >= alpha_d(3) - 1e-6, "{}", rep.expected_ratio);
        assert!(alpha_d(3) > 0.557);
        let weighted = qmc_instance(WeightedGraph::new(2, [(0, 1, 0.5)]).unwrap());
        let wsol = solve_level(&weighted, 2, &SolverConfig::default()).unwrap();
        assert!(matches!(min_degree_round(&weighted, &wsol, &RoundOptions::default()), Err(RoundingError::Weighted)));
    }

    #[test]
    fn generic_rounding_on_qmc_matches_threshold_pairs() {
        let inst = qmc_instance(graph(2, &[(0, 1)]));
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let (_, rep) = generic_threshold_round(&inst, &sol, &RoundOptions::default()).unwrap();
        assert_relative_eq!(rep.expected_total, 0.5, epsilon = 1e-10);
        assert_relative_eq!(rep.realized_total, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn per_axis_expectation_matches_qmc_closed_form() {
        let table = HermiteTable::new(EXPECTATION_ORDER).unwrap();
        for &v in &[-0.3, 0.0, 0.4, 0.8] {
            let block = Matrix3::identity() * -v;
            let (e, err) = bulk_expectation(&LocalTerm::new(0.25, Matrix3::identity() * -0.25), block, RoundingMode::PerQubit, &table);
            assert_relative_eq!(e, (1.0 + gp_f(3, v)) / 4.0, epsilon = 1e-12);
            assert_eq!(err, 0.0);
        }
        // A rotated QMC term goes through the series.
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 0.9).into_inner();
        let term = LocalTerm::qmc().rotated(&Matrix3::identity(), &r);
        let block = Matrix3::identity() * -0.6 * r;
        let (e, err) = bulk_expectation(&term, block, RoundingMode::PerQubit, &table);
        assert!((e - (1.0 + gp_f(3, 0.6)) / 4.0).abs() <= err + 1e-12, "{e} ± {err}");
    }
}
