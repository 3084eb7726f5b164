//! Exact reference values for small instances: dense diagonalisation of the
//! Hamiltonian and a local-search lower bound over product states.

use nalgebra::{Complex, DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;
use crate::pauli::PauliError;
use crate::rounding::{energy, BlochVector, ProductState};
use crate::sdp::{eig_hermitian, eig_sym, SdpError};

/// Largest qubit count handled by dense diagonalisation.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Sweep improvement below which ascent stops.
pub const ASCENT_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} qubits exceed the dense limit of {MAX_DENSE_QUBITS}")]
    TooLarge { n: usize },
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("at least one restart is required")]
    NoRestarts,
}

/// Dense `2ⁿ × 2ⁿ` Hamiltonian.
#[derive(Clone, Debug)]
pub struct DenseHamiltonian {
    pub n: usize,
    pub h: DMatrix<Complex<f64>>,
}

impl DenseHamiltonian {
    pub fn assemble(inst: &Instance) -> Result<Self, OracleError> {
        let n = inst.n();
        if n > MAX_DENSE_QUBITS {
            return Err(OracleError::TooLarge { n });
        }
        Ok(Self {
            n,
            h: inst.hamiltonian().matrix(n)?,
        })
    }

    /// Largest eigenvalue. Real Hamiltonians use the symmetric solver.
    pub fn lambda_max(&self) -> Result<f64, OracleError> {
        if self.h.iter().all(|z| z.im == 0.0) {
            let re = self.h.map(|z| z.re);
            let eig = eig_sym(&re)?;
            Ok(eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        } else {
            let (values, _) = eig_hermitian(&self.h)?;
            Ok(*values.last().expect("nonempty spectrum"))
        }
    }
}

/// `λ_max(H)` by dense diagonalisation.
pub fn lambda_max(inst: &Instance) -> Result<f64, OracleError> {
    DenseHamiltonian::assemble(inst)?.lambda_max()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentResult {
    pub energy: f64,
    pub state: ProductState,
    /// Restart that produced the best state.
    pub restart: usize,
    pub sweeps: usize,
}

/// Coordinate ascent over product states: each qubit in turn is aligned with
/// its local field, until a full sweep gains less than [`ASCENT_TOL`]. The
/// best of `restarts` random starts is returned, ties going to the earlier
/// restart.
pub fn product_ascent(inst: &Instance, restarts: usize, seed: u64) -> Result<AscentResult, OracleError> {
    if restarts == 0 {
        return Err(OracleError::NoRestarts);
    }
    let runs: Vec<AscentResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            ascend(inst, random_start(inst.n(), &mut rng), r)
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, x| if x.energy > best.energy { x } else { best })
        .expect("at least one restart"))
}

fn random_start(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| loop {
            let x = Vector3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
            let norm = x.norm();
            if norm > 1e-3 && norm <= 1.0 {
                break x / norm;
            }
        })
        .collect()
}

fn product_energy(inst: &Instance, theta: &[Vector3<f64>]) -> f64 {
    inst.edge_terms()
        .map(|(e, t)| e.w * (t.c_id + theta[e.i].dot(&(t.cost() * theta[e.j]))))
        .sum()
}

fn ascend(inst: &Instance, mut theta: Vec<Vector3<f64>>, restart: usize) -> AscentResult {
    let costs: Vec<Matrix3<f64>> = inst.terms().iter().map(|t| t.cost()).collect();
    let mut current = product_energy(inst, &theta);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for q in 0..inst.n() {
            let mut field = Vector3::zeros();
            for (k, e) in inst.graph().edges().iter().enumerate() {
                if e.i == q {
                    field += e.w * costs[k] * theta[e.j];
                } else if e.j == q {
                    field += e.w * costs[k].transpose() * theta[e.i];
                }
            }
            let norm = field.norm();
            if norm > 0.0 {
                theta[q] = field / norm;
            }
        }
        let next = product_energy(inst, &theta);
        let gain = next - current;
        current = next;
        if gain < ASCENT_TOL {
            break;
        }
    }
    let state = ProductState::from_singles(theta.iter().enumerate().map(|(q, x)| (q, BlochVector([x[0], x[1], x[2]]))));
    let energy = energy(inst, &state).unwrap_or(current);
    AscentResult {
        energy,
        state,
        restart,
        sweeps,
    }
}
