//! Nonlinear triangle inequality on SWAP expectations and the dual
//! certificate bounding edges adjacent to a large edge.

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::sdp::eig_sym;

/// Relaxed SWAP expectations on the three edges of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleValues {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl TriangleValues {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        Self { p, q, r }
    }

    pub fn s(&self) -> f64 {
        self.p + self.q + self.r
    }

    /// Gram matrix of `{I, S₁₂, S₁₃, S₂₃}` restricted to the span used by the
    /// feasibility argument.
    pub fn matrix(&self) -> Matrix4<f64> {
        let h = (self.s() - 1.0) / 2.0;
        Matrix4::new(
            1.0, self.p, self.q, self.r, //
            self.p, 1.0, h, h, //
            self.q, h, 1.0, h, //
            self.r, h, h, 1.0,
        )
    }

    /// `0 ≤ s ≤ 3` and `p² + q² + r² + 2s − 2(pq + pr + qr) ≤ 3 + tol`.
    pub fn polynomial_feasible(&self, tol: f64) -> bool {
        let (p, q, r, s) = (self.p, self.q, self.r, self.s());
        let quad = p * p + q * q + r * r + 2.0 * s - 2.0 * (p * q + p * r + q * r);
        s >= -tol && s <= 3.0 + tol && quad <= 3.0 + tol
    }

    /// Smallest eigenvalue of [`Self::matrix`].
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.matrix();
        let d = DMatrix::from_fn(4, 4, |a, b| m[(a, b)]);
        eig_sym(&d).expect("matrix is symmetric by construction").values[0]
    }

    pub fn eigen_feasible(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

/// Both feasibility tests for one triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleCheck {
    pub values: TriangleValues,
    pub polynomial: bool,
    pub eigen: bool,
    pub min_eigenvalue: f64,
}

impl TriangleCheck {
    pub fn agree(&self) -> bool {
        self.polynomial == self.eigen
    }

    pub fn feasible(&self) -> bool {
        self.polynomial && self.eigen
    }
}

pub fn triangle_feasible(t: TriangleValues, tol: f64) -> TriangleCheck {
    TriangleCheck {
        values: t,
        polynomial: t.polynomial_feasible(tol),
        eigen: t.eigen_feasible(tol),
        min_eigenvalue: t.min_eigenvalue(),
    }
}

/// Traces of the explicit dual solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificateReport {
    pub tr_m1: f64,
    pub tr_m2: f64,
    pub tr_m3: f64,
    pub tr_b: f64,
    pub min_eigenvalue: f64,
    pub passed: bool,
}

/// Tolerance of every check in the dual certificate.
pub const DUAL_TOL: f64 = 1e-12;

fn sym4(rows: [[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| rows[a][b])
}

/// Rebuilds `X = α₁x₁x₁ᵀ + α₂x₂x₂ᵀ` with `x₁ = [√3, 2, 1, 0]`,
/// `x₂ = [−√3, −1, 0, 1]` and checks `X ⪰ 0`, `tr[M₁X] = 1`,
/// `tr[M₂X] = 1/2`, `tr[M₃X] = 0` and `tr[BX] = √3/2`. These show that
/// `q ≤ 0` forces `p ≥ −√3/2` on every feasible triangle.
pub fn dual_certificate_check() -> DualCertificateReport {
    let r3 = 3f64.sqrt();
    dual_certificate_with([r3, 2.0, 1.0, 0.0], [-r3, -1.0, 0.0, 1.0])
}

/// Evaluates the dual certificate traces for arbitrary rank-one factors.
pub fn dual_certificate_with(x1: [f64; 4], x2: [f64; 4]) -> DualCertificateReport {
    let r3 = 3f64.sqrt();
    let m1 = sym4([[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.5, 0.5], [0.0, 0.5, 0.0, 0.5], [0.0, 0.5, 0.5, 0.0]]);
    let m2 = sym4([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.5, 0.5], [1.0, 0.5, 0.0, 0.5], [0.0, 0.5, 0.5, 0.0]]);
    let m3 = sym4([[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.5, 0.5], [0.0, 0.5, 0.0, 0.5], [1.0, 0.5, 0.5, 0.0]]);
    let b = sym4([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, -0.5, -0.5],
        [0.0, -0.5, 1.0, -0.5],
        [0.0, -0.5, -0.5, 1.0],
    ]);
    let x1 = DVector::from_row_slice(&x1);
    let x2 = DVector::from_row_slice(&x2);
    let a1 = r3 / 4.0 - 1.0 / 3.0;
    let a2 = 1.0 / (12.0 + 6.0 * r3);
    let x = &x1 * x1.transpose() * a1 + &x2 * x2.transpose() * a2;
    let x4 = Matrix4::from_fn(|i, j| x[(i, j)]);
    let tr = |m: &Matrix4<f64>| (m * x4).trace();
    let min_eigenvalue = eig_sym(&x).expect("X is symmetric").values[0];
    let (tr_m1, tr_m2, tr_m3, tr_b) = (tr(&m1), tr(&m2), tr(&m3), tr(&b));
    let passed = (tr_m1 - 1.0).abs() <= DUAL_TOL
        && (tr_m2 - 0.5).abs() <= DUAL_TOL
        && tr_m3.abs() <= DUAL_TOL
        && (tr_b - r3 / 2.0).abs() <= DUAL_TOL
        && min_eigenvalue >= -DUAL_TOL
        && a1 >= 0.0
        && a2 >= 0.0;
    DualCertificateReport {
        tr_m1,
        tr_m2,
        tr_m3,
        tr_b,
        min_eigenvalue,
        passed,
    }
}

/// Numeric chain behind the large-edge bound at threshold `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact2Chain {
    pub gamma: f64,
    /// `(1 + √3)/3`, the smallest `v` that forces `s < −√3/2`.
    pub critical_value: f64,
    /// `s(γ) = (1 − 3γ)/2`.
    pub swap_at_gamma: f64,
    pub passed: bool,
}

/// Checks `(1 + √3)/3 < γ` and `(1 − 3γ)/2 < −√3/2`.
pub fn fact2_chain(gamma: f64) -> Fact2Chain {
    let r3 = 3f64.sqrt();
    let critical_value = (1.0 + r3) / 3.0;
    let swap_at_gamma = (1.0 - 3.0 * gamma) / 2.0;
    Fact2Chain {
        gamma,
        critical_value,
        swap_at_gamma,
        passed: critical_value < gamma && swap_at_gamma < -r3 / 2.0,
    }
}
