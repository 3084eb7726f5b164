//! Gaussian hypergeometric function, the rounding expectation `F(k, t)` and
//! the ratio curves built from it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::AnalysisError;

/// Relative size of the last series term at which summation stops.
pub const SERIES_RTOL: f64 = 1e-16;

/// Hard cap on the number of series terms.
pub const SERIES_MAX_TERMS: usize = 1_000_000;

/// Above this `|z|` the direct series is replaced by a transformation.
const SERIES_RADIUS: f64 = 0.9;

/// Default threshold of the matching algorithm.
pub const GAMMA_DEFAULT: f64 = 0.911;

/// Grid step used by the threshold check and the helper audit.
pub const AUDIT_STEP: f64 = 1e-4;

/// Partial sum of the hypergeometric series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    /// Bound on the neglected tail, `t_N·|z|/(1 − |z|)`; infinite at `|z| = 1`.
    pub tail_bound: f64,
}

/// Sums `Σ (a)_j (b)_j / ((c)_j j!) zʲ` until the term drops below
/// `SERIES_RTOL` relative to the partial sum or `max_terms` is reached.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64, max_terms: usize) -> SeriesSum {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut terms = 1;
    while terms < max_terms {
        let j = (terms - 1) as f64;
        term *= (a + j) * (b + j) / ((c + j) * (j + 1.0)) * z;
        sum += term;
        terms += 1;
        if term == 0.0 || term.abs() < SERIES_RTOL * sum.abs() {
            break;
        }
    }
    let tail_bound = if z.abs() < 1.0 {
        term.abs() * z.abs() / (1.0 - z.abs())
    } else {
        f64::INFINITY
    };
    SeriesSum {
        value: sum,
        terms,
        tail_bound,
    }
}

/// `1/Γ(x)`, zero at the poles.
fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// `₂F₁(a, b; c; z)` for real `z ∈ [−1, 1]`.
///
/// Uses the series for `|z| ≤ 0.9`, Gauss's closed form at `z = 1`, the
/// `1 − z` connection formula on `(0.9, 1)` and Pfaff's transformation below
/// `−0.9`. When `c − a − b` is an integer the connection formula degenerates
/// and the capped series is used instead.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, AnalysisError> {
    if !z.is_finite() || z.abs() > 1.0 {
        return Err(AnalysisError::ArgumentOutOfRange(z));
    }
    if c <= 0.0 && c == c.round() {
        return Err(AnalysisError::OutOfRange {
            name: "c",
            value: c,
            range: "c not a non-positive integer",
        });
    }
    let s = c - a - b;
    if z == 1.0 {
        if s <= 0.0 {
            return Err(AnalysisError::DivergentAtOne { a, b, c });
        }
        return Ok(gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b));
    }
    if z.abs() <= SERIES_RADIUS {
        return Ok(hyp2f1_series(a, b, c, z, SERIES_MAX_TERMS).value);
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * hyp2f1_series(a, c - b, c, w, SERIES_MAX_TERMS).value);
    }
    if s == s.round() {
        return Ok(hyp2f1_series(a, b, c, z, SERIES_MAX_TERMS).value);
    }
    let y = 1.0 - z;
    let first = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b);
    let second = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b);
    let f1 = if first == 0.0 {
        0.0
    } else {
        first * hyp2f1_series(a, b, 1.0 - s, y, SERIES_MAX_TERMS).value
    };
    let f2 = if second == 0.0 {
        0.0
    } else {
        second * y.powf(s) * hyp2f1_series(c - a, c - b, s + 1.0, y, SERIES_MAX_TERMS).value
    };
    Ok(f1 + f2)
}

fn hyp_checked(a: f64, b: f64, c: f64, z: f64) -> f64 {
    hyp2f1(a, b, c, z).expect("argument lies in [0, 1] and the series converges there")
}

/// Expected inner product `E[⟨Unit(Uᵀr), Unit(Vᵀr)⟩]` for `k`-dimensional
/// Gaussian projections of unit vectors with inner product `t`:
/// `(2/k)(Γ((k+1)/2)/Γ(k/2))² t ₂F₁(1/2, 1/2; k/2 + 1; t²)`.
///
/// `t` is clamped to `[−1, 1]` so relaxation values carrying solver noise
/// can be passed directly.
///
/// # Panics
///
/// Panics if `k == 0`.
pub fn gp_f(k: u32, t: f64) -> f64 {
    assert!(k >= 1, "dimension must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    let t = t.clamp(-1.0, 1.0);
    if t.abs() == 1.0 {
        return t;
    }
    let kf = k as f64;
    let ratio = gamma((kf + 1.0) / 2.0) / gamma(kf / 2.0);
    (2.0 / kf) * ratio * ratio * t * hyp_checked(0.5, 0.5, kf / 2.0 + 1.0, t * t)
}

/// Hyperplane rounding ratio `(1 − F(1, t))/(1 − t)` for `t < 1`.
pub fn cut_ratio(t: f64) -> f64 {
    (1.0 - gp_f(1, t)) / (1.0 - t)
}

/// Product-state rounding ratio `g(v) = (1 + F(3, v))/(1 + 3v)` for `v > −1/3`.
pub fn product_ratio(v: f64) -> f64 {
    (1.0 + gp_f(3, v)) / (1.0 + 3.0 * v)
}

/// Upper bound on `g′(v)` valid for `|v| ≤ γ`:
/// `[8(3γ+1)γ² ₂F₁(3/2,3/2;7/2;γ²) + 40 ₂F₁(1/2,1/2;5/2;γ²) − 45π] / (15π(3v+1)²)`.
pub fn h(v: f64, gamma_: f64) -> f64 {
    h_numerator(gamma_) / (15.0 * PI * (3.0 * v + 1.0).powi(2))
}

/// Numerator of [`h`]; it does not depend on `v`.
pub fn h_numerator(gamma_: f64) -> f64 {
    let z = gamma_ * gamma_;
    8.0 * (3.0 * gamma_ + 1.0) * z * hyp_checked(1.5, 1.5, 3.5, z) + 40.0 * hyp_checked(0.5, 0.5, 2.5, z)
        - 45.0 * PI
}

/// Exact derivative `g′(v)`; equals `h(v, v)`.
pub fn product_ratio_derivative(v: f64) -> f64 {
    h(v, v)
}

/// Outcome of the threshold check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCheck {
    pub gamma: f64,
    /// Largest `h(v, γ)` over the grid.
    pub max_h: f64,
    pub grid_points: usize,
    /// `g(γ)`.
    pub ratio_at_gamma: f64,
    pub passed: bool,
}

/// Checks that `h(v, γ) < 0` on a `1e−4` grid over `(−1/3, γ]` and that
/// `g(γ) ≥ 1/2`. Together these make every `v ≤ γ` a 1/2-approximate edge.
pub fn check_gamma(gamma_: f64) -> Result<GammaCheck, AnalysisError> {
    if !(1.0 / 3.0..1.0).contains(&gamma_) {
        return Err(AnalysisError::OutOfRange {
            name: "gamma",
            value: gamma_,
            range: "[1/3, 1)",
        });
    }
    let lo = -1.0 / 3.0;
    let steps = ((gamma_ - lo) / AUDIT_STEP).floor() as usize;
    let mut max_h = f64::NEG_INFINITY;
    let mut grid_points = 0;
    for m in 1..=steps + 1 {
        let v = (lo + m as f64 * AUDIT_STEP).min(gamma_);
        max_h = max_h.max(h(v, gamma_));
        grid_points += 1;
    }
    let ratio_at_gamma = product_ratio(gamma_);
    Ok(GammaCheck {
        gamma: gamma_,
        max_h,
        grid_points,
        ratio_at_gamma,
        passed: max_h < 0.0 && ratio_at_gamma >= 0.5,
    })
}

/// Guarantee for unweighted instances of minimum degree `d`:
/// `(1 + F(3, 1/3 + 2/(3d)))/(2 + 2/d)`.
///
/// # Panics
///
/// Panics if `d == 0`.
pub fn alpha_d(d: usize) -> f64 {
    assert!(d >= 1, "degree must be positive");
    let d = d as f64;
    (1.0 + gp_f(3, 1.0 / 3.0 + 2.0 / (3.0 * d))) / (2.0 + 2.0 / d)
}

/// Tabulated function with its extrema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisCurve {
    pub label: String,
    /// `(input, value)` pairs in increasing input order.
    pub points: Vec<(f64, f64)>,
    pub argmin: f64,
    pub min: f64,
    pub argmax: f64,
    pub max: f64,
    /// Resolution of the reported extremum locations.
    pub resolution: f64,
}

impl AnalysisCurve {
    /// Builds a curve from points, locating the extrema on the grid.
    pub fn from_points(label: impl Into<String>, points: Vec<(f64, f64)>, resolution: f64) -> Self {
        let (mut argmin, mut min) = (f64::NAN, f64::INFINITY);
        let (mut argmax, mut max) = (f64::NAN, f64::NEG_INFINITY);
        for &(x, y) in &points {
            if y < min {
                (argmin, min) = (x, y);
            }
            if y > max {
                (argmax, max) = (x, y);
            }
        }
        Self {
            label: label.into(),
            points,
            argmin,
            min,
            argmax,
            max,
            resolution,
        }
    }
}

/// Golden-section minimisation on `[lo, hi]` down to width `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Tabulates `f` on `points + 1` equispaced inputs in `[lo, hi]` and refines
/// the grid minimum by golden section to `1e−9`.
pub fn minimize_curve(label: &str, f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> AnalysisCurve {
    let step = (hi - lo) / points as f64;
    let table: Vec<(f64, f64)> = (0..=points)
        .map(|m| {
            let x = if m == points { hi } else { lo + m as f64 * step };
            (x, f(x))
        })
        .collect();
    let mut curve = AnalysisCurve::from_points(label, table, 1e-6);
    let a = (curve.argmin - step).max(lo);
    let b = (curve.argmin + step).min(hi);
    let (x, y) = golden_section_min(&f, a, b, 1e-9);
    if y < curve.min {
        curve.argmin = x;
        curve.min = y;
    }
    curve
}

/// Which ratio curve to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioKind {
    /// Hyperplane rounding for Max Cut, `t ∈ [−1, 1)`.
    Cut,
    /// Product-state rounding for QMC, `v ∈ (−1/3, hi]`.
    Product,
}

/// Minimum of a rounding ratio curve over its natural domain, with the
/// product curve optionally truncated at `hi`.
pub fn ratio_curve(kind: RatioKind, hi: Option<f64>, points: usize) -> AnalysisCurve {
    match kind {
        RatioKind::Cut => {
            let hi = hi.unwrap_or(1.0 - 1e-6).min(1.0 - 1e-6);
            minimize_curve("cut_ratio", cut_ratio, -1.0, hi, points)
        }
        RatioKind::Product => {
            let hi = hi.unwrap_or(1.0).min(1.0);
            minimize_curve("product_ratio", product_ratio, -1.0 / 3.0 + 1e-6, hi, points)
        }
    }
}

/// `α(d)` for `d = 1..=d_max`.
pub fn alpha_curve(d_max: usize) -> AnalysisCurve {
    let points = (1..=d_max).map(|d| (d as f64, alpha_d(d))).collect();
    AnalysisCurve::from_points("alpha", points, 1.0)
}

/// `h(v, γ)` on the threshold-check grid over `(−1/3, γ]`, subsampled to
/// `points` entries.
pub fn h_curve(gamma_: f64, points: usize) -> AnalysisCurve {
    let lo = -1.0 / 3.0;
    let step = (gamma_ - lo) / points as f64;
    let table = (1..=points).map(|m| {
        let v = if m == points { gamma_ } else { lo + m as f64 * step };
        (v, h(v, gamma_))
    });
    AnalysisCurve::from_points("h", table.collect(), step)
}

/// One checked item of the helper audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelperItem {
    pub name: String,
    /// Observed extreme value.
    pub observed: f64,
    /// Bound it is compared against.
    pub bound: f64,
    pub passed: bool,
}

/// Grid audit of the elementary properties of `F(3, ·)` and `α(d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelperAudit {
    pub items: Vec<HelperItem>,
    pub passed: bool,
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(move |m| if m == n { hi } else { lo + m as f64 * step })
}

/// `d²F(3, x)/dx² = (56x ₂F₁(3/2,3/2;7/2;x²) + 24x³ ₂F₁(5/2,5/2;9/2;x²))/(35π)` for `|x| < 1`.
pub fn gp_f3_second_derivative(x: f64) -> f64 {
    let z = x * x;
    (56.0 * x * hyp_checked(1.5, 1.5, 3.5, z) + 24.0 * x * z * hyp_checked(2.5, 2.5, 4.5, z)) / (35.0 * PI)
}

/// Checks, on `1e−4` grids:
/// 1. `x − F(3, x) < 2/3` on `[−1/3, 1]`;
/// 2. `F(3, ·)` convex on `[0, 1]` (second differences and the closed-form second derivative);
/// 3. `F(3, x)/(3x) ≤ 1/3` on `[−1/3, 0)`;
/// 4. `g` attains its minimum over `(−1/3, 1/3 + 2/(3d)]` at the right endpoint for `d = 2, 5, 10`;
/// 5. `α(d + 1) ≥ α(d)` for `d = 2..=50`.
pub fn helper_properties_audit() -> HelperAudit {
    let mut items = Vec::new();
    let mut push = |name: &str, observed: f64, bound: f64, passed: bool| {
        items.push(HelperItem {
            name: name.to_string(),
            observed,
            bound,
            passed,
        });
    };

    let gap = grid(-1.0 / 3.0, 1.0, AUDIT_STEP)
        .map(|x| x - gp_f(3, x))
        .fold(f64::NEG_INFINITY, f64::max);
    push("x - F(3,x) < 2/3 on [-1/3, 1]", gap, 2.0 / 3.0, gap < 2.0 / 3.0);

    let xs: Vec<f64> = grid(0.0, 1.0, AUDIT_STEP).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| gp_f(3, x)).collect();
    let second = fs
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    push("second difference of F(3,.) on [0, 1]", second, -1e-8, second >= -1e-8);
    let analytic = xs[..xs.len() - 1]
        .iter()
        .map(|&x| gp_f3_second_derivative(x))
        .fold(f64::INFINITY, f64::min);
    push("d2F(3,x)/dx2 on [0, 1)", analytic, 0.0, analytic >= 0.0);

    let ratio = grid(-1.0 / 3.0, 0.0, AUDIT_STEP)
        .filter(|&x| x < 0.0)
        .map(|x| gp_f(3, x) / (3.0 * x))
        .fold(f64::NEG_INFINITY, f64::max);
    push("F(3,x)/(3x) <= 1/3 on [-1/3, 0)", ratio, 1.0 / 3.0, ratio <= 1.0 / 3.0);

    for d in [2usize, 5, 10] {
        let hi = 1.0 / 3.0 + 2.0 / (3.0 * d as f64);
        let lo = -1.0 / 3.0 + AUDIT_STEP;
        let (argmin, min) = grid(lo, hi, AUDIT_STEP)
            .map(|v| (v, product_ratio(v)))
            .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
        push(
            &format!("argmin of g on (-1/3, {hi:.6}] is the right endpoint (d = {d})"),
            argmin,
            hi,
            (argmin - hi).abs() < 0.5 * AUDIT_STEP && min <= product_ratio(hi),
        );
    }

    let worst = (2..=50)
        .map(|d| alpha_d(d + 1) - alpha_d(d))
        .fold(f64::INFINITY, f64::min);
    push("alpha(d+1) - alpha(d) >= 0 for d = 2..50", worst, 0.0, worst >= 0.0);

    let passed = items.iter().all(|i| i.passed);
    HelperAudit { items, passed }
}
