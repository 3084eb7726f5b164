//! Clipping the tetrahedron `𝒮` by a halfspace and the mesh search for the
//! worst product-rounding ratio on positive strictly quadratic edges.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hermite::HermiteTable;
use super::AnalysisError;
use crate::instance::{in_polytope, POLYTOPE_TOL, POLYTOPE_VERTICES};

/// Vertices of `𝒮` closer than this are merged.
pub const VERTEX_TOL: f64 = 1e-12;

const TETRA_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn dot(x: [f64; 3], y: [f64; 3]) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// Vertices of `𝒮 ∩ {(p, q, r) : ap + bq + cr ≤ 3γ}`.
pub fn clip_polytope(a: f64, b: f64, c: f64, gamma: f64) -> Vec<[f64; 3]> {
    let n = [a, b, c];
    let h = 3.0 * gamma;
    let side: Vec<f64> = POLYTOPE_VERTICES.iter().map(|&v| dot(n, v) - h).collect();
    let mut out: Vec<[f64; 3]> = Vec::new();
    let mut push = |x: [f64; 3]| {
        if !out.iter().any(|y| (0..3).all(|d| (x[d] - y[d]).abs() <= VERTEX_TOL)) {
            out.push(x);
        }
    };
    for (v, &s) in POLYTOPE_VERTICES.iter().zip(&side) {
        if s <= VERTEX_TOL {
            push(*v);
        }
    }
    for &(u, w) in &TETRA_EDGES {
        let (su, sw) = (side[u], side[w]);
        if (su < -VERTEX_TOL && sw > VERTEX_TOL) || (su > VERTEX_TOL && sw < -VERTEX_TOL) {
            let t = su / (su - sw);
            let (x, y) = (POLYTOPE_VERTICES[u], POLYTOPE_VERTICES[w]);
            push(std::array::from_fn(|d| x[d] + t * (y[d] - x[d])));
        }
    }
    out
}

/// Lower bound on the product-rounding ratio at `(a, b, c)`: the minimum over
/// clipped vertices `(p, q, r)` of
/// `(1 + p·t₁ + q·t₂ + r·t₃ − rem)/(1 + pa + qb + rc)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointBound {
    pub value: f64,
    pub vertex: [f64; 3],
    /// Vertices skipped because the denominator was not positive.
    pub skipped: usize,
}

pub fn ratio_lower_bound(table: &HermiteTable, abc: [f64; 3], gamma: f64) -> Option<PointBound> {
    let [a, b, c] = abc;
    let t = table.components(a, b, c);
    let mut best: Option<PointBound> = None;
    let mut skipped = 0;
    for v in clip_polytope(a, b, c, gamma) {
        let den = 1.0 + dot(v, abc);
        if den <= VERTEX_TOL {
            skipped += 1;
            continue;
        }
        let value = (1.0 + dot(v, t) - table.remainder) / den;
        if best.is_none_or(|b| value < b.value) {
            best = Some(PointBound { value, vertex: v, skipped: 0 });
        }
    }
    best.map(|b| PointBound { skipped, ..b })
}

/// Mesh specification of the search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub order: usize,
    pub gamma: f64,
    /// Spacing where the mean `(a+b+c)/3` lies in `[−1, −0.85]`.
    pub fine_mesh: f64,
    /// Spacing where the mean lies in `[−0.85, −0.5]`.
    pub coarse_mesh: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            order: 70,
            gamma: 0.911,
            fine_mesh: 5e-3,
            coarse_mesh: 5e-2,
        }
    }
}

/// Result of the mesh search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub spec: GridSpec,
    pub min: f64,
    pub argmin: [f64; 3],
    /// Minimising `(p, q, r)` at the argmin.
    pub vertex: [f64; 3],
    /// Central-difference gradient of the bound at the argmin.
    pub gradient: [f64; 3],
    pub gradient_norm: f64,
    pub remainder: f64,
    pub points: usize,
    pub skipped_denominators: usize,
}

/// Ordered lattice points `a ≤ b ≤ c` in `𝒮` with mean in `[lo, hi]`,
/// spaced `step` and anchored so that `(−γ, −γ, −γ)` is a node.
fn lattice(step: f64, anchor: f64, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    let eps = 1e-12;
    let m_lo = ((-1.0 - anchor) / step - eps).ceil() as i64;
    let m_hi = ((1.0 - anchor) / step + eps).floor() as i64;
    let vals: Vec<f64> = (m_lo..=m_hi).map(|m| anchor + m as f64 * step).collect();
    let mut out = Vec::new();
    for (ia, &a) in vals.iter().enumerate() {
        if 3.0 * a > 3.0 * hi + eps {
            break;
        }
        for (ib, &b) in vals.iter().enumerate().skip(ia) {
            if a + 2.0 * b > 3.0 * hi + eps {
                break;
            }
            for &c in &vals[ib..] {
                let sum = a + b + c;
                if sum > 3.0 * hi + eps {
                    break;
                }
                if sum >= 3.0 * lo - eps && in_polytope([a, b, c], POLYTOPE_TOL) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn better(x: &(PointBound, [f64; 3]), y: &(PointBound, [f64; 3])) -> Ordering {
    x.0.value
        .total_cmp(&y.0.value)
        .then_with(|| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal))
}

/// Searches the ordered region `a ≤ b ≤ c`, `a + b + c ≤ −1.5` of `𝒮` for the
/// smallest lower bound on the ratio. Ties go to the lexicographically
/// smallest location, so the result does not depend on thread scheduling.
pub fn generic_grid_search(spec: GridSpec) -> Result<GridSearchResult, AnalysisError> {
    if !(spec.fine_mesh > 0.0 && spec.coarse_mesh > 0.0) {
        return Err(AnalysisError::OutOfRange {
            name: "mesh",
            value: spec.fine_mesh.min(spec.coarse_mesh),
            range: "(0, ∞)",
        });
    }
    let table = HermiteTable::new(spec.order)?;
    let anchor = -spec.gamma;
    let mut points = lattice(spec.fine_mesh, anchor, -1.0, -0.85);
    points.extend(lattice(spec.coarse_mesh, anchor, -0.85, -0.5));
    points.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    points.dedup();
    let evaluated: Vec<(PointBound, [f64; 3])> = points
        .par_iter()
        .filter_map(|&abc| ratio_lower_bound(&table, abc, spec.gamma).map(|b| (b, abc)))
        .collect();
    let skipped_denominators = evaluated.iter().map(|(b, _)| b.skipped).sum();
    let (best, argmin) = evaluated
        .iter()
        .min_by(|x, y| better(x, y))
        .copied()
        .ok_or(AnalysisError::EmptyMesh)?;
    let f = |x: [f64; 3]| ratio_lower_bound(&table, x, spec.gamma).map_or(f64::NAN, |b| b.value);
    let e = 1e-5;
    let gradient: [f64; 3] = std::array::from_fn(|d| {
        let (mut hi, mut lo) = (argmin, argmin);
        hi[d] += e;
        lo[d] -= e;
        (f(hi) - f(lo)) / (2.0 * e)
    });
    let gradient_norm = dot(gradient, gradient).sqrt();
    Ok(GridSearchResult {
        spec,
        min: best.value,
        argmin,
        vertex: best.vertex,
        gradient,
        gradient_norm,
        remainder: table.remainder,
        points: points.len(),
        skipped_denominators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force oracle: vertices of the clipped tetrahedron are the
    /// feasible points where three of the five planes are active.
    fn clip_oracle(n: [f64; 3], h: f64) -> Vec<[f64; 3]> {
        let mut planes: Vec<([f64; 3], f64)> = vec![
            ([1.0, -1.0, -1.0], 1.0),
            ([-1.0, 1.0, -1.0], 1.0),
            ([-1.0, -1.0, 1.0], 1.0),
            ([1.0, 1.0, 1.0], 1.0),
        ];
        planes.push((n, h));
        let mut out: Vec<[f64; 3]> = Vec::new();
        for i in 0..5 {
            for j in i + 1..5 {
                for k in j + 1..5 {
                    let m = nalgebra::Matrix3::from_rows(&[
                        nalgebra::RowVector3::from(planes[i].0),
                        nalgebra::RowVector3::from(planes[j].0),
                        nalgebra::RowVector3::from(planes[k].0),
                    ]);
                    let Some(inv) = m.try_inverse() else { continue };
                    if m.determinant().abs() < 1e-9 {
                        continue;
                    }
                    let x = inv * nalgebra::Vector3::new(planes[i].1, planes[j].1, planes[k].1);
                    let x = [x[0], x[1], x[2]];
                    if planes.iter().all(|(a, b)| dot(*a, x) <= b + 1e-9)
                        && !out.iter().any(|y| (0..3).all(|d| (x[d] - y[d]).abs() < 1e-9))
                    {
                        out.push(x);
                    }
                }
            }
        }
        out
    }

    fn same_set(a: &[[f64; 3]], b: &[[f64; 3]]) -> bool {
        a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| (0..3).all(|d| (x[d] - y[d]).abs() < 1e-9)))
    }

    #[test]
    fn inactive_halfspace_keeps_the_tetrahedron() {
        let v = clip_polytope(0.0, 0.0, 0.0, 0.5);
        assert!(same_set(&v, &POLYTOPE_VERTICES));
    }

    #[test]
    fn clipping_the_singlet_corner() {
        let v = clip_polytope(-1.0, -1.0, -1.0, 0.911);
        assert_eq!(v.len(), 6);
        assert!(!v.iter().any(|x| x == &[-1.0, -1.0, -1.0]));
        let cut: Vec<_> = v.iter().filter(|x| (x[0] + x[1] + x[2] + 2.733).abs() < 1e-12).collect();
        assert_eq!(cut.len(), 3);
    }

    #[test]
    fn plane_through_a_vertex_keeps_it_once() {
        // (−1,1,1)·(1,0,0) = −1 = 3γ.
        let v = clip_polytope(1.0, 0.0, 0.0, -1.0 / 3.0);
        let hits = v.iter().filter(|x| (0..3).all(|d| (x[d] - [-1.0, 1.0, 1.0][d]).abs() < 1e-12)).count();
        assert_eq!(hits, 1);
        assert!(same_set(&v, &clip_oracle([1.0, 0.0, 0.0], -1.0)));
    }

    #[test]
    fn clipping_matches_the_plane_oracle() {
        let grid = [-1.0, -0.7, -0.3, 0.0, 0.2];
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    if !in_polytope([a, b, c], 1e-12) {
                        continue;
                    }
                    for &g in &[-0.2, 0.3, 0.911] {
                        let got = clip_polytope(a, b, c, g);
                        let want = clip_oracle([a, b, c], 3.0 * g);
                        assert!(same_set(&got, &want), "({a},{b},{c},{g}): {got:?} vs {want:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn cost_minimum_at_the_singlet_corner_without_halfspace() {
        let table = HermiteTable::new(30).unwrap();
        for abc in [[-0.8, -0.7, -0.6], [-0.5, -0.5, -0.2], [-0.9, -0.4, -0.3]] {
            let b = ratio_lower_bound(&table, abc, 1.0).unwrap();
            assert_eq!(b.vertex, [-1.0, -1.0, -1.0], "{abc:?}");
        }
    }

    #[test]
    fn lattice_contains_the_anchor_and_respects_order() {
        let pts = lattice(5e-2, -0.911, -1.0, -0.5);
        assert!(pts.iter().any(|p| p.iter().all(|x| (x + 0.911).abs() < 1e-12)));
        assert!(pts.iter().all(|p| p[0] <= p[1] && p[1] <= p[2] && p.iter().sum::<f64>() <= -1.5 + 1e-9));
    }

    #[test]
    fn smoke_mesh_search() {
        let res = generic_grid_search(GridSpec {
            order: 30,
            fine_mesh: 5e-2,
            ..GridSpec::default()
        })
        .unwrap();
        assert!(res.min > 0.4995 && res.min < 0.505, "{res:?}");
        assert_relative_eq!(res.argmin[0], -0.911, epsilon = 1e-9);
    }
}
