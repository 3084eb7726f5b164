//! Monogamy audits on decoded relaxation values: triangle inequality over
//! every qubit triple, the star bound and the large-edge bound.

use serde::{Deserialize, Serialize};

use super::triangle::{triangle_feasible, TriangleValues};
use crate::instance::Instance;
use crate::lasserre::MomentSolution;
use crate::pauli::{Axis, PauliTerm};

/// Default tolerance of the audits.
pub const AUDIT_TOL: f64 = 1e-6;

/// Relaxed SWAP expectation `(1 + ⟨XᵢXⱼ⟩ + ⟨YᵢYⱼ⟩ + ⟨ZᵢZⱼ⟩)/2` for any pair.
pub fn swap_value(sol: &MomentSolution, i: usize, j: usize) -> f64 {
    let corr: f64 = Axis::ALL.iter().map(|&a| sol.value(&PauliTerm::pair(i, a, j, a))).sum();
    (1.0 + corr) / 2.0
}

/// QMC value `v = −(⟨XX⟩ + ⟨YY⟩ + ⟨ZZ⟩)/3` for any pair.
pub fn qmc_value(sol: &MomentSolution, i: usize, j: usize) -> f64 {
    (1.0 - 2.0 * swap_value(sol, i, j)) / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleViolation {
    pub qubits: [usize; 3],
    pub values: TriangleValues,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleAudit {
    pub triples: usize,
    pub violations: Vec<TriangleViolation>,
    /// Triples where the polynomial and eigen tests disagree.
    pub disagreements: usize,
}

impl TriangleAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the triangle inequality on `(s_ij, s_ik, s_jk)` for every triple
/// of qubits. It holds for every level-2 solution, not only true states.
pub fn triangle_audit(sol: &MomentSolution, tol: f64) -> TriangleAudit {
    let n = sol.n();
    let mut violations = Vec::new();
    let mut triples = 0;
    let mut disagreements = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                triples += 1;
                let t = TriangleValues::new(swap_value(sol, i, j), swap_value(sol, i, k), swap_value(sol, j, k));
                let check = triangle_feasible(t, tol);
                if !check.agree() {
                    disagreements += 1;
                }
                if !check.polynomial || !check.eigen {
                    violations.push(TriangleViolation {
                        qubits: [i, j, k],
                        values: t,
                        min_eigenvalue: check.min_eigenvalue,
                    });
                }
            }
        }
    }
    TriangleAudit {
        triples,
        violations,
        disagreements,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarAudit {
    pub center: usize,
    pub degree: usize,
    /// `Σ_{j ∈ N(i)} (1 + 3v_ij)` with QMC values.
    pub sum: f64,
    /// `2(deg + 1)`.
    pub bound: f64,
    pub passed: bool,
}

pub fn star_bound_audit(sol: &MomentSolution, inst: &Instance, center: usize, tol: f64) -> StarAudit {
    let nbrs = inst.graph().neighbors(center);
    let sum = nbrs.iter().map(|&j| 1.0 + 3.0 * qmc_value(sol, center, j)).sum();
    let bound = 2.0 * (nbrs.len() as f64 + 1.0);
    StarAudit {
        center,
        degree: nbrs.len(),
        sum,
        bound,
        passed: sum <= bound + tol,
    }
}

/// Star audit at every vertex.
pub fn star_bound_audit_all(sol: &MomentSolution, inst: &Instance, tol: f64) -> Vec<StarAudit> {
    (0..inst.n()).map(|c| star_bound_audit(sol, inst, c, tol)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact2Violation {
    pub large: (usize, usize),
    pub v_large: f64,
    pub adjacent: (usize, usize),
    pub v_adjacent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact2Audit {
    pub gamma: f64,
    /// Edges with `v > γ`.
    pub large_edges: Vec<(usize, usize)>,
    /// Adjacent edges with `v ≥ 1/3 + tol` next to a large edge.
    pub violations: Vec<Fact2Violation>,
    /// Adjacent pairs both above `γ − tol`; non-empty means the large edges
    /// are not a matching.
    pub matching_conflicts: Vec<Fact2Violation>,
}

impl Fact2Audit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.matching_conflicts.is_empty()
    }
}

/// For every edge with `v_ij > γ`, checks `v_ik < 1/3 + tol` on all adjacent
/// edges, and that edges above `γ − tol` form a matching. Uses the decoded
/// edge values of the instance, so positive terms are audited through their
/// own cost matrices.
pub fn fact2_audit(sol: &MomentSolution, gamma: f64, tol: f64) -> Fact2Audit {
    let large_edges: Vec<(usize, usize)> = sol.edges.iter().filter(|e| e.v > gamma).map(|e| (e.i, e.j)).collect();
    let mut violations = Vec::new();
    let mut matching_conflicts = Vec::new();
    for (a, ea) in sol.edges.iter().enumerate() {
        for (b, eb) in sol.edges.iter().enumerate() {
            if a == b {
                continue;
            }
            let shares = ea.i == eb.i || ea.i == eb.j || ea.j == eb.i || ea.j == eb.j;
            if !shares {
                continue;
            }
            let record = Fact2Violation {
                large: (ea.i, ea.j),
                v_large: ea.v,
                adjacent: (eb.i, eb.j),
                v_adjacent: eb.v,
            };
            if ea.v > gamma && eb.v >= 1.0 / 3.0 + tol {
                violations.push(record);
            }
            if a < b && ea.v > gamma - tol && eb.v > gamma - tol {
                matching_conflicts.push(record);
            }
        }
    }
    Fact2Audit {
        gamma,
        large_edges,
        violations,
        matching_conflicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{qmc_instance, WeightedGraph};
    use crate::lasserre::{solve_level, MomentBasis};
    use crate::sdp::SolverConfig;
    use nalgebra::DMatrix;

    fn path3() -> Instance {
        qmc_instance(WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap())
    }

    #[test]
    fn single_edge_is_vacuous_for_adjacency() {
        let inst = qmc_instance(WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap());
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let audit = fact2_audit(&sol, 0.911, AUDIT_TOL);
        assert!(audit.passed());
        assert_eq!(audit.large_edges, vec![(0, 1)]);
        let star = star_bound_audit(&sol, &inst, 0, AUDIT_TOL);
        assert!(star.passed && (star.bound - 4.0).abs() < 1e-12);
    }

    #[test]
    fn path_and_triangle_pass_all_audits() {
        let tri = qmc_instance(WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap());
        for inst in [path3(), tri] {
            let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
            assert!(fact2_audit(&sol, 0.911, AUDIT_TOL).passed());
            assert!(triangle_audit(&sol, AUDIT_TOL).passed());
            let star = star_bound_audit(&sol, &inst, 1, AUDIT_TOL);
            assert!(star.passed, "{star:?}");
            assert!((star.bound - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_large_pair_is_reported() {
        let inst = path3();
        let basis = MomentBasis::new(3, 1).unwrap();
        let dim = basis.len();
        // Level-1 matrix with ⟨a_i a_j⟩ = −0.95 on both edges.
        let mut m = DMatrix::<f64>::identity(dim, dim);
        for (i, j) in [(0usize, 1usize), (1, 2)] {
            for a in Axis::ALL {
                let (r, c) = (basis.single_index(i, a), basis.single_index(j, a));
                m[(r, c)] = -0.95;
                m[(c, r)] = -0.95;
            }
        }
        let sol = MomentSolution::from_matrix(basis, m, &inst, 0.0);
        assert!((sol.edges[0].v - 0.95).abs() < 1e-12);
        let audit = fact2_audit(&sol, 0.911, AUDIT_TOL);
        assert!(!audit.passed());
        assert_eq!(audit.violations.len(), 2);
        assert_eq!(audit.matching_conflicts.len(), 1);
    }

    #[test]
    fn swap_and_qmc_values_agree_with_edge_data() {
        let inst = path3();
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        for e in &sol.edges {
            assert!((qmc_value(&sol, e.i, e.j) - e.v).abs() < 1e-12);
            assert!((swap_value(&sol, e.i, e.j) - e.s).abs() < 1e-12);
        }
    }
}
