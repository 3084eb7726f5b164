//! Special functions and the closed-form and numerical checks behind the
//! approximation guarantees.

pub mod audits;
pub mod hermite;
pub mod polytope;
pub mod special;
pub mod triangle;

use thiserror::Error;

pub use audits::{fact2_audit, star_bound_audit, triangle_audit, Fact2Audit, StarAudit, TriangleAudit};
pub use hermite::{hermite_fhat_sq, truncated_expectation, HermiteBracket, HermiteTable};
pub use polytope::{clip_polytope, generic_grid_search, GridSearchResult, GridSpec};
pub use special::{
    alpha_d, check_gamma, gp_f, h, helper_properties_audit, hyp2f1, product_ratio, ratio_curve, AnalysisCurve,
    RatioKind, GAMMA_DEFAULT,
};
pub use triangle::{dual_certificate_check, fact2_chain, triangle_feasible, TriangleValues};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("hypergeometric argument {0} lies outside [-1, 1]")]
    ArgumentOutOfRange(f64),
    #[error("2F1({a}, {b}; {c}; 1) diverges")]
    DivergentAtOne { a: f64, b: f64, c: f64 },
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("expansion order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("mesh contains no evaluable point")]
    EmptyMesh,
}
