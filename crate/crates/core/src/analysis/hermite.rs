//! Hermite expansion of the per-axis product-rounding expectation
//! `E[z₁z₁′/(‖z‖‖z′‖)]` for Gaussian pairs with diagonal correlation `(a, b, c)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::AnalysisError;

/// Largest supported expansion order.
pub const MAX_ORDER: usize = 80;

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln n!!` with `0!! = (−1)!! = 1`.
fn ln_double_factorial(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = n / 2;
    if n % 2 == 0 {
        m as f64 * std::f64::consts::LN_2 + ln_factorial(m)
    } else {
        ln_factorial(n) - m as f64 * std::f64::consts::LN_2 - ln_factorial(m)
    }
}

/// Squared expansion coefficient `f̂²_{i,jk}`; zero unless `i` is odd and
/// `j`, `k` are even.
pub fn hermite_fhat_sq(i: usize, j: usize, k: usize) -> f64 {
    if i % 2 == 0 || j % 2 == 1 || k % 2 == 1 {
        return 0.0;
    }
    let p = ((i + j + k - 1) / 2) as f64;
    let ln = (8.0 / std::f64::consts::PI).ln() + ln_factorial(i) + ln_factorial(j) + ln_factorial(k)
        - 2.0 * (ln_double_factorial(i - 1) + ln_double_factorial(j) + ln_double_factorial(k))
        - 2.0 * ((1.0 + 2.0 * p) * (3.0 + 2.0 * p)).ln();
    ln.exp()
}

/// Nonzero coefficients `(i, j, k, f̂²)` with `i, j, k ≤ order`, `j ≤ k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteTable {
    pub order: usize,
    pub coeffs: Vec<(usize, usize, usize, f64)>,
    /// `1/3 − Σ 2^{1−δ_jk} f̂²`, the bound on the neglected tail.
    pub remainder: f64,
}

impl HermiteTable {
    pub fn new(order: usize) -> Result<Self, AnalysisError> {
        if order > MAX_ORDER {
            return Err(AnalysisError::OrderTooLarge { order, max: MAX_ORDER });
        }
        let mut coeffs = Vec::new();
        for i in (1..=order).step_by(2) {
            for j in (0..=order).step_by(2) {
                for k in (j..=order).step_by(2) {
                    coeffs.push((i, j, k, hermite_fhat_sq(i, j, k)));
                }
            }
        }
        // Add the small terms first.
        let mut weights: Vec<f64> = coeffs
            .iter()
            .map(|&(_, j, k, f)| if j == k { f } else { 2.0 * f })
            .collect();
        weights.sort_by(f64::total_cmp);
        let remainder = 1.0 / 3.0 - weights.iter().sum::<f64>();
        Ok(Self {
            order,
            coeffs,
            remainder,
        })
    }

    /// Truncated series `t(a, b, c) = Σ f̂²_{i,jk} u_{i,jk}(a, b, c)` with
    /// `u_{i,jk} = aⁱbʲcᵏ + aⁱbᵏcʲ` for `j ≠ k` and `aⁱbʲcʲ` otherwise.
    pub fn t(&self, a: f64, b: f64, c: f64) -> f64 {
        let n = self.order + 1;
        let pow = |x: f64| {
            let mut v = vec![1.0; n];
            for e in 1..n {
                v[e] = v[e - 1] * x;
            }
            v
        };
        let (pa, pb, pc) = (pow(a), pow(b), pow(c));
        self.coeffs
            .iter()
            .map(|&(i, j, k, f)| {
                let u = if j == k {
                    pb[j] * pc[j]
                } else {
                    pb[j] * pc[k] + pb[k] * pc[j]
                };
                f * pa[i] * u
            })
            .sum()
    }

    /// Per-axis truncated expectations `(t(a,b,c), t(b,a,c), t(c,a,b))`.
    pub fn components(&self, a: f64, b: f64, c: f64) -> [f64; 3] {
        [self.t(a, b, c), self.t(b, a, c), self.t(c, a, b)]
    }
}

/// Truncated expectations and their error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteBracket {
    /// `t(a,b,c)`, `t(b,a,c)`, `t(c,a,b)`.
    pub t: [f64; 3],
    /// Each exact component lies within this distance of its truncation.
    pub remainder: f64,
}

impl HermiteBracket {
    pub fn total(&self) -> f64 {
        self.t.iter().sum()
    }

    /// Whether every component of `exact` lies within the remainder.
    pub fn contains(&self, exact: [f64; 3]) -> bool {
        self.t.iter().zip(exact).all(|(t, e)| (t - e).abs() <= self.remainder)
    }
}

pub fn truncated_expectation(a: f64, b: f64, c: f64, order: usize) -> Result<HermiteBracket, AnalysisError> {
    let table = HermiteTable::new(order)?;
    Ok(HermiteBracket {
        t: table.components(a, b, c),
        remainder: table.remainder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::special::gp_f;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Direct evaluation with exact integer factorials, valid for small indices.
    fn fhat_direct(i: u64, j: u64, k: u64) -> f64 {
        let fact = |n: u64| (1..=n).product::<u64>() as f64;
        let dfact = |n: i64| {
            let mut r = 1.0;
            let mut m = n;
            while m > 1 {
                r *= m as f64;
                m -= 2;
            }
            r
        };
        let p = ((i + j + k - 1) / 2) as f64;
        let sign = if ((i + j + k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        2.0 * (2.0 / PI).sqrt() * sign * (fact(i) * fact(j) * fact(k)).sqrt()
            / (dfact(i as i64 - 1) * dfact(j as i64) * dfact(k as i64) * (1.0 + 2.0 * p) * (3.0 + 2.0 * p))
    }

    #[test]
    fn coefficient_examples() {
        assert_relative_eq!(hermite_fhat_sq(1, 0, 0), 8.0 / (9.0 * PI), epsilon = 1e-15);
        assert_eq!(hermite_fhat_sq(2, 0, 0), 0.0);
        assert_eq!(hermite_fhat_sq(1, 1, 0), 0.0);
        for i in (1..12u64).step_by(2) {
            for j in (0..10u64).step_by(2) {
                for k in (0..10u64).step_by(2) {
                    let d = fhat_direct(i, j, k);
                    assert_relative_eq!(hermite_fhat_sq(i as usize, j as usize, k as usize), d * d, max_relative = 1e-12);
                }
            }
        }
        assert!(hermite_fhat_sq(79, 80, 80).is_finite());
    }

    #[test]
    fn remainder_values() {
        let r1 = HermiteTable::new(1).unwrap().remainder;
        assert_relative_eq!(r1, 1.0 / 3.0 - 8.0 / (9.0 * PI), epsilon = 1e-15);
        assert!((r1 - 0.0504).abs() < 1e-4);
        let r10 = HermiteTable::new(10).unwrap().remainder;
        let r70 = HermiteTable::new(70).unwrap().remainder;
        assert!(r70 < r10 && r10 < r1);
        assert!(r70 > -1e-12);
        assert!(HermiteTable::new(81).is_err());
    }

    #[test]
    fn partial_sums_increase() {
        let mut prev = f64::NEG_INFINITY;
        for order in 1..=40 {
            let covered = 1.0 / 3.0 - HermiteTable::new(order).unwrap().remainder;
            assert!(covered >= prev && covered <= 1.0 / 3.0 + 1e-12);
            if order % 2 == 1 {
                assert!(covered > prev);
            }
            prev = covered;
        }
    }

    #[test]
    fn bracket_contains_the_closed_form_on_the_diagonal() {
        let table = HermiteTable::new(70).unwrap();
        for &a in &[-0.999, -0.911, -0.5, 0.0, 0.5] {
            let bracket = HermiteBracket {
                t: table.components(a, a, a),
                remainder: table.remainder,
            };
            let third = gp_f(3, a) / 3.0;
            assert!(bracket.contains([third; 3]), "a = {a}: {bracket:?} vs {third}");
        }
    }

    #[test]
    fn first_order_term() {
        let table = HermiteTable::new(1).unwrap();
        assert_relative_eq!(table.t(0.3, 0.2, 0.1), 8.0 / (9.0 * PI) * 0.3, epsilon = 1e-15);
    }
}
