//! Sampled check of the composition bound `‖a♯b‖_{ρ,R} ≤ 12‖a‖_{ρ,R}‖b‖_{ρ/2,R/4}`.

use serde::Serialize;

use super::{estimate_norm, moyal_product, FormalSymbol, NormParams, SampleBox};
use crate::error::{Error, Result};
use crate::jets::parse_expr;

/// Constant of the composition bound.
pub const ALGEBRA_CONSTANT: f64 = 12.0;
/// Working value of `m₀` in dimension one.
pub const M0_DIM1: f64 = 8.0;

/// One evaluation of the composition bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BanachCheck {
    pub name: String,
    pub rho: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub m: f64,
    /// Orders of `a♯b` kept.
    pub k: usize,
    pub norm_product: f64,
    pub norm_a: f64,
    pub norm_b_half: f64,
    /// `norm_product / (12 · norm_a · norm_b_half)`.
    pub ratio: f64,
    pub pass: bool,
}

/// `R ≥ 2^{d+2}ρ²`.
pub fn admissible_r(d: usize, rho: f64) -> f64 {
    2f64.powi(d as i32 + 2) * rho * rho
}

/// Compares the sampled norms; `a♯b` is truncated at order `k`.
pub fn banach_bound_check(
    name: &str,
    a: &FormalSymbol,
    b: &FormalSymbol,
    k: usize,
    p: &NormParams,
) -> Result<BanachCheck> {
    if p.r < admissible_r(a.d(), p.rho) {
        return Err(Error::Invalid(format!(
            "R = {} is below 2^(d+2) rho^2 = {}",
            p.r,
            admissible_r(a.d(), p.rho)
        )));
    }
    let c = moyal_product(a, b, k)?;
    let norm_product = estimate_norm(&c, p)?.value;
    let norm_a = estimate_norm(a, p)?.value;
    let norm_b_half = estimate_norm(b, &p.with_scales(p.rho / 2.0, p.r / 4.0))?.value;
    let rhs = ALGEBRA_CONSTANT * norm_a * norm_b_half;
    let ratio = if rhs > 0.0 {
        norm_product / rhs
    } else if norm_product == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(BanachCheck {
        name: name.into(),
        rho: p.rho,
        r: p.r,
        m: p.m,
        k,
        norm_product,
        norm_a,
        norm_b_half,
        ratio,
        pass: ratio <= 1.0,
    })
}

/// Default sampling box `x ∈ [−1, 1]`, `ξ ∈ [1, 2]`.
pub fn banach_sample_box(points_per_axis: usize) -> SampleBox {
    SampleBox::uniform(1, (-1.0, 1.0), (1.0, 2.0), points_per_axis)
}

/// One-dimensional symbol pairs with analytic `x`-dependence.
pub fn banach_corpus() -> Vec<(String, FormalSymbol, FormalSymbol)> {
    let names = ["x", "xi"];
    let sym = |degree: f64, srcs: &[&str]| {
        let coeffs = srcs
            .iter()
            .map(|s| parse_expr(s, &names).expect("corpus expression"))
            .collect();
        FormalSymbol::new(1, degree, coeffs).expect("corpus symbol")
    };
    vec![
        (
            "trigonometric order zero".into(),
            sym(0.0, &["(+ 2 (cos x))", "(/ (* 0.5 (sin x)) (norm xi))"]),
            sym(
                0.0,
                &["(+ 1 (* 0.3 (cos x)))", "(/ (* 0.2 (sin x)) (norm xi))"],
            ),
        ),
        (
            "exponential and rational".into(),
            sym(0.0, &["(exp (* 0.5 x))", "(/ x (norm xi))"]),
            sym(0.0, &["(/ 1 (+ 2 x))", "(/ (* 0.5 (^ x 2)) (norm xi))"]),
        ),
        (
            "first order times potential".into(),
            sym(1.0, &["(* (norm xi) (+ 1 (* 0.2 (sin x))))"]),
            sym(0.0, &["(+ 1 (* 0.3 (cos (* 2 x))))"]),
        ),
        (
            "multiplier times polynomial".into(),
            sym(-1.0, &["(/ 1 (norm xi))", "(/ 1 (^ (norm xi) 2))"]),
            sym(0.0, &["(+ 1 x (^ x 2))"]),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_satisfies_bound_at_admissible_scales() {
        for rho in [1.0, 2.0] {
            let p = NormParams::new(rho, admissible_r(1, rho), M0_DIM1, banach_sample_box(9));
            for (name, a, b) in banach_corpus() {
                let c = banach_bound_check(&name, &a, &b, 4, &p).unwrap();
                assert!(c.pass, "{c:?}");
                assert!(c.norm_product > 0.0);
            }
        }
    }

    #[test]
    fn small_r_is_rejected() {
        let (name, a, b) = banach_corpus().remove(0);
        let p = NormParams::new(1.0, 4.0, M0_DIM1, banach_sample_box(5));
        assert!(banach_bound_check(&name, &a, &b, 2, &p).is_err());
    }

    #[test]
    fn unit_times_unit() {
        let one = FormalSymbol::unit(1);
        let p = NormParams::new(1.0, 8.0, M0_DIM1, banach_sample_box(3));
        let c = banach_bound_check("unit", &one, &one, 0, &p).unwrap();
        assert!((c.ratio - 1.0 / 12.0).abs() < 1e-15);
    }
}
