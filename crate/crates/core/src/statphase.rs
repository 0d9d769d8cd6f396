//! Gaussian stationary phase: expansion, ball quadrature, remainder bound and
//! the formal pushforward of amplitudes through the model phase `i|θ|y²`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::borel::{fit_growth_rate, RealizedAmplitude};
use crate::error::{Error, Result};
use crate::jets::{factorial, index_map, multi_factorial, Expr, Jet};
use crate::quad::integrate;
use crate::symbols::FormalSymbol;
use crate::C64;

/// `π^{d/2} λ^{−d/2} Σ_{j<N/2} Δ^j u(0)/((4λ)^j j!)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianExpansion {
    pub d: usize,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `t_j = Δ^j u(0)/((4λ)^j j!)` for `j < N/2`.
    pub terms: Vec<f64>,
    pub prefactor: f64,
}

impl GaussianExpansion {
    pub fn value(&self) -> f64 {
        self.prefactor * self.terms.iter().sum::<f64>()
    }
}

/// `Δ^j u(center)` for `j ≤ jmax` from a jet of order `≥ 2 jmax`.
///
/// Uses `Δ^j = Σ_{|β|=j} (j!/β!) ∂^{2β}`.
pub fn laplacian_powers(jet: &Jet, jmax: usize) -> Result<Vec<C64>> {
    if 2 * jmax > jet.order() {
        return Err(Error::OrderExceeded {
            requested: 2 * jmax,
            order: jet.order(),
        });
    }
    let d = jet.dim();
    let half = index_map(d, jmax);
    let mut out = vec![C64::new(0.0, 0.0); jmax + 1];
    for beta in half.alphas() {
        let j: usize = beta.iter().map(|&b| b as usize).sum();
        let two_beta: Vec<u32> = beta.iter().map(|&b| 2 * b).collect();
        let w = factorial(j) / multi_factorial(beta) * multi_factorial(&two_beta);
        out[j] += jet.coeff(&two_beta) * w;
    }
    Ok(out)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("λ must be positive, got {lambda}")))
    }
}

fn real_part(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() <= 1e-12 * z.re.abs().max(1.0) {
        Ok(z.re)
    } else {
        Err(Error::Invalid(format!("{what} is not real: {z}")))
    }
}

/// Expansion from a precomputed jet of `u` at the origin.
pub fn gaussian_expansion_from_jet(jet: &Jet, lambda: f64, n: usize) -> Result<GaussianExpansion> {
    check_lambda(lambda)?;
    let count = n.div_ceil(2);
    let d = jet.dim();
    let prefactor = (PI / lambda).powf(d as f64 / 2.0);
    if count == 0 {
        return Ok(GaussianExpansion {
            d,
            lambda,
            n,
            terms: Vec::new(),
            prefactor,
        });
    }
    let laps = laplacian_powers(jet, count - 1)?;
    let terms = laps
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let t =
                real_part(*l, "Laplacian of u")? / ((4.0 * lambda).powi(j as i32) * factorial(j));
            Ok(t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GaussianExpansion {
        d,
        lambda,
        n,
        terms,
        prefactor,
    })
}

/// Expansion of `∫ e^{−λ|y|²} u(y) dy` with Laplacians read off the order-`N` jet at 0.
pub fn gaussian_expansion(u: &Expr, d: usize, lambda: f64, n: usize) -> Result<GaussianExpansion> {
    let jet = u.jet(&vec![C64::new(0.0, 0.0); d], n.max(1))?;
    gaussian_expansion_from_jet(&jet, lambda, n)
}

/// Absolute tolerance of the ball oracle in dimension `d`.
pub fn oracle_tolerance(d: usize) -> f64 {
    if d <= 2 {
        1e-10
    } else {
        1e-8
    }
}

/// `∫_{B(0,radius)} e^{−λ|y|²} f(y) dy` for `d ≤ 3` in polar or spherical coordinates.
pub fn ball_gaussian_integral<F>(f: F, d: usize, lambda: f64, radius: f64, tol: f64) -> Result<C64>
where
    F: Fn(&[f64]) -> Result<C64>,
{
    check_lambda(lambda)?;
    if !(radius > 0.0) {
        return Err(Error::Invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let g = |r: f64| (-lambda * r * r).exp();
    match d {
        1 => Ok(integrate(|y| Ok(f(&[y])? * g(y)), -radius, radius, tol)?.0),
        2 => {
            // inner errors are weighted by ∫ r e^{−λr²} dr ≤ 1/(2λ) and the outer length
            let inner_tol = tol / (4.0 * (radius + 1.0));
            let outer = |r: f64| -> Result<C64> {
                if r == 0.0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let (ang, _) =
                    integrate(|t| f(&[r * t.cos(), r * t.sin()]), 0.0, 2.0 * PI, inner_tol)?;
                Ok(ang * (r * g(r)))
            };
            Ok(integrate(outer, 0.0, radius, tol / 2.0)?.0)
        }
        3 => {
            let inner_tol = tol / (16.0 * (radius + 1.0));
            let outer = |r: f64| -> Result<C64> {
                if r == 0.0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let polar = |mu: f64| -> Result<C64> {
                    let s = (1.0 - mu * mu).max(0.0).sqrt();
                    let (v, _) = integrate(
                        |t| f(&[r * s * t.cos(), r * s * t.sin(), r * mu]),
                        0.0,
                        2.0 * PI,
                        inner_tol,
                    )?;
                    Ok(v)
                };
                let (v, _) = integrate(polar, -1.0, 1.0, 2.0 * inner_tol)?;
                Ok(v * (r * r * g(r)))
            };
            Ok(integrate(outer, 0.0, radius, tol / 2.0)?.0)
        }
        _ => Err(Error::Invalid(format!(
            "ball quadrature supports d ≤ 3, got {d}"
        ))),
    }
}

/// Adaptive quadrature of `∫_{B(0,radius)} e^{−λ|y|²} u(y) dy` to the tolerance of [`oracle_tolerance`].
pub fn gaussian_quadrature_oracle(u: &Expr, d: usize, lambda: f64, radius: f64) -> Result<f64> {
    let v = ball_gaussian_integral(
        |y| u.eval(&y.iter().map(|&t| C64::new(t, 0.0)).collect::<Vec<_>>()),
        d,
        lambda,
        radius,
        oracle_tolerance(d),
    )?;
    real_part(v, "integral of u")
}

/// Constants of the fixed-order remainder bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatPhaseConstants {
    pub c_d: f64,
    pub rho_d: f64,
}

impl StatPhaseConstants {
    /// Calibrated defaults `C_d = 10·3^d`, `ρ_d = 4d`.
    pub fn default_for(d: usize) -> StatPhaseConstants {
        StatPhaseConstants {
            c_d: 10.0 * 3f64.powi(d as i32),
            rho_d: 4.0 * d as f64,
        }
    }
}

/// Points of a uniform grid with `per_axis` points per axis inside the closed unit ball.
fn ball_samples(d: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64)
        .collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..d {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    pts.retain(|p| p.iter().map(|t| t * t).sum::<f64>() <= 1.0 + 1e-12);
    pts
}

/// Sampled `sup_{|y|≤1} ‖∇^j u(y)‖` for `j = 0..=N`.
///
/// `‖∇^j u‖` is the Frobenius norm of the symmetric derivative tensor,
/// `(Σ_{|α|=j} (j!/α!) |∂^α u|²)^{1/2}`.
pub fn gradient_sup_norms(u: &Expr, d: usize, n: usize) -> Result<Vec<f64>> {
    let per_axis = match d {
        1 => 41,
        2 => 15,
        _ => 9,
    };
    let mut sup = vec![0.0f64; n + 1];
    for p in ball_samples(d, per_axis) {
        let center: Vec<C64> = p.iter().map(|&t| C64::new(t, 0.0)).collect();
        let jet = u.jet(&center, n)?;
        let map = jet.index_map();
        let mut sq = vec![0.0f64; n + 1];
        for (i, alpha) in map.alphas().iter().enumerate() {
            let j = map.degree(i);
            let deriv = jet.coeffs()[i] * multi_factorial(alpha);
            sq[j] += factorial(j) / multi_factorial(alpha) * deriv.norm_sqr();
        }
        for (s, q) in sup.iter_mut().zip(sq) {
            *s = s.max(q.sqrt());
        }
    }
    Ok(sup)
}

/// Outcome of comparing the expansion with the ball oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatPhaseCertificate {
    pub d: usize,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub expansion: f64,
    pub oracle: f64,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
    pub constants: StatPhaseConstants,
    /// Smallest `C_d` (at the configured `ρ_d`) for which the bound still holds.
    pub tightest_c_d: f64,
    /// Set when the configured `C_d` is more than ten times the tightest one.
    pub loose: bool,
}

/// `C_d (e^{−λ} + ρ_d^N λ^{−N/2} Γ(N/2+1)) Σ_{j≤N} ‖∇^j u‖_∞/j!` against the oracle residual.
pub fn remainder_certificate(
    u: &Expr,
    d: usize,
    lambda: f64,
    n: usize,
    constants: &StatPhaseConstants,
) -> Result<StatPhaseCertificate> {
    let expansion = gaussian_expansion(u, d, lambda, n)?.value();
    let oracle = gaussian_quadrature_oracle(u, d, lambda, 1.0)?;
    let norms = gradient_sup_norms(u, d, n)?;
    let weight: f64 = norms
        .iter()
        .enumerate()
        .map(|(j, v)| v / factorial(j))
        .sum();
    let shape = (-lambda).exp()
        + constants.rho_d.powi(n as i32)
            * lambda.powf(-(n as f64) / 2.0)
            * gamma(n as f64 / 2.0 + 1.0);
    let unit_bound = shape * weight;
    let residual = (oracle - expansion).abs();
    let bound = constants.c_d * unit_bound;
    let tightest_c_d = if unit_bound > 0.0 {
        residual / unit_bound
    } else {
        0.0
    };
    Ok(StatPhaseCertificate {
        d,
        lambda,
        n,
        expansion,
        oracle,
        residual,
        bound,
        pass: residual <= bound,
        constants: *constants,
        tightest_c_d,
        loose: tightest_c_d * 10.0 < constants.c_d,
    })
}

/// `∫_{ℝ^d} e^{−λ|y|²} y^α dy` in closed form from Gaussian moments.
pub fn gaussian_moment(alpha: &[u32], lambda: f64) -> f64 {
    alpha
        .iter()
        .map(|&a| {
            if a % 2 == 1 {
                0.0
            } else {
                let k = a as f64 / 2.0;
                gamma(k + 0.5) / lambda.powf(k + 0.5)
            }
        })
        .product()
}

/// Full-space integral of a polynomial given by its jet at the origin.
pub fn polynomial_gaussian_integral(jet: &Jet, lambda: f64) -> f64 {
    jet.index_map()
        .alphas()
        .iter()
        .zip(jet.coeffs())
        .map(|(alpha, c)| c.re * gaussian_moment(alpha, lambda))
        .sum()
}

/// `Σ_α |c_α| ∫_{|y|>1} |y|^{|α|} e^{−λ|y|²} dy`, an upper bound for the
/// full-space integral minus the unit-ball integral of a polynomial.
pub fn polynomial_tail_bound(jet: &Jet, lambda: f64) -> f64 {
    let d = jet.index_map().dim();
    let sphere = 2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0);
    jet.index_map()
        .alphas()
        .iter()
        .zip(jet.coeffs())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(alpha, c)| {
            let k: u32 = alpha.iter().sum();
            // ∫_1^∞ r^{k+d−1} e^{−λr²} dr = Γ(s, λ)/(2λ^s), s = (k+d)/2
            let s = (k as f64 + d as f64) / 2.0;
            let upper = gamma_ur(s, lambda) * gamma(s);
            c.norm() * sphere * upper / (2.0 * lambda.powf(s))
        })
        .sum()
}

/// Analytic amplitudes for the remainder certificate in dimension `d ∈ {1, 2}`.
///
/// Variables are named `y1, …, yd`.
pub fn u_corpus(d: usize) -> Result<Vec<(String, Expr)>> {
    let srcs: &[(&str, &str)] = match d {
        1 => &[
            ("exp", "(exp y1)"),
            ("cosine", "(cos (* 2 y1))"),
            ("rational", "(/ 1 (+ 2 y1))"),
            ("gaussian bump", "(exp (* -1 (^ y1 2)))"),
        ],
        2 => &[
            ("exp", "(exp (+ y1 (* 0.5 y2)))"),
            ("cosine product", "(* (cos y1) (cos (* 2 y2)))"),
            ("rational", "(/ 1 (+ 3 y1 y2))"),
            ("mixed", "(* (sin (+ y1 1)) (exp y2))"),
        ],
        _ => {
            return Err(Error::Invalid(format!(
                "u-corpus is defined for d = 1, 2; got {d}"
            )))
        }
    };
    corpus_from(d, srcs)
}

/// Polynomial amplitudes whose expansion is exact at `N = 8`.
pub fn polynomial_corpus(d: usize) -> Result<Vec<(String, Expr)>> {
    let srcs: &[(&str, &str)] = match d {
        1 => &[
            ("quartic", "(+ 1 (* 3 y1) (* -2 (^ y1 4)))"),
            ("septic", "(+ (^ y1 2) (* 0.5 (^ y1 6)) (* 7 (^ y1 7)))"),
        ],
        2 => &[
            (
                "mixed sextic",
                "(+ 1 (* 3 y1) (* (^ y1 2) y2) (* 2 (^ y2 4)) (^ y1 6))",
            ),
            (
                "cross quartic",
                "(+ (* (^ y1 2) (^ y2 2)) (* -4 y1 y2) 0.25)",
            ),
        ],
        _ => {
            return Err(Error::Invalid(format!(
                "polynomial corpus is defined for d = 1, 2; got {d}"
            )))
        }
    };
    corpus_from(d, srcs)
}

fn corpus_from(d: usize, srcs: &[(&str, &str)]) -> Result<Vec<(String, Expr)>> {
    let names: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    srcs.iter()
        .map(|(name, src)| Ok((name.to_string(), crate::jets::parse_expr(src, &names)?)))
        .collect()
}

/// Laplacian in the fibre variables `y`.
fn y_laplacian(e: &Expr, ys: &[usize]) -> Expr {
    let mut acc = Expr::zero();
    for &v in ys {
        acc = acc.add(&e.diff(v).diff(v));
    }
    acc
}

/// Formal stationary phase for `∫ e^{−|θ||y|²} a(x,θ,y) dy`.
///
/// `b_j = π^{d_y/2} |θ|^{−d_y/2} Σ_{i+ℓ=j} Δ_y^i a_ℓ(x,θ,0)/(4^i i! |θ|^i)`,
/// homogeneous of degree `d₀ − d_y/2 − j`.
pub fn formal_gaussian_pushforward(a: &FormalSymbol, k: usize) -> Result<FormalSymbol> {
    let d = a.d();
    let dy = a.y_dim();
    if dy == 0 {
        return Err(Error::Invalid("amplitude has no fibre variables".into()));
    }
    let ys: Vec<usize> = (0..dy).map(|i| a.y_var(i)).collect();
    let mut subs: Vec<Expr> = (0..2 * d).map(Expr::var).collect();
    subs.extend((0..dy).map(|_| Expr::zero()));
    let theta = Expr::radial((0..d).map(|i| a.xi_var(i)).collect());
    let lead = theta
        .powf(-(dy as f64) / 2.0)
        .scale(C64::new(PI.powf(dy as f64 / 2.0), 0.0));
    // laps[ℓ][i] = Δ_y^i a_ℓ before restriction to y = 0
    let mut coeffs = Vec::with_capacity(k + 1);
    let mut laps: Vec<Vec<Expr>> = Vec::new();
    for j in 0..=k {
        laps.push(vec![a.coeff(j)]);
        let mut bj = Expr::zero();
        for (l, row) in laps.iter_mut().enumerate() {
            let i = j - l;
            while row.len() <= i {
                let next = y_laplacian(row.last().expect("nonempty"), &ys);
                row.push(next);
            }
            let restricted = row[i].subst(&subs);
            if restricted.is_zero() {
                continue;
            }
            let w = 1.0 / (4f64.powi(i as i32) * factorial(i));
            bj = bj.add(
                &restricted
                    .mul(&theta.powi(-(i as i32)))
                    .scale(C64::new(w, 0.0)),
            );
        }
        coeffs.push(bj.mul(&lead));
    }
    FormalSymbol::new(d, a.degree() - dy as f64 / 2.0, coeffs)
}

/// Cross-check of the pushforward against direct integration of the realised amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardCheck {
    pub theta_norms: Vec<f64>,
    /// `|b(x,θ) − ∫_{B(0,1)} e^{−|θ||y|²} a(x,θ,y) dy|` with both sides realised at scale `c`.
    pub differences: Vec<f64>,
    /// Fitted factorial model `C ρ^N N! |θ|^{d_b−N}` at the number of fully active terms.
    pub bounds: Vec<f64>,
    pub active_terms: Vec<usize>,
    pub pass: bool,
}

/// Realises `a` and its pushforward `b` at scale `c` and compares them on the radial grid.
///
/// The bound uses `(C, ρ)` fitted from `sup_θ |b_k| |θ|^{k−d_b}/k!` as in
/// the factorial remainder model; both sides share their first `N` terms
/// exactly when all of them carry full weight.
pub fn pushforward_consistency(
    a: &FormalSymbol,
    k: usize,
    c: f64,
    cutoffs: Arc<crate::borel::CutoffFamily>,
    x: &[f64],
    thetas: &[Vec<f64>],
) -> Result<PushforwardCheck> {
    let b = formal_gaussian_pushforward(a, k)?;
    let ra = RealizedAmplitude::unchecked(a, c, cutoffs.clone());
    let rb = RealizedAmplitude::unchecked(&b, c, cutoffs);
    let dy = a.y_dim();
    let rate = fit_growth_rate(&b, x, thetas)?;
    let c_fit = (0..=b.order())
        .map(|j| {
            let sup = thetas
                .iter()
                .map(|th| {
                    let r = th.iter().map(|t| t * t).sum::<f64>().sqrt();
                    let z: Vec<C64> = x
                        .iter()
                        .chain(th.iter())
                        .map(|&v| C64::new(v, 0.0))
                        .collect();
                    Ok(b.coeff(j).eval(&z)?.norm() * r.powf(j as f64 - b.degree()))
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(sup / (factorial(j) * rate.powi(j as i32)))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut out = PushforwardCheck {
        theta_norms: Vec::new(),
        differences: Vec::new(),
        bounds: Vec::new(),
        active_terms: Vec::new(),
        pass: true,
    };
    for th in thetas {
        let r = th.iter().map(|t| t * t).sum::<f64>().sqrt();
        let lhs = rb.eval(x, th)?;
        let rhs = ball_gaussian_integral(
            |y| ra.eval_with_y(x, th, y),
            dy,
            r,
            1.0,
            oracle_tolerance(dy) * 1e-2,
        )?;
        let n = ra.active_terms(r).min(rb.active_terms(r));
        let bound = c_fit * rate.powi(n as i32) * factorial(n) * r.powf(b.degree() - n as f64);
        let diff = (lhs - rhs).norm();
        out.pass &= diff <= bound;
        out.theta_norms.push(r);
        out.differences.push(diff);
        out.bounds.push(bound);
        out.active_terms.push(n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel::{radial_grid, CutoffFamily, CutoffOptions};
    use crate::jets::parse_expr;

    fn ex(src: &str, names: &[&str]) -> Expr {
        parse_expr(src, names).unwrap()
    }

    /// Brute-force Laplacian powers by repeated symbolic differentiation.
    fn symbolic_laplacians(u: &Expr, d: usize, jmax: usize) -> Vec<f64> {
        let vars: Vec<usize> = (0..d).collect();
        let mut e = u.clone();
        let zero = vec![C64::new(0.0, 0.0); d];
        let mut out = vec![e.eval(&zero).unwrap().re];
        for _ in 0..jmax {
            e = y_laplacian(&e, &vars);
            out.push(e.eval(&zero).unwrap().re);
        }
        out
    }

    #[test]
    fn constant_expansion() {
        let e = gaussian_expansion(&Expr::one(), 1, 3.0, 2).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert!((e.value() - (PI / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quadratic_expansion() {
        let u = ex("(^ y 2)", &["y"]);
        let lam = 7.0;
        let e = gaussian_expansion(&u, 1, lam, 4).unwrap();
        assert!((e.value() - PI.sqrt() / (2.0 * lam.powf(1.5))).abs() < 1e-15);
    }

    #[test]
    fn quartic_cross_term_expansion() {
        let u = ex("(+ 1 (* (^ y1 2) (^ y2 2)))", &["y1", "y2"]);
        let e = gaussian_expansion(&u, 2, 10.0, 6).unwrap();
        let laps = symbolic_laplacians(&u, 2, 2);
        assert_eq!(laps[2], 8.0);
        let expected = PI / 10.0 * (1.0 + 8.0 / 3200.0);
        assert!((e.value() - expected).abs() < 1e-15);
        // radius 3 leaves a tail below e^{−90}, so the ball integral is the full-space one
        let oracle = gaussian_quadrature_oracle(&u, 2, 10.0, 3.0).unwrap();
        assert!((oracle - expected).abs() < 1e-6);
    }

    #[test]
    fn jet_laplacians_match_symbolic() {
        let u = ex(
            "(* (exp (* 0.5 y1)) (cos (- y2 (* 0.3 y1))))",
            &["y1", "y2"],
        );
        let jet = u.jet(&[C64::new(0.0, 0.0); 2], 8).unwrap();
        let fast = laplacian_powers(&jet, 4).unwrap();
        let slow = symbolic_laplacians(&u, 2, 4);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f.re - s).abs() < 1e-12 * s.abs().max(1.0), "{f} vs {s}");
        }
    }

    #[test]
    fn insufficient_jet_order() {
        let jet = Expr::one().jet(&[C64::new(0.0, 0.0)], 2).unwrap();
        assert!(gaussian_expansion_from_jet(&jet, 1.0, 6).is_err());
        assert!(gaussian_expansion(&Expr::one(), 1, -1.0, 2).is_err());
    }

    #[test]
    fn oracle_constant_1d_is_erf() {
        let v = gaussian_quadrature_oracle(&Expr::one(), 1, 4.0, 1.0).unwrap();
        let exact = (PI / 4.0).sqrt() * statrs::function::erf::erf(2.0);
        assert!((v - exact).abs() < 1e-12);
        assert!((v - 0.88208).abs() < 1e-5);
    }

    #[test]
    fn oracle_odd_is_zero() {
        let v = gaussian_quadrature_oracle(&ex("y", &["y"]), 1, 3.0, 1.0).unwrap();
        assert!(v.abs() < 1e-12);
        let v2 =
            gaussian_quadrature_oracle(&ex("(* y1 (exp y2))", &["y1", "y2"]), 2, 3.0, 1.0).unwrap();
        assert!(v2.abs() < 1e-12);
    }

    #[test]
    fn oracle_constant_2d_radial() {
        let v = gaussian_quadrature_oracle(&Expr::one(), 2, 10.0, 1.0).unwrap();
        let exact = PI / 10.0 * (1.0 - (-10.0f64).exp());
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn oracle_constant_3d() {
        // ∫_{|y|<1} e^{−λ|y|²} = π^{3/2} λ^{−3/2} erf(√λ) − 2π e^{−λ}/λ
        let lam = 3.0f64;
        let v = gaussian_quadrature_oracle(&Expr::one(), 3, lam, 1.0).unwrap();
        let exact = PI.powf(1.5) * lam.powf(-1.5) * statrs::function::erf::erf(lam.sqrt())
            - 2.0 * PI * (-lam).exp() / lam;
        assert!((v - exact).abs() < 1e-8);
    }

    #[test]
    fn exp_certificate_holds() {
        let u = ex("(exp y)", &["y"]);
        let consts = StatPhaseConstants {
            c_d: 10.0,
            rho_d: 4.0,
        };
        let cert = remainder_certificate(&u, 1, 20.0, 8, &consts).unwrap();
        assert!(cert.pass, "{cert:?}");
    }

    #[test]
    fn zero_certificate() {
        let cert = remainder_certificate(
            &Expr::zero(),
            1,
            5.0,
            4,
            &StatPhaseConstants::default_for(1),
        )
        .unwrap();
        assert_eq!(cert.residual, 0.0);
        assert_eq!(cert.bound, 0.0);
        assert!(cert.pass);
    }

    #[test]
    fn polynomial_exactness() {
        let u = ex(
            "(+ 1 (* 3 y1) (* (^ y1 2) y2) (* 2 (^ y2 4)) (^ y1 6))",
            &["y1", "y2"],
        );
        for lam in [5.0, 10.0, 20.0] {
            let jet = u.jet(&[C64::new(0.0, 0.0); 2], 8).unwrap();
            let full = polynomial_gaussian_integral(&jet, lam);
            let e = gaussian_expansion(&u, 2, lam, 8).unwrap().value();
            assert!((e - full).abs() <= 1e-10 * full.abs());
            let oracle = gaussian_quadrature_oracle(&u, 2, lam, 1.0).unwrap();
            assert!((oracle - e).abs() <= 10.0 * (-lam / 2.0f64).exp());
        }
    }

    #[test]
    fn tail_bound_covers_ball_truncation() {
        for d in 1..=2 {
            for (name, u) in polynomial_corpus(d).unwrap() {
                for lam in [5.0, 10.0] {
                    let jet = u.jet(&vec![C64::new(0.0, 0.0); d], 8).unwrap();
                    let full = polynomial_gaussian_integral(&jet, lam);
                    let oracle = gaussian_quadrature_oracle(&u, d, lam, 1.0).unwrap();
                    let tail = polynomial_tail_bound(&jet, lam);
                    assert!((full - oracle).abs() <= tail + 1e-10, "{name} λ={lam}");
                    assert!(tail < 1e3 * (-lam).exp());
                }
            }
        }
    }

    #[test]
    fn tail_bound_of_constant_is_erfc() {
        // d = 1: ∫_{|y|>1} e^{−λy²} dy = √(π/λ) erfc(√λ)
        let jet = Expr::one().jet(&[C64::new(0.0, 0.0)], 2).unwrap();
        let lam: f64 = 3.0;
        let expected = (PI / lam).sqrt() * statrs::function::erf::erfc(lam.sqrt());
        let got = polynomial_tail_bound(&jet, lam);
        // statrs evaluates the incomplete gamma to about 1e-10 relative
        assert!(
            (got - expected).abs() < 1e-9 * expected,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn corpus_certificates_at_default_constants() {
        for d in 1..=2 {
            let consts = StatPhaseConstants::default_for(d);
            for (name, u) in u_corpus(d).unwrap() {
                for lam in [5.0, 10.0, 20.0] {
                    for n in [2, 4, 8] {
                        let c = remainder_certificate(&u, d, lam, n, &consts).unwrap();
                        assert!(c.pass, "{name} d={d} λ={lam} N={n}: {c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_moments_closed_form() {
        assert!((gaussian_moment(&[0], 2.0) - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!((gaussian_moment(&[2, 0], 1.0) - PI / 2.0).abs() < 1e-14);
        assert_eq!(gaussian_moment(&[1, 2], 1.0), 0.0);
    }

    #[test]
    fn pushforward_of_y_independent_symbol() {
        let a0 = ex("(+ 1 (^ x 2))", &["x", "xi", "y"]);
        let a = FormalSymbol::with_y(1, 1, 0.0, vec![a0]).unwrap();
        let b = formal_gaussian_pushforward(&a, 0).unwrap();
        assert_eq!(b.degree(), -0.5);
        let z = [C64::new(0.5, 0.0), C64::new(9.0, 0.0)];
        let got = b.coeff(0).eval(&z).unwrap();
        assert!((got.re - PI.sqrt() * 1.25 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn pushforward_of_quadratic_matches_expansion() {
        let a0 = ex("(^ y 2)", &["x", "xi", "y"]);
        let a = FormalSymbol::with_y(1, 1, 0.0, vec![a0]).unwrap();
        let b = formal_gaussian_pushforward(&a, 2).unwrap();
        let lam = 12.0;
        let z = [C64::new(0.0, 0.0), C64::new(lam, 0.0)];
        assert_eq!(b.coeff(0).eval(&z).unwrap().norm(), 0.0);
        let b1 = b.coeff(1).eval(&z).unwrap().re;
        let expected = gaussian_expansion(&ex("(^ y 2)", &["y"]), 1, lam, 4)
            .unwrap()
            .value();
        assert!((b1 - expected).abs() < 1e-15);
        assert_eq!(b.coeff(2).eval(&z).unwrap().norm(), 0.0);
    }

    #[test]
    fn pushforward_consistency_with_realised_amplitudes() {
        // a_ℓ = ℓ! (2|θ|)^{−ℓ} e^{y}
        let names = ["x", "xi", "y"];
        let coeffs = (0..=20)
            .map(|l| {
                let s = format!("(* {} (exp y) (^ (* 2 (norm xi)) -{l}))", factorial(l));
                ex(&s, &names)
            })
            .collect();
        let a = FormalSymbol::with_y(1, 1, 0.0, coeffs).unwrap();
        let fam = Arc::new(
            CutoffFamily::radial_profile(
                20,
                &CutoffOptions {
                    h: None,
                    certify_up_to: 0,
                },
            )
            .unwrap(),
        );
        let rep =
            pushforward_consistency(&a, 20, 0.25, fam, &[0.0], &radial_grid(20.0, 50.0, 2, 1))
                .unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
