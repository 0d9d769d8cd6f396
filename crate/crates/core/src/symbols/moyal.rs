use std::collections::HashMap;

use super::{estimate_norm, FormalSymbol, NormParams, SampleBox};
use crate::error::{Error, Result};
use crate::jets::{index_map, multi_factorial, Expr};
use crate::C64;

/// Phase factor of the left-quantization star product.
pub const KAPPA: C64 = C64::new(0.0, -1.0);
/// Largest truncation order accepted by the algebra operations.
pub const MAX_ORDER: usize = 40;

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::Invalid(format!(
            "truncation order {k} exceeds the maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Memoised `∂^β a_l` over a fixed block of variables.
struct Derivs {
    coeffs: Vec<Expr>,
    vars: Vec<usize>,
    cache: HashMap<(usize, Vec<u32>), Expr>,
}

impl Derivs {
    fn new(coeffs: Vec<Expr>, vars: Vec<usize>) -> Derivs {
        Derivs {
            coeffs,
            vars,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, l: usize, beta: &[u32]) -> Expr {
        let Some(base) = self.coeffs.get(l) else {
            return Expr::zero();
        };
        if beta.iter().all(|&b| b == 0) {
            return base.clone();
        }
        if let Some(e) = self.cache.get(&(l, beta.to_vec())) {
            return e.clone();
        }
        let i = beta.iter().position(|&b| b > 0).unwrap();
        let mut lower = beta.to_vec();
        lower[i] -= 1;
        let e = self.get(l, &lower).diff(self.vars[i]);
        self.cache.insert((l, beta.to_vec()), e.clone());
        e
    }
}

fn multi_indices_of_degree(d: usize, n: usize) -> Vec<Vec<u32>> {
    let map = index_map(d, n);
    (0..map.len())
        .filter(|&i| map.degree(i) == n)
        .map(|i| map.alpha(i).to_vec())
        .collect()
}

/// `Σ_{n+l+m=k} Σ_{|β|=n} κ^n/β! ∂_ξ^β a_l ∂_x^β b_m`, optionally skipping `(n,l,m) = (0,0,k)`.
fn star_coeff(a: &mut Derivs, b: &mut Derivs, d: usize, k: usize, skip_top: bool) -> Expr {
    let mut terms = Vec::new();
    for n in 0..=k {
        let betas = multi_indices_of_degree(d, n);
        let kn = KAPPA.powi(n as i32);
        for l in 0..=(k - n) {
            let m = k - n - l;
            if skip_top && n == 0 && l == 0 {
                continue;
            }
            for beta in &betas {
                let da = a.get(l, beta);
                if da.is_zero() {
                    continue;
                }
                let db = b.get(m, beta);
                if db.is_zero() {
                    continue;
                }
                let w = kn / multi_factorial(beta);
                terms.push(Expr::product(vec![Expr::constant(w), da, db]));
            }
        }
    }
    Expr::sum(terms)
}

fn xi_vars(d: usize) -> Vec<usize> {
    (d..2 * d).collect()
}

fn x_vars(d: usize) -> Vec<usize> {
    (0..d).collect()
}

fn require_plain(a: &FormalSymbol) -> Result<()> {
    if a.y_dim() != 0 {
        return Err(Error::Invalid(
            "operation expects an (x, xi) symbol without y variables".into(),
        ));
    }
    Ok(())
}

/// Moyal product `a ♯ b` truncated at order `k`.
///
/// `c_k = Σ_{n+l+m=k} Σ_{|β|=n} κ^n/β! ∂_ξ^β a_l ∂_x^β b_m` with `κ = −i`,
/// the composition law of `Op(a)u(x) = (2π)^{-d} ∫ e^{ix·ξ} a(x,ξ) û(ξ) dξ`.
pub fn moyal_product(a: &FormalSymbol, b: &FormalSymbol, k: usize) -> Result<FormalSymbol> {
    a.check_same_space(b)?;
    require_plain(a)?;
    check_order(k)?;
    let d = a.d();
    let mut da = Derivs::new(a.coeffs().to_vec(), xi_vars(d));
    let mut db = Derivs::new(b.coeffs().to_vec(), x_vars(d));
    let coeffs = (0..=k)
        .map(|j| star_coeff(&mut da, &mut db, d, j, false))
        .collect();
    FormalSymbol::new(d, a.degree() + b.degree(), coeffs)
}

/// Right inverse `b` with `a ♯ b = 1` through order `k`, solved order by order.
///
/// `b_0 = 1/a_0` and `b_j = −b_0 (a ♯ b)_j|_{b_j = 0}`, which is the Neumann
/// series of `a ♯ b_0 = 1 − r` resummed degree by degree.
pub fn neumann_invert(
    a: &FormalSymbol,
    k: usize,
    sample: &SampleBox,
    threshold: f64,
) -> Result<FormalSymbol> {
    require_plain(a)?;
    check_order(k)?;
    let a0 = a.coeff(0);
    let min = sample.min_abs(&a0)?;
    if min < threshold {
        return Err(Error::NotElliptic { min, threshold });
    }
    let d = a.d();
    let b0 = Expr::one().div(&a0);
    let mut da = Derivs::new(a.coeffs().to_vec(), xi_vars(d));
    let mut db = Derivs::new(vec![b0.clone()], x_vars(d));
    for j in 1..=k {
        let rest = star_coeff(&mut da, &mut db, d, j, true);
        let bj = rest.mul(&b0).neg();
        db.coeffs.push(bj);
    }
    FormalSymbol::new(d, -a.degree(), db.coeffs)
}

/// Adjoint `(a*)_k = Σ_{|μ|≤k} κ^{|μ|}/μ! ∂_x^μ ∂_ξ^μ conj(a_{k−|μ|})`.
///
/// The phase factor is the same `κ` as in [`moyal_product`], which makes
/// `a ↦ a*` an anti-involution of `♯`.
pub fn adjoint_symbol(a: &FormalSymbol) -> Result<FormalSymbol> {
    adjoint_symbol_to(a, a.order())
}

/// [`adjoint_symbol`] computed through order `k`, treating `a_j = 0` for `j > K`.
pub fn adjoint_symbol_to(a: &FormalSymbol, k_out: usize) -> Result<FormalSymbol> {
    require_plain(a)?;
    check_order(k_out)?;
    let d = a.d();
    let conj: Vec<Expr> = a.coeffs().iter().map(|c| c.conj()).collect();
    let mut dx = Derivs::new(conj, x_vars(d));
    let xi = xi_vars(d);
    let mut coeffs = Vec::with_capacity(k_out + 1);
    for k in 0..=k_out {
        let mut terms = Vec::new();
        for n in 0..=k {
            let w = KAPPA.powi(n as i32);
            for mu in multi_indices_of_degree(d, n) {
                let e = dx.get(k - n, &mu).diff_multi(&xi, &mu);
                if !e.is_zero() {
                    terms.push(e.scale(w / multi_factorial(&mu)));
                }
            }
        }
        coeffs.push(Expr::sum(terms));
    }
    FormalSymbol::new(d, a.degree(), coeffs)
}

/// Left total symbol `b_j = Σ_{|μ|≤j} κ^{|μ|}/μ! (∂_y^μ ∂_ξ^μ a_{j−|μ|})(x, ξ, x)`
/// of an amplitude `a(x, ξ, y)` quantized with the kernel `e^{i(x−y)·ξ}`.
pub fn left_total_symbol(a: &FormalSymbol, k: usize) -> Result<FormalSymbol> {
    let d = a.d();
    if a.y_dim() != d {
        return Err(Error::Shape(format!(
            "total symbol needs y of dimension {d}, got {}",
            a.y_dim()
        )));
    }
    check_order(k)?;
    let ys: Vec<usize> = (0..d).map(|i| a.y_var(i)).collect();
    let mut dy = Derivs::new(a.coeffs().to_vec(), ys);
    let xi = xi_vars(d);
    let mut subs: Vec<Expr> = (0..2 * d).map(Expr::var).collect();
    subs.extend((0..d).map(Expr::var));
    let mut coeffs = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let mut terms = Vec::new();
        for n in 0..=j {
            let w = KAPPA.powi(n as i32);
            for mu in multi_indices_of_degree(d, n) {
                let e = dy.get(j - n, &mu).diff_multi(&xi, &mu);
                if !e.is_zero() {
                    terms.push(e.scale(w / multi_factorial(&mu)));
                }
            }
        }
        coeffs.push(Expr::sum(terms).subst(&subs));
    }
    FormalSymbol::new(d, a.degree(), coeffs)
}

/// Options for [`moyal_sqrt`].
#[derive(Clone, Debug)]
pub struct SqrtOptions {
    pub sample: SampleBox,
    /// Sampled lower bound required of `a_0`.
    pub threshold: f64,
    /// Largest sampled `|a* − a|` accepted as self-adjoint.
    pub adjoint_tol: f64,
}

impl SqrtOptions {
    pub fn new(sample: SampleBox) -> SqrtOptions {
        SqrtOptions {
            sample,
            threshold: 1e-6,
            adjoint_tol: 1e-9,
        }
    }
}

fn binom_half(j: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..j {
        c *= (0.5 - i as f64) / (i + 1) as f64;
    }
    c
}

/// Square root `b` with `b* ♯ b = a` through order `k`.
///
/// `b_0 = √a_0`, `1 + r = (b_0*)^{-1} ♯ a ♯ b_0^{-1}`, `c = Σ_j C(1/2, j) r^{♯j}`
/// and `b = c ♯ b_0`. The series terms are checked to decrease in sampled
/// size; a growing tail is reported as divergence.
pub fn moyal_sqrt(a: &FormalSymbol, k: usize, opts: &SqrtOptions) -> Result<FormalSymbol> {
    require_plain(a)?;
    check_order(k)?;
    let d = a.d();
    let pts = opts.sample.points();
    if pts.is_empty() {
        return Err(Error::Invalid("empty sampling grid".into()));
    }
    let a0 = a.coeff(0);
    let mut min = f64::INFINITY;
    for p in &pts {
        let v = a0.eval(&super::complexify(p))?;
        if v.im.abs() > 1e-12 * v.norm().max(1.0) {
            return Err(Error::Invalid(format!("a_0 is not real at {p:?}: {v}")));
        }
        min = min.min(v.re);
    }
    if min < opts.threshold {
        return Err(Error::NotElliptic {
            min,
            threshold: opts.threshold,
        });
    }
    let adj = adjoint_symbol(a)?;
    let skew = opts.sample.max_difference(&adj, a)?;
    if skew > opts.adjoint_tol {
        return Err(Error::Invalid(format!(
            "symbol is not self-adjoint: sampled |a* - a| = {skew:e}"
        )));
    }
    let b0 = FormalSymbol::new(d, a.degree() / 2.0, vec![a0.sqrt()])?;
    let inv_b0 = neumann_invert(&b0, k, &opts.sample, opts.threshold)?;
    let inv_b0_adj = neumann_invert(&adjoint_symbol_to(&b0, k)?, k, &opts.sample, opts.threshold)?;
    let s = moyal_product(&moyal_product(&inv_b0_adj, a, k)?, &inv_b0, k)?;
    let mut r_coeffs = s.coeffs().to_vec();
    r_coeffs[0] = r_coeffs[0].sub(&Expr::one());
    let r = FormalSymbol::new(d, 0.0, r_coeffs)?;

    let probe = NormParams {
        rho: 1.0,
        r: 1.0,
        m: 0.0,
        sample: opts.sample.clone(),
        max_deriv: 0,
        k_max: None,
    };
    let mut c = FormalSymbol::unit(d).truncate(k);
    let mut power = FormalSymbol::unit(d).truncate(k);
    let mut sizes = Vec::new();
    for j in 1..=k {
        power = moyal_product(&power, &r, k)?;
        let term = power.scale(C64::new(binom_half(j), 0.0));
        sizes.push(estimate_norm(&term, &probe)?.value);
        c = c.add(&term)?;
    }
    if let (Some(&first), Some(&last)) = (sizes.first(), sizes.last()) {
        if sizes.len() > 1 && first > 0.0 && last > first {
            return Err(Error::Divergent(format!(
                "square-root series term sizes grow from {first:e} to {last:e}"
            )));
        }
    }
    moyal_product(&c, &b0, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::parse_expr;

    fn sym(d0: f64, srcs: &[&str]) -> FormalSymbol {
        let coeffs = srcs
            .iter()
            .map(|s| parse_expr(s, &["x", "xi"]).unwrap())
            .collect();
        FormalSymbol::new(1, d0, coeffs).unwrap()
    }

    fn amp(d0: f64, srcs: &[&str]) -> FormalSymbol {
        let coeffs = srcs
            .iter()
            .map(|s| parse_expr(s, &["x", "xi", "y"]).unwrap())
            .collect();
        FormalSymbol::with_y(1, 1, d0, coeffs).unwrap()
    }

    fn shell() -> SampleBox {
        SampleBox::uniform(1, (-1.0, 1.0), (1.0, 4.0), 9)
    }

    fn at(e: &Expr, x: f64, xi: f64) -> C64 {
        e.eval(&[C64::new(x, 0.0), C64::new(xi, 0.0)]).unwrap()
    }

    #[test]
    fn unit_is_neutral() {
        let a = sym(1.0, &["(* x xi)", "(sin x)"]);
        let one = FormalSymbol::unit(1);
        for c in [
            moyal_product(&one, &a, 1).unwrap(),
            moyal_product(&a, &one, 1).unwrap(),
        ] {
            assert_eq!(shell().max_difference(&c, &a).unwrap(), 0.0);
        }
    }

    #[test]
    fn xi_times_x() {
        let c = moyal_product(&sym(1.0, &["xi"]), &sym(0.0, &["x"]), 1).unwrap();
        assert_eq!(at(&c.coeff(0), 0.3, 2.0), C64::new(0.6, 0.0));
        assert_eq!(at(&c.coeff(1), 0.3, 2.0), C64::new(0.0, -1.0));
    }

    #[test]
    fn commutator_of_xi_and_x() {
        let a = sym(1.0, &["xi"]);
        let b = sym(0.0, &["x"]);
        let ab = moyal_product(&a, &b, 1).unwrap();
        let ba = moyal_product(&b, &a, 1).unwrap();
        let c1 = ab.coeff(1).sub(&ba.coeff(1));
        assert_eq!(at(&c1, 0.1, 1.5), C64::new(0.0, -1.0));
    }

    #[test]
    fn invert_constant() {
        let b = neumann_invert(
            &FormalSymbol::constant(1, C64::new(2.0, 0.0)),
            2,
            &shell(),
            1e-6,
        )
        .unwrap();
        assert_eq!(at(&b.coeff(0), 0.0, 1.0), C64::new(0.5, 0.0));
        assert!(b.coeff(1).is_zero() && b.coeff(2).is_zero());
        let u = neumann_invert(&FormalSymbol::unit(1), 3, &shell(), 1e-6).unwrap();
        assert_eq!(
            shell().max_difference(&u, &FormalSymbol::unit(1)).unwrap(),
            0.0
        );
    }

    #[test]
    fn invert_radial_symbol() {
        let a = sym(0.0, &["1", "(/ 1 (norm xi))"]);
        let b = neumann_invert(&a, 4, &shell(), 1e-6).unwrap();
        assert!((at(&b.coeff(1), 0.0, 2.0) + 0.5).norm() < 1e-15);
        let p = moyal_product(&a, &b, 4).unwrap();
        let res = shell()
            .max_difference(&p, &FormalSymbol::unit(1).truncate(4))
            .unwrap();
        assert!(res <= 1e-9, "residual {res}");
    }

    #[test]
    fn invert_x_dependent_symbol() {
        let a = sym(1.0, &["(* xi (+ 2 (sin x)))", "(* (c 0 1) (cos x))"]);
        let b = neumann_invert(&a, 3, &shell(), 1e-6).unwrap();
        let p = moyal_product(&a, &b, 3).unwrap();
        let res = shell()
            .max_difference(&p, &FormalSymbol::unit(1).truncate(3))
            .unwrap();
        assert!(res <= 1e-9, "residual {res}");
    }

    #[test]
    fn non_elliptic_is_rejected() {
        let a = sym(0.0, &["x"]);
        assert!(matches!(
            neumann_invert(&a, 2, &shell(), 1e-6),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn adjoint_examples() {
        let real = sym(1.0, &["(* 3 xi)", "(/ 1 xi)"]);
        let adj = adjoint_symbol(&real).unwrap();
        assert_eq!(shell().max_difference(&adj, &real).unwrap(), 0.0);
        let a = adjoint_symbol(&sym(1.0, &["(* x xi)"]).truncate(1)).unwrap();
        assert_eq!(at(&a.coeff(0), 0.5, 2.0), C64::new(1.0, 0.0));
        assert_eq!(at(&a.coeff(1), 0.5, 2.0), KAPPA);
    }

    #[test]
    fn adjoint_reverses_products() {
        let a = sym(1.0, &["(* xi (exp x))", "(* (c 0 1) x)"]);
        let b = sym(0.0, &["(+ 1 (* x x))", "(/ (sin x) xi)"]);
        let k = 3;
        let lhs = adjoint_symbol(&moyal_product(&a, &b, k).unwrap()).unwrap();
        let rhs = moyal_product(
            &adjoint_symbol(&b.truncate(k)).unwrap(),
            &adjoint_symbol(&a.truncate(k)).unwrap(),
            k,
        )
        .unwrap();
        assert!(shell().max_difference(&lhs, &rhs).unwrap() < 1e-10);
    }

    #[test]
    fn total_symbol_examples() {
        let b = left_total_symbol(&amp(1.0, &["(* (sin x) xi)"]), 2).unwrap();
        assert!((at(&b.coeff(0), 0.4, 2.0) - 0.4f64.sin() * 2.0).norm() < 1e-15);
        assert!(b.coeff(1).is_zero());
        let b = left_total_symbol(&amp(1.0, &["(* y xi)"]), 1).unwrap();
        assert_eq!(at(&b.coeff(0), 0.4, 2.0), C64::new(0.8, 0.0));
        assert_eq!(at(&b.coeff(1), 0.4, 2.0), KAPPA);
    }

    #[test]
    fn sqrt_of_constants() {
        let opts = SqrtOptions::new(shell());
        let b = moyal_sqrt(&FormalSymbol::constant(1, C64::new(4.0, 0.0)), 2, &opts).unwrap();
        assert!((at(&b.coeff(0), 0.0, 1.0) - 2.0).norm() < 1e-15);
        assert!(at(&b.coeff(1), 0.0, 1.0).norm() < 1e-15);
        let b = moyal_sqrt(&FormalSymbol::unit(1), 2, &opts).unwrap();
        assert!((at(&b.coeff(0), 0.0, 1.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn sqrt_reproduces_radial_symbol() {
        let a = sym(0.0, &["1", "(/ 1 (norm xi))"]);
        let b = moyal_sqrt(&a, 3, &SqrtOptions::new(shell())).unwrap();
        let bb = moyal_product(&adjoint_symbol(&b).unwrap(), &b, 3).unwrap();
        let res = shell().max_difference(&bb, &a.truncate(3)).unwrap();
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn sqrt_reproduces_x_dependent_symbol() {
        // a = c* ♯ c for c = (2 + sin x) ξ, hence self-adjoint with a_0 > 0
        let c = sym(1.0, &["(* (+ 2 (sin x)) xi)"]);
        let a = moyal_product(&adjoint_symbol_to(&c, 2).unwrap(), &c, 2).unwrap();
        let b = moyal_sqrt(&a, 2, &SqrtOptions::new(shell())).unwrap();
        let bb = moyal_product(&adjoint_symbol(&b).unwrap(), &b, 2).unwrap();
        let res = shell().max_difference(&bb, &a).unwrap();
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn sqrt_rejects_non_positive() {
        let a = sym(0.0, &["-1"]);
        assert!(moyal_sqrt(&a, 2, &SqrtOptions::new(shell())).is_err());
    }
}
