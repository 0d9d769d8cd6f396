//! Jet-level normal form for the model operator `(D₀)_j = −i∂_{x_j} − x_j ∂_{y₁}`.
//!
//! Phase-space variables are ordered `(x_1..x_{d−1}, y_1..y_d, ξ_1..ξ_{d−1}, η_1..η_d)`.
//! Transverse jets `b_k^{(n)}` are exact polynomials ([`Poly`]) so that the
//! transport recursion can be checked term by term without rounding.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{factorial, parse_expr, Expr, Node};
use crate::quantize::{self, BandLimit, GridFunction};
use crate::symbols::FormalSymbol;
use crate::C64;

/// Half-width of Ω in every variable except `η₁` and `x_j`.
pub const OMEGA_EPS: f64 = 0.1;
/// `|η₁|` range of Ω.
pub const OMEGA_ETA: (f64, f64) = (0.25, 0.5);
/// Default sampling points per axis of Ω.
pub const OMEGA_POINTS: usize = 3;
/// Slack allowed on `C(b_k,k)/C(g_k,k) ≤ 1`.
pub const STABILITY_TOLERANCE: f64 = 1e-6;
/// Interior-mode residual accepted by [`commutator_check`].
pub const COMMUTATOR_TOLERANCE: f64 = 1e-8;
/// Gauss–Legendre nodes on the characteristic in [`solve_order0`].
pub const ORDER0_NODES: usize = 24;

const I: C64 = C64::new(0.0, 1.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

/// The model `D₀` in dimension `d ≥ 2`, with `d − 1` transverse variables `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModelOperator {
    d: usize,
}

impl ModelOperator {
    pub fn new(d: usize) -> Result<ModelOperator> {
        if d < 2 {
            return Err(Error::Invalid(format!(
                "model operator needs d ≥ 2, got {d}"
            )));
        }
        Ok(ModelOperator { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_vars(&self) -> usize {
        4 * self.d - 2
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, i: usize) -> usize {
        self.d - 1 + i
    }

    pub fn xi(&self, i: usize) -> usize {
        2 * self.d - 1 + i
    }

    pub fn eta(&self, i: usize) -> usize {
        3 * self.d - 2 + i
    }

    /// `x1.., y1.., xi1.., eta1..`, 1-based as in the S-expression input.
    pub fn names(&self) -> Vec<String> {
        let d = self.d;
        let mut out = Vec::with_capacity(self.n_vars());
        out.extend((1..d).map(|i| format!("x{i}")));
        out.extend((1..=d).map(|i| format!("y{i}")));
        out.extend((1..d).map(|i| format!("xi{i}")));
        out.extend((1..=d).map(|i| format!("eta{i}")));
        out
    }

    pub fn parse(&self, src: &str) -> Result<Expr> {
        let names = self.names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        parse_expr(src, &refs)
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j + 1 >= self.d {
            return Err(Error::Invalid(format!(
                "transverse index {j} out of range for d = {}",
                self.d
            )));
        }
        Ok(())
    }

    /// `σ(D₀)_j = ξ_j − i x_j η₁` (0-based `j`).
    pub fn symbol(&self, j: usize) -> Result<Expr> {
        self.check_j(j)?;
        let x_eta = Expr::var(self.x(j)).mul(&Expr::var(self.eta(0)));
        Ok(Expr::var(self.xi(j)).sub(&x_eta.scale(I)))
    }

    /// `x_j η₁ + i ξ_j = i·σ(D₀)_j`; same zero set as [`ModelOperator::symbol`].
    pub fn rotated_symbol(&self, j: usize) -> Result<Expr> {
        self.check_j(j)?;
        let x_eta = Expr::var(self.x(j)).mul(&Expr::var(self.eta(0)));
        Ok(x_eta.add(&Expr::var(self.xi(j)).scale(I)))
    }
}

/// Sparse polynomial with complex coefficients, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl Poly {
    pub fn zero(n_vars: usize) -> Poly {
        Poly {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: C64) -> Poly {
        Poly::monomial(vec![0; n_vars], c)
    }

    pub fn var(n_vars: usize, v: usize) -> Poly {
        let mut e = vec![0; n_vars];
        e[v] = 1;
        Poly::monomial(e, C64::new(1.0, 0.0))
    }

    pub fn monomial(exponents: Vec<u32>, c: C64) -> Poly {
        let mut p = Poly::zero(exponents.len());
        p.accumulate(exponents, c);
        p
    }

    fn accumulate(&mut self, e: Vec<u32>, c: C64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                if c != C64::new(0.0, 0.0) {
                    slot.insert(c);
                }
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if *slot.get() == C64::new(0.0, 0.0) {
                    slot.remove();
                }
            }
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.accumulate(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero(self.n_vars);
        for (e, c) in &self.terms {
            out.accumulate(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.n_vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.accumulate(e, c1 * c2);
            }
        }
        out
    }

    /// Multiplication by the variable `v`.
    pub fn mul_var(&self, v: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e = e.clone();
                e[v] += 1;
                (e, *c)
            })
            .collect();
        Poly {
            n_vars: self.n_vars,
            terms,
        }
    }

    pub fn diff(&self, v: usize) -> Poly {
        let mut out = Poly::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[v] > 0 {
                let mut e2 = e.clone();
                e2[v] -= 1;
                out.accumulate(e2, c * e[v] as f64);
            }
        }
        out
    }

    pub fn diff_multi(&self, alpha: &[u32]) -> Poly {
        let mut out = Poly::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e.iter().zip(alpha).any(|(a, b)| a < b) {
                continue;
            }
            let mut coeff = *c;
            for (&ei, &ai) in e.iter().zip(alpha) {
                coeff *= ((ei - ai + 1)..=ei).map(f64::from).product::<f64>();
            }
            out.accumulate(e.iter().zip(alpha).map(|(a, b)| a - b).collect(), coeff);
        }
        out
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(z)
                    .filter(|(k, _)| **k > 0)
                    .fold(*c, |acc, (&k, zi)| acc * zi.powu(k))
            })
            .sum()
    }

    /// Variables with a positive exponent in some term.
    pub fn vars(&self) -> Vec<usize> {
        (0..self.n_vars)
            .filter(|&v| self.terms.keys().any(|e| e[v] > 0))
            .collect()
    }

    /// Componentwise maximum exponent over all terms.
    pub fn max_exponents(&self) -> Vec<u32> {
        let mut out = vec![0; self.n_vars];
        for e in self.terms.keys() {
            for (o, &k) in out.iter_mut().zip(e) {
                *o = (*o).max(k);
            }
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(
            self.terms
                .iter()
                .map(|(e, c)| {
                    let mut f = vec![Expr::constant(*c)];
                    f.extend(
                        e.iter()
                            .enumerate()
                            .filter(|(_, k)| **k > 0)
                            .map(|(v, &k)| Expr::var(v).powi(k as i32)),
                    );
                    Expr::product(f)
                })
                .collect(),
        )
    }

    /// Exact conversion of a polynomial expression; anything else is rejected.
    pub fn from_expr(e: &Expr, n_vars: usize) -> Result<Poly> {
        match e.node() {
            Node::Var(i) if *i < n_vars => Ok(Poly::var(n_vars, *i)),
            Node::Var(i) => Err(Error::Invalid(format!(
                "variable {i} outside the {n_vars} model variables"
            ))),
            Node::Const(c) => Ok(if *c == C64::new(0.0, 0.0) {
                Poly::zero(n_vars)
            } else {
                Poly::constant(n_vars, *c)
            }),
            Node::Sum(xs) => xs.iter().try_fold(Poly::zero(n_vars), |acc, x| {
                Ok(acc.add(&Poly::from_expr(x, n_vars)?))
            }),
            Node::Product(xs) => xs
                .iter()
                .try_fold(Poly::constant(n_vars, C64::new(1.0, 0.0)), |acc, x| {
                    Ok(acc.mul(&Poly::from_expr(x, n_vars)?))
                }),
            Node::PowI(a, k) if *k >= 0 => {
                let base = Poly::from_expr(a, n_vars)?;
                Ok(
                    (0..*k).fold(Poly::constant(n_vars, C64::new(1.0, 0.0)), |acc, _| {
                        acc.mul(&base)
                    }),
                )
            }
            _ => Err(Error::Invalid("transverse jets must be polynomial".into())),
        }
    }
}

/// Transverse jets `b_k^{(n)}` at `x_j = 0`, `k ≤ K`, `n ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetSymbol {
    model: ModelOperator,
    j: usize,
    /// `coeffs[k][n]`, rectangular.
    coeffs: Vec<Vec<Poly>>,
}

impl JetSymbol {
    /// Checks shape, independence of `x_j`, and `b_k^{(0)} = 0`.
    pub fn new(model: ModelOperator, j: usize, coeffs: Vec<Vec<Poly>>) -> Result<JetSymbol> {
        model.check_j(j)?;
        let width = coeffs.first().map(Vec::len).unwrap_or(0);
        if width == 0 || coeffs.iter().any(|row| row.len() != width) {
            return Err(Error::Shape(
                "jet coefficients must form a nonempty rectangle".into(),
            ));
        }
        for (k, row) in coeffs.iter().enumerate() {
            if !row[0].is_zero() {
                return Err(Error::Invalid(format!("coefficient ({k}, 0) must vanish")));
            }
            for (n, p) in row.iter().enumerate() {
                if p.n_vars() != model.n_vars() {
                    return Err(Error::Shape(format!(
                        "coefficient ({k}, {n}) has wrong arity"
                    )));
                }
                if p.vars().contains(&model.x(j)) {
                    return Err(Error::Invalid(format!(
                        "coefficient ({k}, {n}) depends on the transverse variable"
                    )));
                }
            }
        }
        Ok(JetSymbol { model, j, coeffs })
    }

    pub fn zero(model: ModelOperator, j: usize, k_max: usize, n_max: usize) -> Result<JetSymbol> {
        let row = vec![Poly::zero(model.n_vars()); n_max + 1];
        JetSymbol::new(model, j, vec![row; k_max + 1])
    }

    /// Zero jet with the listed `(k, n, coefficient)` entries filled in.
    pub fn from_entries(
        model: ModelOperator,
        j: usize,
        k_max: usize,
        n_max: usize,
        entries: Vec<(usize, usize, Poly)>,
    ) -> Result<JetSymbol> {
        let mut coeffs = vec![vec![Poly::zero(model.n_vars()); n_max + 1]; k_max + 1];
        for (k, n, p) in entries {
            if k > k_max || n > n_max {
                return Err(Error::Shape(format!(
                    "entry ({k}, {n}) outside {k_max}×{n_max}"
                )));
            }
            coeffs[k][n] = p;
        }
        JetSymbol::new(model, j, coeffs)
    }

    /// Entries given as S-expressions in [`ModelOperator::names`].
    pub fn parse_entries(
        model: ModelOperator,
        j: usize,
        k_max: usize,
        n_max: usize,
        entries: &[(usize, usize, &str)],
    ) -> Result<JetSymbol> {
        let parsed = entries
            .iter()
            .map(|&(k, n, src)| Ok((k, n, Poly::from_expr(&model.parse(src)?, model.n_vars())?)))
            .collect::<Result<Vec<_>>>()?;
        JetSymbol::from_entries(model, j, k_max, n_max, parsed)
    }

    pub fn model(&self) -> ModelOperator {
        self.model
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn n_max(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    /// `b_k^{(n)}`, zero outside the stored range.
    pub fn coeff(&self, k: usize, n: usize) -> Poly {
        self.coeffs
            .get(k)
            .and_then(|row| row.get(n))
            .cloned()
            .unwrap_or_else(|| Poly::zero(self.model.n_vars()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(Poly::is_zero)
    }
}

/// `b_k^{(0)} = 0`, `b_k^{(n+1)} = −i(g_k^{(n)} + η₁∂_{ξ_j}b_k^{(n)} − n∂_{y₁}b_k^{(n−1)})` for `n ≤ N`.
pub fn transport_recursion(g: &JetSymbol, k_max: usize, n_max: usize) -> JetSymbol {
    let model = g.model;
    let (xi, y1, eta1) = (model.xi(g.j), model.y(0), model.eta(0));
    let nv = model.n_vars();
    let coeffs = (0..=k_max)
        .map(|k| {
            let mut b = vec![Poly::zero(nv)];
            for n in 0..=n_max {
                let mut rhs = g.coeff(k, n).add(&b[n].diff(xi).mul_var(eta1));
                if n >= 1 {
                    rhs = rhs.sub(&b[n - 1].diff(y1).scale(C64::new(n as f64, 0.0)));
                }
                b.push(rhs.scale(MINUS_I));
            }
            b
        })
        .collect();
    JetSymbol {
        model,
        j: g.j,
        coeffs,
    }
}

/// Substitution of a recursion output back into the transport equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportCheck {
    pub k_max: usize,
    pub n_max: usize,
    /// Every residual polynomial is identically zero.
    pub symbolic_zero: bool,
    pub max_coeff_residual: f64,
    /// Same residual through expression differentiation on the Ω grid, relative to the term sizes.
    pub max_sampled_residual: f64,
    pub sample_points: usize,
}

/// Residuals `i b_k^{(n+1)} − η₁∂_{ξ_j}b_k^{(n)} + n∂_{y₁}b_k^{(n−1)} − g_k^{(n)}` for `n < b.n_max()`.
pub fn transport_residuals(
    g: &JetSymbol,
    b: &JetSymbol,
    params: &JsParams,
) -> Result<TransportCheck> {
    if g.model != b.model || g.j != b.j {
        return Err(Error::Shape("g and b live on different models".into()));
    }
    let model = b.model;
    let (xi, y1, eta1) = (model.xi(b.j), model.y(0), model.eta(0));
    let nv = model.n_vars();
    let grid = omega_grid(model, b.j, &(0..nv).collect::<Vec<_>>(), params)?;
    let mut symbolic_zero = true;
    let mut max_coeff: f64 = 0.0;
    let mut max_sampled: f64 = 0.0;
    for k in 0..=b.k_max() {
        for n in 0..b.n_max() {
            let prev = if n >= 1 {
                b.coeff(k, n - 1)
            } else {
                Poly::zero(nv)
            };
            let res = b
                .coeff(k, n + 1)
                .scale(I)
                .sub(&b.coeff(k, n).diff(xi).mul_var(eta1))
                .add(&prev.diff(y1).scale(C64::new(n as f64, 0.0)))
                .sub(&g.coeff(k, n));
            symbolic_zero &= res.is_zero();
            max_coeff = max_coeff.max(res.max_coeff());

            let t1 = b.coeff(k, n + 1).to_expr().scale(I);
            let t2 = Expr::var(eta1).mul(&b.coeff(k, n).to_expr().diff(xi));
            let t3 = prev.to_expr().diff(y1).scale(C64::new(n as f64, 0.0));
            let t4 = g.coeff(k, n).to_expr();
            for z in &grid {
                let v = [t1.eval(z)?, t2.eval(z)?, t3.eval(z)?, t4.eval(z)?];
                let size = v.iter().map(|c| c.norm()).sum::<f64>().max(1.0);
                let r = (v[0] - v[1] + v[2] - v[3]).norm() / size;
                max_sampled = max_sampled.max(r);
            }
        }
    }
    Ok(TransportCheck {
        k_max: b.k_max(),
        n_max: b.n_max(),
        symbolic_zero,
        max_coeff_residual: max_coeff,
        max_sampled_residual: max_sampled,
        sample_points: grid.len(),
    })
}

/// Weights `(ρ, R, m)` of the jet norm and the sampling of Ω.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JsParams {
    pub rho: f64,
    pub r: f64,
    pub m: f64,
    pub eps: f64,
    pub points_per_axis: usize,
}

impl JsParams {
    pub fn new(rho: f64, r: f64, m: f64) -> JsParams {
        JsParams {
            rho,
            r,
            m,
            eps: OMEGA_EPS,
            points_per_axis: OMEGA_POINTS,
        }
    }

    /// `ρ = 6(3/2)^m`, rounded up, with `R = 2^{d+1}ρ`.
    pub fn at_threshold(m: f64, d: usize) -> JsParams {
        let rho = stability_threshold(m).ceil();
        JsParams::new(rho, 2f64.powi(d as i32 + 1) * rho, m)
    }

    /// Whether `ρ ≥ 6(3/2)^m`.
    pub fn meets_threshold(&self) -> bool {
        self.rho >= stability_threshold(self.m)
    }
}

/// `6(3/2)^m`.
pub fn stability_threshold(m: f64) -> f64 {
    6.0 * 1.5f64.powf(m)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Points of Ω varying only the listed variables; all others, and `x_j`, are 0.
fn omega_grid(
    model: ModelOperator,
    j: usize,
    vars: &[usize],
    p: &JsParams,
) -> Result<Vec<Vec<C64>>> {
    if p.points_per_axis == 0 {
        return Err(Error::Invalid("empty Ω grid".into()));
    }
    let axes: Vec<(usize, Vec<f64>)> = vars
        .iter()
        .filter(|&&v| v != model.x(j))
        .map(|&v| {
            let values = if v == model.eta(0) {
                let pos = linspace(OMEGA_ETA.0, OMEGA_ETA.1, p.points_per_axis);
                pos.iter().map(|x| -x).chain(pos.iter().copied()).collect()
            } else {
                linspace(-p.eps, p.eps, p.points_per_axis)
            };
            (v, values)
        })
        .collect();
    let mut base = vec![C64::new(0.0, 0.0); model.n_vars()];
    if !vars.contains(&model.eta(0)) {
        base[model.eta(0)] = C64::new(OMEGA_ETA.1, 0.0);
    }
    let mut points = vec![base];
    for (v, values) in &axes {
        points = points
            .iter()
            .flat_map(|pt| {
                values.iter().map(move |&x| {
                    let mut q = pt.clone();
                    q[*v] = C64::new(x, 0.0);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Multi-indices `α ≤ e` componentwise, for `e` the maximum exponents.
fn derivative_box(max: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &m in max {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..=m).map(move |k| {
                    let mut b = a.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    out
}

/// Per-`k` constants `C(b_k,k) = sup |∇^α b_k^{(n)}|(1+n+|α|+k)^m / (ρ^{n+|α|} R^k (n+|α|+k)!)`.
///
/// The sup runs over the Ω grid, every stored `n` and every multi-index in
/// the variables other than `x_j`; derivatives beyond the polynomial degree
/// vanish, so the `α` range is exhaustive.
pub fn js_constants(b: &JetSymbol, p: &JsParams) -> Result<Vec<f64>> {
    let model = b.model;
    omega_grid(model, b.j, &[], p)?;
    (0..=b.k_max())
        .map(|k| {
            let mut best: f64 = 0.0;
            for n in 0..=b.n_max() {
                let poly = &b.coeffs[k][n];
                if poly.is_zero() {
                    continue;
                }
                for alpha in derivative_box(&poly.max_exponents()) {
                    let q = poly.diff_multi(&alpha);
                    if q.is_zero() {
                        continue;
                    }
                    let grid = omega_grid(model, b.j, &q.vars(), p)?;
                    let sup = grid.iter().map(|z| q.eval(z).norm()).fold(0.0, f64::max);
                    let order = n + alpha.iter().sum::<u32>() as usize;
                    let weight = (1.0 + (order + k) as f64).powf(p.m)
                        / (p.rho.powi(order as i32) * p.r.powi(k as i32) * factorial(order + k));
                    best = best.max(sup * weight);
                }
            }
            Ok(best)
        })
        .collect()
}

/// `sup_k C(b_k,k)`.
pub fn js_norm(b: &JetSymbol, p: &JsParams) -> Result<f64> {
    Ok(js_constants(b, p)?.into_iter().fold(0.0, f64::max))
}

/// Random integer-coefficient jets with factorial growth `(n+k)!` and `g_k^{(0)} = 0`.
///
/// Each `g_k^{(n)}` has one to three monomials of total degree at most three
/// in the variables other than `x_j`; integer coefficients keep the
/// recursion exact in floating point.
pub fn random_corpus(
    model: ModelOperator,
    j: usize,
    seed: u64,
    k_max: usize,
    n_max: usize,
) -> Result<JetSymbol> {
    model.check_j(j)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = model.n_vars();
    let free: Vec<usize> = (0..nv).filter(|&v| v != model.x(j)).collect();
    let mut entries = Vec::new();
    for k in 0..=k_max {
        for n in 1..=n_max {
            let mut p = Poly::zero(nv);
            for _ in 0..rng.random_range(1..=3) {
                let mut e = vec![0u32; nv];
                for _ in 0..rng.random_range(0..=3) {
                    e[free[rng.random_range(0..free.len())]] += 1;
                }
                let (re, im) = loop {
                    let re: i32 = rng.random_range(-9..=9);
                    let im: i32 = rng.random_range(-9..=9);
                    if re != 0 || im != 0 {
                        break (re, im);
                    }
                };
                let growth = factorial(n + k);
                p = p.add(&Poly::monomial(e, C64::new(re as f64, im as f64) * growth));
            }
            entries.push((k, n, p));
        }
    }
    JetSymbol::from_entries(model, j, k_max, n_max, entries)
}

/// One `(corpus entry, parameters, k)` row of a stability sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub corpus: usize,
    pub rho: f64,
    pub r: f64,
    pub m: f64,
    pub k: usize,
    pub c_g: f64,
    pub c_b: f64,
    /// `None` when both constants vanish.
    pub ratio: Option<f64>,
    /// Whether `ρ ≥ 6(3/2)^m`, so that the bound is asserted.
    pub asserted: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Largest ratio over asserted rows; 0 if none are finite.
    pub max_asserted_ratio: f64,
    pub max_ratio: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `C(b_k,k)/C(g_k,k)` for `b` the recursion output of each corpus entry.
pub fn stability_sweep(corpus: &[JetSymbol], params: &[JsParams]) -> Result<StabilityReport> {
    let jobs: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|c| (0..params.len()).map(move |p| (c, p)))
        .collect();
    let blocks = jobs
        .par_iter()
        .map(|&(c, pi)| {
            let g = &corpus[c];
            let p = &params[pi];
            let b = transport_recursion(g, g.k_max(), g.n_max());
            let cg = js_constants(g, p)?;
            let cb = js_constants(&b, p)?;
            let asserted = p.meets_threshold();
            Ok(cg
                .iter()
                .zip(&cb)
                .enumerate()
                .map(|(k, (&c_g, &c_b))| {
                    let ratio = if c_g == 0.0 && c_b == 0.0 {
                        None
                    } else {
                        Some(c_b / c_g)
                    };
                    let ok = ratio.is_none_or(|r| r <= 1.0 + STABILITY_TOLERANCE);
                    StabilityRow {
                        corpus: c,
                        rho: p.rho,
                        r: p.r,
                        m: p.m,
                        k,
                        c_g,
                        c_b,
                        ratio,
                        asserted,
                        pass: !asserted || ok,
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<StabilityRow> = blocks.into_iter().flatten().collect();
    let ratio_max = |asserted_only: bool| {
        rows.iter()
            .filter(|r| r.asserted || !asserted_only)
            .filter_map(|r| r.ratio)
            .fold(0.0, f64::max)
    };
    Ok(StabilityReport {
        max_asserted_ratio: ratio_max(true),
        max_ratio: ratio_max(false),
        tolerance: STABILITY_TOLERANCE,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

/// Order-0 conjugation factor `a = exp(Φ)` solving
/// `∂_{x_j}a + i x_j∂_{y₁}a − iη₁∂_{ξ_j}a = i r0 a` with `a = 1` on `x_j = 0`.
#[derive(Clone, Debug)]
pub struct Order0 {
    pub model: ModelOperator,
    pub j: usize,
    pub r0: Expr,
    /// `i x_j Σ_q w_q r0(γ(x_j τ_q))`, γ the characteristic through the evaluation point.
    pub phase: Expr,
    pub amplitude: Expr,
    pub nodes: usize,
    residual: Expr,
}

impl Order0 {
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        self.amplitude.eval(z)
    }

    /// `|PDE residual| / |a|` at `z`, by symbolic differentiation of the quadrature.
    pub fn residual_at(&self, z: &[C64]) -> Result<f64> {
        let a = self.amplitude.eval(z)?;
        Ok(self.residual.eval(z)?.norm() / a.norm())
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Builds `a_j⁰` by Gauss quadrature along the complex characteristic
/// `s ↦ (x_j = s, y₁ − i(x_j² − s²)/2, ξ_j + iη₁(x_j − s))`, `s ∈ [0, x_j]`.
pub fn solve_order0(model: ModelOperator, r0: &Expr, j: usize, nodes: usize) -> Result<Order0> {
    model.check_j(j)?;
    let nv = model.n_vars();
    if let Some(&v) = r0.collect_vars().iter().find(|&&v| v >= nv) {
        return Err(Error::Invalid(format!(
            "r0 uses variable {v} outside the model"
        )));
    }
    if nodes == 0 {
        return Err(Error::Invalid("quadrature needs at least one node".into()));
    }
    let (xj, y1, xi, eta1) = (model.x(j), model.y(0), model.xi(j), model.eta(0));
    let x = Expr::var(xj);
    let x2 = x.powi(2);
    let (tau, w) = gauss_legendre(nodes);
    let terms = tau
        .iter()
        .zip(&w)
        .map(|(&t, &wq)| {
            let mut subs: Vec<Expr> = (0..nv).map(Expr::var).collect();
            subs[xj] = x.scale(C64::new(t, 0.0));
            subs[y1] = Expr::var(y1).add(&x2.scale(C64::new(0.0, -0.5 * (1.0 - t * t))));
            subs[xi] = Expr::var(xi).add(&x.mul(&Expr::var(eta1)).scale(C64::new(0.0, 1.0 - t)));
            r0.subst(&subs).scale(C64::new(wq, 0.0))
        })
        .collect();
    let phase = x.mul(&Expr::sum(terms)).scale(I);
    let amplitude = phase.exp();
    let residual = Expr::sum(vec![
        amplitude.diff(xj),
        x.mul(&amplitude.diff(y1)).scale(I),
        Expr::var(eta1).mul(&amplitude.diff(xi)).scale(MINUS_I),
        r0.mul(&amplitude).scale(MINUS_I),
    ]);
    Ok(Order0 {
        model,
        j,
        r0: r0.clone(),
        phase,
        amplitude,
        nodes,
        residual,
    })
}

/// Sup of [`Order0::residual_at`] over real points with every coordinate in `[−h, h]`,
/// except `η₁ ∈ ±[1/4, 1/2]`.
pub fn order0_residual(a: &Order0, h: f64, per_axis: usize) -> Result<f64> {
    let p = JsParams {
        rho: 1.0,
        r: 1.0,
        m: 0.0,
        eps: h,
        points_per_axis: per_axis,
    };
    // the Ω grid pins x_j = 0, so x_j is swept separately
    let model = a.model;
    let mut vars = a.r0.collect_vars();
    for v in [model.x(a.j), model.y(0), model.xi(a.j), model.eta(0)] {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let base = omega_grid(model, a.j, &vars, &p)?;
    let xs = linspace(-h, h, per_axis.max(2));
    let mut worst: f64 = 0.0;
    for z in &base {
        for &x in &xs {
            let mut q = z.clone();
            q[model.x(a.j)] = C64::new(x, 0.0);
            worst = worst.max(a.residual_at(&q)?);
        }
    }
    Ok(worst)
}

/// Variable names of the two-variable commutator model.
pub const COMMUTATOR_NAMES: [&str; 4] = ["x", "y", "xi", "eta"];

/// Grid, band and `η` fibres of the commutator oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorParams {
    pub period: f64,
    pub grid: usize,
    pub band: usize,
    pub etas: Vec<f64>,
}

impl Default for CommutatorParams {
    fn default() -> Self {
        CommutatorParams {
            period: 2.0 * std::f64::consts::PI,
            grid: 256,
            band: 100,
            etas: vec![-0.5, -0.25, 0.25, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub symbol: String,
    /// `−i∂_x b − x∂_y b + η∂_ξ b`.
    pub expected: String,
    pub etas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `[Op(ξ − ixη), Op(b)]` with `Op(−i∂_x b − x∂_y b + η∂_ξ b)` on wave packets.
///
/// `b` is an expression in [`COMMUTATOR_NAMES`]. A `y`-independent symbol
/// commutes with translations in `y`, so each Fourier mode `e^{iyη}` is an
/// invariant fibre on which both sides are one-dimensional operators in `x`.
pub fn commutator_check(b: &Expr, params: &CommutatorParams) -> Result<CommutatorReport> {
    if let Some(&v) = b.collect_vars().iter().find(|&&v| v >= 4) {
        return Err(Error::Invalid(format!(
            "symbol uses variable {v} outside (x, y, xi, eta)"
        )));
    }
    if b.depends_on(1) {
        return Err(Error::Invalid(
            "the fibred commutator model needs b independent of y".into(),
        ));
    }
    let band = BandLimit::new(params.band)?;
    let (x, xi, eta) = (Expr::var(0), Expr::var(2), Expr::var(3));
    let d0 = xi.sub(&x.mul(&eta).scale(I));
    let expected = Expr::sum(vec![
        b.diff(0).scale(MINUS_I),
        x.mul(&b.diff(1)).neg(),
        eta.mul(&b.diff(2)),
    ]);
    let interior = (band.f / 2) as i64;
    let residuals = params
        .etas
        .iter()
        .map(|&e| {
            let fibre = |s: &Expr| -> Result<FormalSymbol> {
                let subs = [Expr::var(0), Expr::zero(), Expr::var(1), Expr::real(e)];
                FormalSymbol::new(1, 0.0, vec![s.subst(&subs)])
            };
            let mat = |s: &Expr| {
                quantize::commutator_matrix(&fibre(s)?, params.period, params.grid, band)
            };
            let comm = mat(&d0)?.commutator(&mat(b)?)?;
            let target = mat(&expected)?;
            let mut worst: f64 = 0.0;
            for carrier in [-(interior / 4), 0, interior / 8, interior / 4] {
                let u: GridFunction = quantize::wave_packet(
                    params.period,
                    params.grid,
                    quantize::PACKET_SHARPNESS,
                    carrier,
                )?;
                let v = quantize::mode_vector(&u, band);
                let lhs = comm.apply(&v)?;
                let rhs = target.apply(&v)?;
                let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                for (g, (l, r)) in band.modes().zip(lhs.iter().zip(&rhs)) {
                    if g.abs() <= interior {
                        worst = worst.max((l - r).norm() / scale);
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(CommutatorReport {
        symbol: b.to_sexpr(&COMMUTATOR_NAMES),
        expected: expected.to_sexpr(&COMMUTATOR_NAMES),
        etas: params.etas.clone(),
        residuals,
        max_residual,
        tolerance: COMMUTATOR_TOLERANCE,
        pass: max_residual <= COMMUTATOR_TOLERANCE,
    })
}

/// Symbols exercised by the commutator check: `1, x, ξ, xξ, ξ², x²η`.
pub fn commutator_corpus() -> Vec<Expr> {
    let (x, xi, eta) = (Expr::var(0), Expr::var(2), Expr::var(3));
    vec![
        Expr::one(),
        x.clone(),
        xi.clone(),
        x.mul(&xi),
        xi.powi(2),
        x.powi(2).mul(&eta),
    ]
}

/// Variables that occur in some coefficient of `b`.
pub fn active_vars(b: &JetSymbol) -> BTreeSet<usize> {
    b.coeffs.iter().flatten().flat_map(|p| p.vars()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model2() -> ModelOperator {
        ModelOperator::new(2).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn variable_layout_d2() {
        let m = model2();
        assert_eq!(m.n_vars(), 6);
        assert_eq!(m.names(), ["x1", "y1", "y2", "xi1", "eta1", "eta2"]);
        assert_eq!((m.x(0), m.y(0), m.xi(0), m.eta(0)), (0, 1, 3, 4));
    }

    #[test]
    fn symbol_zero_set_and_rotation() {
        let m = model2();
        let s = m.symbol(0).unwrap();
        let r = m.rotated_symbol(0).unwrap();
        let mut z = vec![c(0.0, 0.0); 6];
        z[m.eta(0)] = c(0.4, 0.0);
        assert_eq!(s.eval(&z).unwrap(), c(0.0, 0.0));
        z[m.x(0)] = c(0.2, 0.0);
        z[m.xi(0)] = c(-0.3, 0.0);
        let (sv, rv) = (s.eval(&z).unwrap(), r.eval(&z).unwrap());
        assert!((rv - I * sv).norm() < 1e-15);
        assert!(sv.norm() > 0.1);
        assert!(m.symbol(1).is_err());
    }

    #[test]
    fn poly_round_trip_and_derivatives() {
        let m = model2();
        let e = m.parse("(+ (* 3 y1 (^ xi1 2)) (* 2 eta1) 5)").unwrap();
        let p = Poly::from_expr(&e, 6).unwrap();
        let z: Vec<C64> = (0..6)
            .map(|i| c(0.1 * i as f64 + 0.05, -0.02 * i as f64))
            .collect();
        assert!((p.eval(&z) - e.eval(&z).unwrap()).norm() < 1e-14);
        assert!((p.to_expr().eval(&z).unwrap() - e.eval(&z).unwrap()).norm() < 1e-14);
        let d = p.diff_multi(&[0, 1, 0, 2, 0, 0]);
        assert_eq!(d, Poly::constant(6, c(6.0, 0.0)));
        assert!(Poly::from_expr(&e.exp(), 6).is_err());
    }

    #[test]
    fn poly_cancellation_removes_terms() {
        let p = Poly::var(6, 2).add(&Poly::constant(6, c(1.0, 0.0)));
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn recursion_of_zero_is_zero() {
        let g = JetSymbol::zero(model2(), 0, 2, 4).unwrap();
        assert!(transport_recursion(&g, 2, 4).is_zero());
    }

    #[test]
    fn recursion_constant_source() {
        let g = JetSymbol::parse_entries(model2(), 0, 1, 1, &[(1, 1, "1")]).unwrap();
        let b = transport_recursion(&g, 1, 1);
        assert_eq!(b.n_max(), 2);
        assert_eq!(b.coeff(1, 2), Poly::constant(6, c(0.0, -1.0)));
        for (k, n) in [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)] {
            assert!(b.coeff(k, n).is_zero(), "({k}, {n})");
        }
    }

    #[test]
    fn recursion_linear_source() {
        let m = model2();
        let g = JetSymbol::parse_entries(m, 0, 1, 2, &[(1, 1, "xi1")]).unwrap();
        let b = transport_recursion(&g, 1, 2);
        assert_eq!(b.coeff(1, 2), Poly::var(6, m.xi(0)).scale(c(0.0, -1.0)));
        assert_eq!(b.coeff(1, 3), Poly::var(6, m.eta(0)).scale(c(-1.0, 0.0)));
        let check = transport_residuals(&g, &b, &JsParams::new(12.0, 96.0, 8.0)).unwrap();
        assert!(check.symbolic_zero);
        assert!(check.max_sampled_residual <= 1e-12);
    }

    #[test]
    fn jet_symbols_reject_bad_input() {
        let m = model2();
        assert!(JetSymbol::parse_entries(m, 0, 0, 1, &[(0, 0, "1")]).is_err());
        assert!(JetSymbol::parse_entries(m, 0, 0, 1, &[(0, 1, "x1")]).is_err());
        assert!(JetSymbol::parse_entries(m, 0, 0, 1, &[(0, 1, "(exp y1)")]).is_err());
        assert!(JetSymbol::parse_entries(m, 0, 0, 1, &[(2, 1, "1")]).is_err());
    }

    #[test]
    fn norm_of_zero_and_unit() {
        let m = model2();
        let p = JsParams::new(1.0, 1.0, 0.0);
        assert_eq!(
            js_norm(&JetSymbol::zero(m, 0, 1, 2).unwrap(), &p).unwrap(),
            0.0
        );
        let one = JetSymbol::parse_entries(m, 0, 0, 1, &[(0, 1, "1")]).unwrap();
        assert!((js_norm(&one, &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_of_linear_example_by_hand() {
        // g_1^(1) = ξ: sup over α of 0.1·3^m/(ρR·2!) and 4^m/(ρ²R·3!).
        let m = model2();
        let p = JsParams::new(12.0, 96.0, 8.0);
        let g = JetSymbol::parse_entries(m, 0, 1, 2, &[(1, 1, "xi1")]).unwrap();
        let cg = js_constants(&g, &p).unwrap();
        let want =
            (0.1 * 3f64.powi(8) / (12.0 * 96.0 * 2.0)).max(4f64.powi(8) / (144.0 * 96.0 * 6.0));
        assert_eq!(cg[0], 0.0);
        assert!((cg[1] - want).abs() < 1e-14 * want);
        let b = transport_recursion(&g, 1, 2);
        let cb = js_constants(&b, &p).unwrap();
        assert!(cb[1].is_finite() && cb[1] > 0.0);
        assert!(cb[1] <= cg[1]);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let g = JetSymbol::zero(model2(), 0, 0, 1).unwrap();
        let mut p = JsParams::new(1.0, 1.0, 0.0);
        p.points_per_axis = 0;
        assert!(js_norm(&g, &p).is_err());
    }

    #[test]
    fn random_corpus_recursion_is_exact() {
        let m = model2();
        let g = random_corpus(m, 0, 7, 3, 6).unwrap();
        assert_eq!(g.coeff(2, 0), Poly::zero(6));
        assert!(!active_vars(&g).contains(&m.x(0)));
        let b = transport_recursion(&g, 3, 6);
        let check = transport_residuals(&g, &b, &JsParams::new(1.0, 1.0, 0.0)).unwrap();
        assert!(check.symbolic_zero);
        assert!(
            check.max_sampled_residual <= 1e-12,
            "{}",
            check.max_sampled_residual
        );
    }

    #[test]
    fn random_corpus_is_seeded() {
        let m = model2();
        assert_eq!(
            random_corpus(m, 0, 3, 2, 3).unwrap(),
            random_corpus(m, 0, 3, 2, 3).unwrap()
        );
        assert_ne!(
            random_corpus(m, 0, 3, 2, 3).unwrap(),
            random_corpus(m, 0, 4, 2, 3).unwrap()
        );
    }

    #[test]
    fn stability_above_threshold() {
        let m = model2();
        let corpus: Vec<JetSymbol> = (0..4)
            .map(|s| random_corpus(m, 0, s, 3, 6).unwrap())
            .collect();
        let p = JsParams::at_threshold(8.0, 2);
        assert!(p.meets_threshold());
        let rep = stability_sweep(&corpus, &[p]).unwrap();
        assert!(rep.pass, "max ratio {}", rep.max_asserted_ratio);
        assert!(rep.max_asserted_ratio <= 1.0 + STABILITY_TOLERANCE);
    }

    #[test]
    fn stability_zero_is_vacuous() {
        let g = JetSymbol::zero(model2(), 0, 1, 2).unwrap();
        let rep = stability_sweep(&[g], &[JsParams::at_threshold(4.0, 2)]).unwrap();
        assert!(rep.rows.iter().all(|r| r.ratio.is_none() && r.pass));
    }

    #[test]
    fn below_threshold_rows_are_not_asserted() {
        let g = random_corpus(model2(), 0, 1, 1, 3).unwrap();
        let rep = stability_sweep(&[g], &[JsParams::new(1.0, 8.0, 8.0)]).unwrap();
        assert!(rep.rows.iter().all(|r| !r.asserted && r.pass));
        assert!(rep.max_ratio > 1.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        assert!((s - 1.0 / 20.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order0_trivial_cases() {
        let m = model2();
        let a = solve_order0(m, &Expr::zero(), 0, 8).unwrap();
        let z = [
            c(0.3, 0.0),
            c(0.1, 0.0),
            c(0.0, 0.0),
            c(0.2, 0.0),
            c(0.4, 0.0),
            c(0.0, 0.0),
        ];
        assert!((a.eval(&z).unwrap() - 1.0).norm() < 1e-15);
        let a = solve_order0(m, &Expr::real(0.7), 0, 8).unwrap();
        assert!((a.eval(&z).unwrap() - C64::from_polar(1.0, 0.7 * 0.3)).norm() < 1e-14);
    }

    #[test]
    fn order0_eta_source() {
        let m = model2();
        let a = solve_order0(m, &Expr::var(m.eta(0)), 0, ORDER0_NODES).unwrap();
        let z = [
            c(0.3, 0.0),
            c(0.1, 0.0),
            c(-0.05, 0.0),
            c(0.2, 0.0),
            c(-0.4, 0.0),
            c(0.0, 0.0),
        ];
        assert!((a.eval(&z).unwrap() - C64::from_polar(1.0, -0.4 * 0.3)).norm() < 1e-14);
        assert!(order0_residual(&a, 0.1, 3).unwrap() <= 1e-9);
    }

    #[test]
    fn order0_residual_for_analytic_sources() {
        let m = model2();
        for src in [
            "(+ y1 (* xi1 xi1) (* x1 eta1))",
            "(* (exp y1) (cos xi1))",
            "(/ 1 (+ 2 (* x1 xi1) y2))",
        ] {
            let r0 = m.parse(src).unwrap();
            let a = solve_order0(m, &r0, 0, ORDER0_NODES).unwrap();
            let res = order0_residual(&a, 0.1, 3).unwrap();
            assert!(res <= 1e-9, "{src}: {res}");
        }
    }

    #[test]
    fn order0_rejects_foreign_variables() {
        assert!(solve_order0(model2(), &Expr::var(9), 0, 4).is_err());
    }

    #[test]
    fn commutator_identity_on_corpus() {
        let p = CommutatorParams::default();
        for b in commutator_corpus() {
            let rep = commutator_check(&b, &p).unwrap();
            assert!(rep.pass, "{}: {}", rep.symbol, rep.max_residual);
        }
    }

    #[test]
    fn commutator_with_x_is_minus_i() {
        let rep = commutator_check(&Expr::var(0), &CommutatorParams::default()).unwrap();
        assert_eq!(
            rep.expected,
            Expr::constant(MINUS_I).to_sexpr(&COMMUTATOR_NAMES)
        );
    }

    #[test]
    fn commutator_detects_a_wrong_symbol_side() {
        // dropping the η∂_ξ term must show up for b = ξ
        let p = CommutatorParams::default();
        let b = Expr::var(2);
        let band = BandLimit::new(p.band).unwrap();
        let fib = |e: f64, s: &Expr| {
            let subs = [Expr::var(0), Expr::zero(), Expr::var(1), Expr::real(e)];
            quantize::commutator_matrix(
                &FormalSymbol::new(1, 0.0, vec![s.subst(&subs)]).unwrap(),
                p.period,
                p.grid,
                band,
            )
            .unwrap()
        };
        let d0 = Expr::var(2).sub(&Expr::var(0).mul(&Expr::var(3)).scale(I));
        let comm = fib(0.5, &d0).commutator(&fib(0.5, &b)).unwrap();
        let u = quantize::wave_packet(p.period, p.grid, quantize::PACKET_SHARPNESS, 0).unwrap();
        let v = quantize::mode_vector(&u, band);
        let w = comm.apply(&v).unwrap();
        let mid = band.f;
        assert!((w[mid] - 0.5 * v[mid]).norm() < 1e-10 * v[mid].norm().max(1.0));
        assert!(commutator_check(&b, &p).unwrap().pass);
    }

    #[test]
    fn commutator_rejects_y_dependence_and_wide_band() {
        assert!(commutator_check(&Expr::var(1), &CommutatorParams::default()).is_err());
        let p = CommutatorParams {
            band: 200,
            ..CommutatorParams::default()
        };
        assert!(commutator_check(&Expr::var(0), &p).is_err());
    }
}
