//! Formal analytic symbols, the sampled `S^{ρ,R}_m` norm and the Moyal algebra.
//!
//! A symbol in base dimension `d` is a finite sequence `a_0..a_K` of
//! expressions in the variables `x_1..x_d` (indices `0..d`) and
//! `ξ_1..ξ_d` (indices `d..2d`); amplitudes additionally carry
//! `y_1..y_{dy}` at indices `2d..2d+dy`. Coefficients past `K` are zero.

mod banach;
mod moyal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{factorial, multi_factorial, parse_expr_list, Expr};
use crate::C64;

pub use banach::{
    admissible_r, banach_bound_check, banach_corpus, banach_sample_box, BanachCheck,
    ALGEBRA_CONSTANT, M0_DIM1,
};
pub use moyal::{
    adjoint_symbol, adjoint_symbol_to, left_total_symbol, moyal_product, moyal_sqrt,
    neumann_invert, SqrtOptions, KAPPA, MAX_ORDER,
};

/// Finite sequence of homogeneous coefficients `a_k` of degree `degree − k` in ξ.
#[derive(Clone, Debug)]
pub struct FormalSymbol {
    d: usize,
    y_dim: usize,
    degree: f64,
    coeffs: Vec<Expr>,
}

impl FormalSymbol {
    pub fn new(d: usize, degree: f64, coeffs: Vec<Expr>) -> Result<FormalSymbol> {
        FormalSymbol::with_y(d, 0, degree, coeffs)
    }

    /// Amplitude in `(x, ξ, y)` with `y ∈ ℝ^{y_dim}`.
    pub fn with_y(d: usize, y_dim: usize, degree: f64, coeffs: Vec<Expr>) -> Result<FormalSymbol> {
        if d == 0 {
            return Err(Error::Invalid("symbol dimension must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::Invalid(
                "symbol needs at least one coefficient".into(),
            ));
        }
        let nvars = 2 * d + y_dim;
        for (k, c) in coeffs.iter().enumerate() {
            if let Some(&v) = c.collect_vars().iter().find(|&&v| v >= nvars) {
                return Err(Error::Invalid(format!(
                    "coefficient {k} uses variable {v}, only {nvars} declared"
                )));
            }
        }
        Ok(FormalSymbol {
            d,
            y_dim,
            degree,
            coeffs,
        })
    }

    pub fn unit(d: usize) -> FormalSymbol {
        FormalSymbol::constant(d, C64::new(1.0, 0.0))
    }

    pub fn constant(d: usize, c: C64) -> FormalSymbol {
        FormalSymbol {
            d,
            y_dim: 0,
            degree: 0.0,
            coeffs: vec![Expr::constant(c)],
        }
    }

    pub fn zero(d: usize) -> FormalSymbol {
        FormalSymbol::constant(d, C64::new(0.0, 0.0))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// `a_k`, zero past the truncation order.
    pub fn coeff(&self, k: usize) -> Expr {
        self.coeffs.get(k).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn num_vars(&self) -> usize {
        2 * self.d + self.y_dim
    }

    pub fn x_var(&self, i: usize) -> usize {
        i
    }

    pub fn xi_var(&self, i: usize) -> usize {
        self.d + i
    }

    pub fn y_var(&self, i: usize) -> usize {
        2 * self.d + i
    }

    /// Keeps `a_0..a_K`, padding with zeros.
    pub fn truncate(&self, k: usize) -> FormalSymbol {
        let coeffs = (0..=k).map(|j| self.coeff(j)).collect();
        FormalSymbol {
            coeffs,
            ..self.clone()
        }
    }

    /// Drops trailing structurally zero coefficients (keeps at least one).
    pub fn trimmed(&self) -> FormalSymbol {
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        FormalSymbol {
            coeffs,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: C64) -> FormalSymbol {
        FormalSymbol {
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
            ..self.clone()
        }
    }

    /// Termwise sum; the degree of `self` is kept.
    pub fn add(&self, other: &FormalSymbol) -> Result<FormalSymbol> {
        self.check_same_space(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        Ok(FormalSymbol {
            coeffs: (0..n).map(|k| self.coeff(k).add(&other.coeff(k))).collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &FormalSymbol) -> Result<FormalSymbol> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub(crate) fn check_same_space(&self, other: &FormalSymbol) -> Result<()> {
        if self.d != other.d || self.y_dim != other.y_dim {
            return Err(Error::Shape(format!(
                "symbols on (d={}, dy={}) and (d={}, dy={})",
                self.d, self.y_dim, other.d, other.y_dim
            )));
        }
        Ok(())
    }

    /// Variable spellings: `x xi y` for `d = 1`, else `x1.. xi1.. y1..`.
    pub fn var_names(d: usize, y_dim: usize) -> Vec<String> {
        let mut names = Vec::new();
        for (prefix, count) in [("x", d), ("xi", d), ("y", y_dim)] {
            for i in 0..count {
                if d == 1 && count == 1 {
                    names.push(prefix.to_string());
                } else {
                    names.push(format!("{prefix}{}", i + 1));
                }
            }
        }
        names
    }

    /// Checks `a_k(x, sξ) = s^{degree−k} a_k(x, ξ)` for `s ∈ {2, 3}` at the box points.
    pub fn check_homogeneity(&self, sample: &SampleBox) -> Result<()> {
        let points = sample.points_for(self)?;
        for (k, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for p in &points {
                let base = a.eval(&complexify(p))?;
                for s in [2.0, 3.0] {
                    let mut q = p.clone();
                    for i in 0..self.d {
                        q[self.d + i] *= s;
                    }
                    let scaled = a.eval(&complexify(&q))?;
                    let want = base * s.powf(self.degree - k as f64);
                    if (scaled - want).norm() > 1e-8 * base.norm() {
                        return Err(Error::Invalid(format!(
                            "a_{k} is not homogeneous of degree {} at {:?} (s = {s})",
                            self.degree - k as f64,
                            p
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Text form: a header line `d=<d> d0=<degree> K=<K> [dy=<dy>]` then one expression per coefficient.
    pub fn to_text(&self) -> String {
        let names = FormalSymbol::var_names(self.d, self.y_dim);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut out = format!("d={} d0={} K={}", self.d, self.degree, self.order());
        if self.y_dim > 0 {
            out.push_str(&format!(" dy={}", self.y_dim));
        }
        out.push('\n');
        for c in &self.coeffs {
            out.push_str(&c.to_sexpr(&refs));
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`FormalSymbol::to_text`].
    pub fn parse(src: &str) -> Result<FormalSymbol> {
        let mut lines = src.lines().filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with(';')
        });
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty symbol text".into()))?;
        let (mut d, mut d0, mut k, mut dy) = (None, None, None, 0usize);
        for field in header.split_whitespace() {
            let (key, val) = field
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("bad header field `{field}`")))?;
            let bad = || Error::Invalid(format!("bad value in `{field}`"));
            match key {
                "d" => d = Some(val.parse::<usize>().map_err(|_| bad())?),
                "d0" => d0 = Some(val.parse::<f64>().map_err(|_| bad())?),
                "K" => k = Some(val.parse::<usize>().map_err(|_| bad())?),
                "dy" => dy = val.parse::<usize>().map_err(|_| bad())?,
                other => return Err(Error::Invalid(format!("unknown header key `{other}`"))),
            }
        }
        let missing = |n: &str| Error::Invalid(format!("header lacks `{n}`"));
        let d = d.ok_or_else(|| missing("d"))?;
        let d0 = d0.ok_or_else(|| missing("d0"))?;
        let k = k.ok_or_else(|| missing("K"))?;
        let body: Vec<&str> = lines.collect();
        let names = FormalSymbol::var_names(d, dy);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let coeffs = parse_expr_list(&body.join("\n"), &refs)?;
        if coeffs.len() != k + 1 {
            return Err(Error::Invalid(format!(
                "header declares K={k} but {} coefficients follow",
                coeffs.len()
            )));
        }
        FormalSymbol::with_y(d, dy, d0, coeffs)
    }
}

pub(crate) fn complexify(p: &[f64]) -> Vec<C64> {
    p.iter().map(|&v| C64::new(v, 0.0)).collect()
}

/// Tensor grid over a product of intervals, one interval per symbol variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub ranges: Vec<(f64, f64)>,
    pub points_per_axis: usize,
}

impl SampleBox {
    /// Box `x ∈ [x_lo, x_hi]^d`, `ξ ∈ [xi_lo, xi_hi]^d`.
    pub fn uniform(d: usize, x: (f64, f64), xi: (f64, f64), points_per_axis: usize) -> SampleBox {
        let mut ranges = vec![x; d];
        ranges.extend(std::iter::repeat_n(xi, d));
        SampleBox {
            ranges,
            points_per_axis,
        }
    }

    /// All grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = self.points_per_axis;
        if n == 0 || self.ranges.is_empty() {
            return Vec::new();
        }
        let axes: Vec<Vec<f64>> = self
            .ranges
            .iter()
            .map(|&(lo, hi)| {
                if n == 1 || lo == hi {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..n)
                        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for p in &out {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Whether the ξ-block `[d, 2d)` avoids the origin.
    pub fn excludes_zero_xi(&self, d: usize) -> bool {
        self.ranges[d..2 * d]
            .iter()
            .any(|&(lo, hi)| lo > 0.0 || hi < 0.0)
    }

    fn points_for(&self, a: &FormalSymbol) -> Result<Vec<Vec<f64>>> {
        if self.ranges.len() != a.num_vars() {
            return Err(Error::Shape(format!(
                "sample box has {} axes, symbol has {} variables",
                self.ranges.len(),
                a.num_vars()
            )));
        }
        let pts = self.points();
        if pts.is_empty() {
            return Err(Error::Invalid("empty sampling grid".into()));
        }
        Ok(pts)
    }

    /// Sampled `max_k max_p |a_k(p) − b_k(p)|`.
    pub fn max_difference(&self, a: &FormalSymbol, b: &FormalSymbol) -> Result<f64> {
        a.check_same_space(b)?;
        let pts = self.points_for(a)?;
        let n = a.coeffs.len().max(b.coeffs.len());
        let mut worst = 0.0f64;
        for k in 0..n {
            let diff = a.coeff(k).sub(&b.coeff(k));
            if diff.is_zero() {
                continue;
            }
            for p in &pts {
                worst = worst.max(diff.eval(&complexify(p))?.norm());
            }
        }
        Ok(worst)
    }

    /// Sampled `min_p |e(p)|`.
    pub fn min_abs(&self, e: &Expr) -> Result<f64> {
        let mut best = f64::INFINITY;
        for p in self.points() {
            best = best.min(e.eval(&complexify(&p))?.norm());
        }
        if best.is_infinite() {
            return Err(Error::Invalid("empty sampling grid".into()));
        }
        Ok(best)
    }
}

/// Parameters of the sampled `S^{ρ,R}_m` norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub rho: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub m: f64,
    pub sample: SampleBox,
    /// Largest `|α|` sampled.
    pub max_deriv: usize,
    /// Largest `k` sampled; `None` means the symbol's own `K`.
    pub k_max: Option<usize>,
}

/// Default grid resolution per axis.
pub const DEFAULT_GRID: usize = 17;
/// Default largest derivative order.
pub const DEFAULT_MAX_DERIV: usize = 6;
/// Largest derivative order the norm estimator accepts.
pub const MAX_NORM_DERIV: usize = 30;

impl NormParams {
    pub fn new(rho: f64, r: f64, m: f64, sample: SampleBox) -> NormParams {
        NormParams {
            rho,
            r,
            m,
            sample,
            max_deriv: DEFAULT_MAX_DERIV,
            k_max: None,
        }
    }

    /// Same grid with `(ρ, R)` replaced.
    pub fn with_scales(&self, rho: f64, r: f64) -> NormParams {
        NormParams {
            rho,
            r,
            ..self.clone()
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.rho <= 0.0 || self.r <= 0.0 || !self.rho.is_finite() || !self.r.is_finite() {
            return Err(Error::Invalid(
                "rho and R must be positive and finite".into(),
            ));
        }
        if self.m < 0.0 {
            return Err(Error::Invalid("m must be non-negative".into()));
        }
        if self.sample.ranges.len() >= 2 * d && !self.sample.excludes_zero_xi(d) {
            return Err(Error::Invalid("sampling box contains xi = 0".into()));
        }
        if self.max_deriv > MAX_NORM_DERIV {
            return Err(Error::OrderExceeded {
                requested: self.max_deriv,
                order: MAX_NORM_DERIV,
            });
        }
        Ok(())
    }
}

/// Location of the sampled supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormArgmax {
    pub point: Vec<f64>,
    pub k: usize,
    pub alpha: Vec<u32>,
}

/// Result of [`estimate_norm`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub rho: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub m: f64,
    pub value: f64,
    pub argmax: Option<NormArgmax>,
}

/// Sampled `S^{ρ,R}_m` norm.
///
/// Returns the maximum of `|∂^α a_k(p)| (1+k+|α|)^m / (ρ^{|α|} R^k (|α|+k)!)`
/// over grid points `p`, `|α| ≤ max_deriv` (α over all `2d` variables) and
/// `k ≤ min(K, k_max)`. The true norm is a supremum over all of phase space
/// and all orders, so the returned value is only a lower bound for it.
pub fn estimate_norm(a: &FormalSymbol, p: &NormParams) -> Result<NormReport> {
    p.validate(a.d)?;
    if a.y_dim != 0 {
        return Err(Error::Invalid(
            "norm is defined for (x, xi) symbols only".into(),
        ));
    }
    let pts = p.sample.points_for(a)?;
    let kmax = p.k_max.unwrap_or(a.order()).min(a.order());
    let order = p.max_deriv;
    let per_point: Vec<Result<Option<(f64, NormArgmax)>>> = pts
        .par_iter()
        .map(|pt| {
            let z = complexify(pt);
            let mut best: Option<(f64, NormArgmax)> = None;
            for k in 0..=kmax {
                let ak = &a.coeffs[k];
                if ak.is_zero() {
                    continue;
                }
                let jet = ak.jet(&z, order)?;
                let map = jet.index_map();
                for (i, alpha) in map.alphas().iter().enumerate() {
                    let n = map.degree(i);
                    let deriv = jet.coeffs()[i].norm() * multi_factorial(alpha);
                    let w = (1.0 + (k + n) as f64).powf(p.m)
                        / (p.rho.powi(n as i32) * p.r.powi(k as i32) * factorial(n + k));
                    let v = deriv * w;
                    if best.as_ref().is_none_or(|(b, _)| v > *b) {
                        best = Some((
                            v,
                            NormArgmax {
                                point: pt.clone(),
                                k,
                                alpha: alpha.clone(),
                            },
                        ));
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<(f64, NormArgmax)> = None;
    for r in per_point {
        if let Some((v, arg)) = r? {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, arg));
            }
        }
    }
    let (value, argmax) = match best {
        Some((v, arg)) => (v, Some(arg)),
        None => (0.0, None),
    };
    Ok(NormReport {
        rho: p.rho,
        r: p.r,
        m: p.m,
        value,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::parse_expr;

    fn sym1(degree: f64, srcs: &[&str]) -> FormalSymbol {
        let coeffs = srcs
            .iter()
            .map(|s| parse_expr(s, &["x", "xi"]).unwrap())
            .collect();
        FormalSymbol::new(1, degree, coeffs).unwrap()
    }

    fn box1(xi: (f64, f64)) -> SampleBox {
        SampleBox::uniform(1, (-1.0, 1.0), xi, DEFAULT_GRID)
    }

    #[test]
    fn norm_of_unit_is_one() {
        for m in [0.0, 3.0, 8.0] {
            let p = NormParams::new(0.7, 2.0, m, box1((1.0, 2.0)));
            let r = estimate_norm(&FormalSymbol::unit(1), &p).unwrap();
            assert_eq!(r.value, 1.0);
        }
    }

    #[test]
    fn norm_of_xi_on_shell() {
        // brute force: only (k, α) = (0, 0) and (0, e_ξ) contribute; sup |ξ| = 2, |∂_ξ ξ| = 1
        let a = sym1(1.0, &["xi"]);
        let p = NormParams::new(1.0, 1.0, 0.0, box1((1.0, 2.0)));
        let r = estimate_norm(&a, &p).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.argmax.unwrap().alpha, vec![0, 0]);
    }

    #[test]
    fn norm_of_zero_is_zero() {
        let p = NormParams::new(1.0, 1.0, 2.0, box1((1.0, 2.0)));
        assert_eq!(
            estimate_norm(&FormalSymbol::zero(1), &p).unwrap().value,
            0.0
        );
    }

    #[test]
    fn empty_grid_is_an_error() {
        let mut p = NormParams::new(1.0, 1.0, 0.0, box1((1.0, 2.0)));
        p.sample.points_per_axis = 0;
        assert!(estimate_norm(&sym1(1.0, &["xi"]), &p).is_err());
        let mut p = NormParams::new(1.0, 1.0, 0.0, box1((1.0, 2.0)));
        p.max_deriv = MAX_NORM_DERIV + 1;
        assert!(matches!(
            estimate_norm(&sym1(1.0, &["xi"]), &p),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn box_with_zero_xi_is_rejected() {
        let p = NormParams::new(1.0, 1.0, 0.0, box1((-1.0, 2.0)));
        assert!(estimate_norm(&sym1(1.0, &["xi"]), &p).is_err());
    }

    #[test]
    fn homogeneity_check() {
        let good = sym1(1.0, &["(* x xi)", "(sin x)", "(/ 1 xi)"]);
        good.check_homogeneity(&box1((1.0, 2.0))).unwrap();
        let bad = sym1(1.0, &["(+ xi 1)"]);
        assert!(bad.check_homogeneity(&box1((1.0, 2.0))).is_err());
    }

    #[test]
    fn text_round_trip() {
        let a = sym1(1.0, &["(* x xi)", "(c 0 -1)"]);
        let b = FormalSymbol::parse(&a.to_text()).unwrap();
        assert_eq!(b.order(), 1);
        let s = box1((1.0, 2.0));
        assert_eq!(s.max_difference(&a, &b).unwrap(), 0.0);
        assert!(FormalSymbol::parse("d=1 d0=0 K=1\n1\n").is_err());
        assert!(FormalSymbol::parse("d=1 d0=0 K=0 q=3\n1\n").is_err());
    }

    #[test]
    fn report_serializes_with_expected_fields() {
        let p = NormParams::new(1.0, 1.0, 0.0, box1((1.0, 2.0)));
        let r = estimate_norm(&sym1(1.0, &["xi"]), &p).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["rho", "R", "m", "value", "argmax"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
