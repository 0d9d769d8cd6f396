use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::index::{index_map, multi_factorial, IndexMap};
use crate::error::{Error, Result};

/// Truncated Taylor expansion `Σ_{|α|≤K} c_α (z − center)^α` with `c_α = ∂^α f(center)/α!`.
///
/// Coefficients are complex so that the same arithmetic serves real symbols,
/// complex phases and complexified arguments.
#[derive(Clone, Debug)]
pub struct Jet {
    map: Arc<IndexMap>,
    center: Vec<C64>,
    coeffs: Vec<C64>,
}

/// Binary operation selector for [`jet_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Mul,
    Div,
}

impl Jet {
    pub fn zero(center: &[C64], order: usize) -> Jet {
        let map = index_map(center.len(), order);
        let coeffs = vec![C64::new(0.0, 0.0); map.len()];
        Jet {
            map,
            center: center.to_vec(),
            coeffs,
        }
    }

    pub fn constant(center: &[C64], order: usize, value: C64) -> Jet {
        let mut j = Jet::zero(center, order);
        j.coeffs[0] = value;
        j
    }

    /// Jet of the coordinate function `z_var`.
    pub fn variable(center: &[C64], order: usize, var: usize) -> Jet {
        let mut j = Jet::constant(center, order, center[var]);
        if let Some(k) = j.map.unit(var) {
            j.coeffs[k] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Builds a jet from a coefficient table in graded-lex order.
    pub fn from_coeffs(center: &[C64], order: usize, coeffs: Vec<C64>) -> Result<Jet> {
        let map = index_map(center.len(), order);
        if coeffs.len() != map.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                map.len(),
                coeffs.len()
            )));
        }
        Ok(Jet {
            map,
            center: center.to_vec(),
            coeffs,
        })
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn order(&self) -> usize {
        self.map.order()
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.map
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// Taylor coefficient `c_α`, zero when `|α| > K`.
    pub fn coeff(&self, alpha: &[u32]) -> C64 {
        self.map
            .index_of(alpha)
            .map(|i| self.coeffs[i])
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// `∂^α f(center) = α! c_α`.
    pub fn derivative_at(&self, alpha: &[u32]) -> Result<C64> {
        if alpha.len() != self.dim() {
            return Err(Error::Shape(format!(
                "multi-index has {} entries, jet dimension is {}",
                alpha.len(),
                self.dim()
            )));
        }
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > self.order() {
            return Err(Error::OrderExceeded {
                requested: deg,
                order: self.order(),
            });
        }
        Ok(self.coeff(alpha) * multi_factorial(alpha))
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.dim() != other.dim() || self.order() != other.order() {
            return Err(Error::Shape(format!(
                "jets (d={}, K={}) and (d={}, K={})",
                self.dim(),
                self.order(),
                other.dim(),
                other.order()
            )));
        }
        if self.center != other.center {
            return Err(Error::Shape("jets have different centers".into()));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: Vec<C64>) -> Jet {
        Jet {
            map: self.map.clone(),
            center: self.center.clone(),
            coeffs,
        }
    }

    pub fn scale(&self, s: C64) -> Jet {
        self.with_coeffs(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add_const(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &Jet) -> Jet {
        self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Jet) -> Jet {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len()];
        for &(i, j, k) in self.map.products() {
            out[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        self.with_coeffs(out)
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let inv = other.recip()?;
        Ok(self.mul_unchecked(&inv))
    }

    /// `1/f`; fails when the constant term vanishes.
    pub fn recip(&self) -> Result<Jet> {
        let g0 = self.coeffs[0];
        if g0.norm() == 0.0 {
            return Err(Error::ZeroDivisor);
        }
        let inv = 1.0 / g0;
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut p = inv;
        for n in 0..=self.order() {
            t.push(if n % 2 == 0 { p } else { -p });
            p *= inv;
        }
        Ok(self.compose(&t))
    }

    /// `f(g)` for a univariate `f` given its Taylor coefficients `t_n = f^{(n)}(g0)/n!` at `g0 = g(center)`.
    pub fn compose(&self, taylor: &[C64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = C64::new(0.0, 0.0);
        let mut acc = Jet::constant(&self.center, self.order(), taylor[0]);
        let mut pow = Jet::constant(&self.center, self.order(), C64::new(1.0, 0.0));
        for t in taylor.iter().take(self.order() + 1).skip(1) {
            pow = pow.mul_unchecked(&h);
            if *t != C64::new(0.0, 0.0) {
                for (a, p) in acc.coeffs.iter_mut().zip(&pow.coeffs) {
                    *a += t * p;
                }
            }
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.coeffs[0].exp();
        let t = (0..=self.order())
            .scan(e, |acc, n| {
                let v = *acc;
                *acc /= (n + 1) as f64;
                Some(v)
            })
            .collect::<Vec<_>>();
        self.compose(&t)
    }

    pub fn ln(&self) -> Result<Jet> {
        let g0 = self.coeffs[0];
        if g0.norm() == 0.0 {
            return Err(Error::ZeroDivisor);
        }
        let mut t = vec![g0.ln()];
        let inv = 1.0 / g0;
        let mut p = inv;
        for n in 1..=self.order() {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            t.push(p * (sign / n as f64));
            p *= inv;
        }
        Ok(self.compose(&t))
    }

    fn trig_like(&self, vals: [C64; 4]) -> Jet {
        // vals[n % 4] is the n-th derivative at g0
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for n in 0..=self.order() {
            if n > 0 {
                fact *= n as f64;
            }
            t.push(vals[n % 4] / fact);
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (self.coeffs[0].sin(), self.coeffs[0].cos());
        self.trig_like([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (self.coeffs[0].sin(), self.coeffs[0].cos());
        self.trig_like([c, -s, -c, s])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.coeffs[0].sinh(), self.coeffs[0].cosh());
        self.trig_like([s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.coeffs[0].sinh(), self.coeffs[0].cosh());
        self.trig_like([c, s, c, s])
    }

    /// Integer power by repeated squaring, exact on polynomials.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(&self.center, self.order(), C64::new(1.0, 0.0));
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        Ok(acc)
    }

    /// Principal branch `f^r`; fails at a zero constant term.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let g0 = self.coeffs[0];
        if g0.norm() == 0.0 {
            return Err(Error::ZeroDivisor);
        }
        let mut t = Vec::with_capacity(self.order() + 1);
        let base = g0.powf(r);
        let inv = 1.0 / g0;
        let mut acc = base;
        for n in 0..=self.order() {
            t.push(acc);
            acc = acc * inv * ((r - n as f64) / (n + 1) as f64);
        }
        Ok(self.compose(&t))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }
}

/// Truncated arithmetic of two jets with identical dimension, order and center.
pub fn jet_arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet> {
    match op {
        ArithOp::Add => a.add(b),
        ArithOp::Mul => a.mul(b),
        ArithOp::Div => a.div(b),
    }
}

/// `∂^α f(center)` read off a jet.
pub fn derivative_at(j: &Jet, alpha: &[u32]) -> Result<C64> {
    j.derivative_at(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn exp_times_exp_neg_is_one() {
        let z = [c(0.0)];
        let x = Jet::variable(&z, 4, 0);
        let p = x.exp().mul(&x.scale(c(-1.0)).exp()).unwrap();
        assert!((p.coeffs()[0] - 1.0).norm() < 1e-15);
        for k in 1..5 {
            assert!(p.coeffs()[k].norm() < 1e-15);
        }
    }

    #[test]
    fn geometric_series() {
        let z = [c(0.0)];
        let one = Jet::constant(&z, 3, c(1.0));
        let x = Jet::variable(&z, 3, 0);
        let q = jet_arith(&one, &one.sub(&x).unwrap(), ArithOp::Div).unwrap();
        for k in 0..4 {
            assert!((q.coeffs()[k] - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn add_opposites_is_zero() {
        let z = [c(0.3)];
        let x = Jet::variable(&z, 3, 0);
        let s = jet_arith(&x, &x.scale(c(-1.0)), ArithOp::Add).unwrap();
        assert!(s.coeffs().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn division_by_zero_constant_fails() {
        let z = [c(0.0)];
        let x = Jet::variable(&z, 3, 0);
        assert_eq!(
            jet_arith(&x, &x, ArithOp::Div).unwrap_err(),
            Error::ZeroDivisor
        );
    }

    #[test]
    fn mismatched_shapes_fail() {
        let a = Jet::variable(&[c(0.0)], 3, 0);
        let b = Jet::variable(&[c(0.0)], 2, 0);
        assert!(matches!(a.add(&b), Err(Error::Shape(_))));
        let b = Jet::variable(&[c(1.0)], 3, 0);
        assert!(matches!(a.mul(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn derivative_of_square() {
        let x = Jet::variable(&[c(0.7)], 2, 0);
        let sq = x.mul(&x).unwrap();
        assert!((sq.derivative_at(&[2]).unwrap() - 2.0).norm() < 1e-15);
        assert!(matches!(
            sq.derivative_at(&[3]),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn zero_jet_derivatives_vanish() {
        let z = Jet::zero(&[c(0.0), c(0.0)], 3);
        assert_eq!(z.derivative_at(&[1, 2]).unwrap(), c(0.0));
    }

    #[test]
    fn powf_matches_sqrt_series() {
        // sqrt(1+x) = 1 + x/2 - x^2/8 + x^3/16
        let x = Jet::variable(&[c(0.0)], 3, 0);
        let s = x.add_const(c(1.0)).sqrt().unwrap();
        let want = [1.0, 0.5, -0.125, 0.0625];
        for k in 0..4 {
            assert!((s.coeffs()[k] - want[k]).norm() < 1e-15);
        }
    }
}
