use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::jet::Jet;
use crate::error::{Error, Result};

/// Radial norms below this are treated as the singular origin.
pub const RADIAL_EPS: f64 = 1e-8;
/// Quotient and log arguments below this modulus are singular.
pub const POLE_EPS: f64 = 1e-300;

/// Expression node kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var(usize),
    Const(C64),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    PowI(Expr, i32),
    PowR(Expr, f64),
    Exp(Expr),
    Log(Expr),
    Sin(Expr),
    Cos(Expr),
    Cosh(Expr),
    Sinh(Expr),
    /// Euclidean norm of the listed variables.
    Radial(Vec<usize>),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    /// Bit `i` set when variable `i` (for `i < 64`) occurs.
    vars: u64,
    /// Set when a variable with index `>= 64` occurs.
    wide: bool,
}

/// Immutable, cheaply clonable expression tree.
#[derive(Debug, Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

fn var_mask(i: usize) -> (u64, bool) {
    if i < 64 {
        (1u64 << i, false)
    } else {
        (0, true)
    }
}

impl Expr {
    fn wrap(node: Node) -> Expr {
        let (vars, wide) = match &node {
            Node::Var(i) => var_mask(*i),
            Node::Const(_) => (0, false),
            Node::Radial(vs) => vs.iter().fold((0, false), |(m, w), &i| {
                let (mi, wi) = var_mask(i);
                (m | mi, w || wi)
            }),
            Node::Sum(xs) | Node::Product(xs) => xs
                .iter()
                .fold((0, false), |(m, w), e| (m | e.0.vars, w || e.0.wide)),
            Node::Quotient(a, b) => (a.0.vars | b.0.vars, a.0.wide || b.0.wide),
            Node::PowI(a, _)
            | Node::PowR(a, _)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Cosh(a)
            | Node::Sinh(a) => (a.0.vars, a.0.wide),
        };
        Expr(Arc::new(Inner { node, vars, wide }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn var(i: usize) -> Expr {
        Expr::wrap(Node::Var(i))
    }

    pub fn constant(c: C64) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn real(x: f64) -> Expr {
        Expr::constant(C64::new(x, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    /// The imaginary unit.
    pub fn i() -> Expr {
        Expr::constant(C64::new(0.0, 1.0))
    }

    pub fn radial(vars: Vec<usize>) -> Expr {
        Expr::wrap(Node::Radial(vars))
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Structural zero test (constant 0 only).
    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(C64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    pub fn depends_on(&self, var: usize) -> bool {
        if var < 64 {
            self.0.vars & (1u64 << var) != 0
        } else {
            self.0.wide && self.collect_vars().contains(&var)
        }
    }

    /// Sorted list of variables occurring in the expression.
    pub fn collect_vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn visit_vars(&self, out: &mut Vec<usize>) {
        match self.node() {
            Node::Var(i) => out.push(*i),
            Node::Const(_) => {}
            Node::Radial(vs) => out.extend_from_slice(vs),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|e| e.visit_vars(out)),
            Node::Quotient(a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
            Node::PowI(a, _)
            | Node::PowR(a, _)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Sin(a)
            | Node::Cos(a)
            | Node::Cosh(a)
            | Node::Sinh(a) => a.visit_vars(out),
        }
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut c = C64::new(0.0, 0.0);
        for t in terms {
            match t.node() {
                Node::Const(v) => c += v,
                Node::Sum(xs) => {
                    for x in xs {
                        match x.as_const() {
                            Some(v) => c += v,
                            None => flat.push(x.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        if c != C64::new(0.0, 0.0) {
            flat.push(Expr::constant(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Sum(flat)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        let mut c = C64::new(1.0, 0.0);
        for f in factors {
            match f.node() {
                Node::Const(v) => c *= v,
                Node::Product(xs) => {
                    for x in xs {
                        match x.as_const() {
                            Some(v) => c *= v,
                            None => flat.push(x.clone()),
                        }
                    }
                }
                _ => flat.push(f),
            }
        }
        if c == C64::new(0.0, 0.0) {
            return Expr::zero();
        }
        if c != C64::new(1.0, 0.0) || flat.is_empty() {
            flat.insert(0, Expr::constant(c));
        }
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Product(flat)),
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::product(vec![self.clone(), other.clone()])
    }

    pub fn scale(&self, c: C64) -> Expr {
        Expr::product(vec![Expr::constant(c), self.clone()])
    }

    pub fn neg(&self) -> Expr {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn div(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = other.as_const() {
            if c != C64::new(0.0, 0.0) {
                return self.scale(1.0 / c);
            }
        }
        Expr::wrap(Node::Quotient(self.clone(), other.clone()))
    }

    pub fn powi(&self, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if n > 0 || c != C64::new(0.0, 0.0) {
                return Expr::constant(c.powi(n));
            }
        }
        if let Node::PowI(a, m) = self.node() {
            if let Some(p) = m.checked_mul(n) {
                return a.powi(p);
            }
        }
        Expr::wrap(Node::PowI(self.clone(), n))
    }

    pub fn powf(&self, r: f64) -> Expr {
        if r == r.trunc() && r.abs() < i32::MAX as f64 {
            return self.powi(r as i32);
        }
        Expr::wrap(Node::PowR(self.clone(), r))
    }

    pub fn sqrt(&self) -> Expr {
        self.powf(0.5)
    }

    fn unary(&self, f: fn(Expr) -> Node, g: fn(C64) -> C64) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(g(c)),
            None => Expr::wrap(f(self.clone())),
        }
    }

    pub fn exp(&self) -> Expr {
        self.unary(Node::Exp, |c| c.exp())
    }

    pub fn ln(&self) -> Expr {
        Expr::wrap(Node::Log(self.clone()))
    }

    pub fn sin(&self) -> Expr {
        self.unary(Node::Sin, |c| c.sin())
    }

    pub fn cos(&self) -> Expr {
        self.unary(Node::Cos, |c| c.cos())
    }

    pub fn sinh(&self) -> Expr {
        self.unary(Node::Sinh, |c| c.sinh())
    }

    pub fn cosh(&self) -> Expr {
        self.unary(Node::Cosh, |c| c.cosh())
    }

    /// Symbolic partial derivative `∂/∂z_var`.
    pub fn diff(&self, var: usize) -> Expr {
        if !self.depends_on(var) {
            return Expr::zero();
        }
        match self.node() {
            Node::Var(_) => Expr::one(),
            Node::Const(_) => Expr::zero(),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.diff(var)).collect()),
            Node::Product(xs) => {
                let mut terms = Vec::new();
                for (k, xk) in xs.iter().enumerate() {
                    let dk = xk.diff(var);
                    if dk.is_zero() {
                        continue;
                    }
                    let mut fs = xs.clone();
                    fs[k] = dk;
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Quotient(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                let t1 = da.div(b);
                let t2 = a.mul(&db).div(&b.powi(2));
                t1.sub(&t2)
            }
            Node::PowI(a, n) => {
                Expr::product(vec![Expr::real(*n as f64), a.powi(n - 1), a.diff(var)])
            }
            Node::PowR(a, r) => Expr::product(vec![Expr::real(*r), a.powf(r - 1.0), a.diff(var)]),
            Node::Exp(a) => self.mul(&a.diff(var)),
            Node::Log(a) => a.diff(var).div(a),
            Node::Sin(a) => a.cos().mul(&a.diff(var)),
            Node::Cos(a) => a.sin().neg().mul(&a.diff(var)),
            Node::Sinh(a) => a.cosh().mul(&a.diff(var)),
            Node::Cosh(a) => a.sinh().mul(&a.diff(var)),
            Node::Radial(_) => Expr::var(var).div(self),
        }
    }

    /// Iterated derivative `∂^α`, with `alpha[i]` the order in variable `vars[i]`.
    pub fn diff_multi(&self, vars: &[usize], alpha: &[u32]) -> Expr {
        let mut e = self.clone();
        for (&v, &a) in vars.iter().zip(alpha) {
            for _ in 0..a {
                if e.is_zero() {
                    return e;
                }
                e = e.diff(v);
            }
        }
        e
    }

    /// Replaces variable `i` by `subs[i]`; variables past the end are kept.
    pub fn subst(&self, subs: &[Expr]) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(subs, &mut memo)
    }

    fn subst_memo(&self, subs: &[Expr], memo: &mut HashMap<*const Inner, Expr>) -> Expr {
        let key = Arc::as_ptr(&self.0);
        if let Some(e) = memo.get(&key) {
            return e.clone();
        }
        let r = |e: &Expr, memo: &mut HashMap<*const Inner, Expr>| e.subst_memo(subs, memo);
        let out = match self.node() {
            Node::Var(i) => subs.get(*i).cloned().unwrap_or_else(|| self.clone()),
            Node::Const(_) => self.clone(),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| r(x, memo)).collect()),
            Node::Product(xs) => Expr::product(xs.iter().map(|x| r(x, memo)).collect()),
            Node::Quotient(a, b) => {
                let (a, b) = (r(a, memo), r(b, memo));
                a.div(&b)
            }
            Node::PowI(a, n) => r(a, memo).powi(*n),
            Node::PowR(a, p) => r(a, memo).powf(*p),
            Node::Exp(a) => r(a, memo).exp(),
            Node::Log(a) => r(a, memo).ln(),
            Node::Sin(a) => r(a, memo).sin(),
            Node::Cos(a) => r(a, memo).cos(),
            Node::Sinh(a) => r(a, memo).sinh(),
            Node::Cosh(a) => r(a, memo).cosh(),
            Node::Radial(vs) => {
                let squares = vs
                    .iter()
                    .map(|&v| subs.get(v).cloned().unwrap_or_else(|| Expr::var(v)).powi(2))
                    .collect();
                if vs
                    .iter()
                    .all(|&v| matches!(subs.get(v).map(|e| e.node()), Some(Node::Var(_)) | None))
                {
                    let mapped = vs
                        .iter()
                        .map(|&v| match subs.get(v).map(|e| e.node()) {
                            Some(Node::Var(j)) => *j,
                            _ => v,
                        })
                        .collect();
                    Expr::radial(mapped)
                } else {
                    Expr::sum(squares).sqrt()
                }
            }
        };
        memo.insert(key, out.clone());
        out
    }

    /// Complex conjugate as a function of real variables.
    pub fn conj(&self) -> Expr {
        match self.node() {
            Node::Var(_) | Node::Radial(_) => self.clone(),
            Node::Const(c) => Expr::constant(c.conj()),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.conj()).collect()),
            Node::Product(xs) => Expr::product(xs.iter().map(|x| x.conj()).collect()),
            Node::Quotient(a, b) => a.conj().div(&b.conj()),
            Node::PowI(a, n) => a.conj().powi(*n),
            Node::PowR(a, p) => a.conj().powf(*p),
            Node::Exp(a) => a.conj().exp(),
            Node::Log(a) => a.conj().ln(),
            Node::Sin(a) => a.conj().sin(),
            Node::Cos(a) => a.conj().cos(),
            Node::Sinh(a) => a.conj().sinh(),
            Node::Cosh(a) => a.conj().cosh(),
        }
    }

    /// Pointwise complex evaluation.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        let v = match self.node() {
            Node::Var(i) => *z.get(*i).ok_or_else(|| self.missing_var(*i, z.len()))?,
            Node::Const(c) => *c,
            Node::Sum(xs) => {
                let mut acc = C64::new(0.0, 0.0);
                for x in xs {
                    acc += x.eval(z)?;
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = C64::new(1.0, 0.0);
                for x in xs {
                    acc *= x.eval(z)?;
                }
                acc
            }
            Node::Quotient(a, b) => {
                let den = b.eval(z)?;
                if den.norm() <= POLE_EPS {
                    return Err(self.domain("denominator vanishes"));
                }
                a.eval(z)? / den
            }
            Node::PowI(a, n) => {
                let base = a.eval(z)?;
                if *n < 0 && base.norm() <= POLE_EPS {
                    return Err(self.domain("negative power of zero"));
                }
                base.powi(*n)
            }
            Node::PowR(a, p) => {
                let base = a.eval(z)?;
                if base.norm() <= POLE_EPS {
                    if *p > 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        return Err(self.domain("non-positive power of zero"));
                    }
                } else {
                    base.powf(*p)
                }
            }
            Node::Exp(a) => a.eval(z)?.exp(),
            Node::Log(a) => {
                let v = a.eval(z)?;
                if v.norm() <= POLE_EPS {
                    return Err(self.domain("log of zero"));
                }
                v.ln()
            }
            Node::Sin(a) => a.eval(z)?.sin(),
            Node::Cos(a) => a.eval(z)?.cos(),
            Node::Sinh(a) => a.eval(z)?.sinh(),
            Node::Cosh(a) => a.eval(z)?.cosh(),
            Node::Radial(vs) => {
                let mut s = C64::new(0.0, 0.0);
                for &i in vs {
                    let v = *z.get(i).ok_or_else(|| self.missing_var(i, z.len()))?;
                    s += v * v;
                }
                if s.norm().sqrt() <= RADIAL_EPS {
                    return Err(self.domain("radial norm evaluated at the origin"));
                }
                s.sqrt()
            }
        };
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(self.domain("non-finite value"));
        }
        Ok(v)
    }

    /// Real evaluation; the imaginary part is discarded.
    pub fn eval_real(&self, x: &[f64]) -> Result<f64> {
        let z: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        Ok(self.eval(&z)?.re)
    }

    fn domain(&self, reason: &str) -> Error {
        let mut node = self.to_string();
        if node.len() > 120 {
            node.truncate(117);
            node.push_str("...");
        }
        Error::Domain {
            node,
            reason: reason.into(),
        }
    }

    fn missing_var(&self, i: usize, n: usize) -> Error {
        self.domain(&format!("variable {i} not supplied ({n} coordinates)"))
    }

    /// Order-`order` Taylor jet at `center` by forward propagation.
    pub fn jet(&self, center: &[C64], order: usize) -> Result<Jet> {
        let mut memo = HashMap::new();
        self.jet_memo(center, order, &mut memo)
    }

    fn jet_memo(
        &self,
        center: &[C64],
        order: usize,
        memo: &mut HashMap<*const Inner, Jet>,
    ) -> Result<Jet> {
        let key = Arc::as_ptr(&self.0);
        if let Some(j) = memo.get(&key) {
            return Ok(j.clone());
        }
        let mut rec = |e: &Expr| e.jet_memo(center, order, memo);
        let out = match self.node() {
            Node::Var(i) => {
                if *i >= center.len() {
                    return Err(self.missing_var(*i, center.len()));
                }
                Jet::variable(center, order, *i)
            }
            Node::Const(c) => Jet::constant(center, order, *c),
            Node::Sum(xs) => {
                let mut acc = Jet::zero(center, order);
                for x in xs {
                    acc = acc.add_unchecked(&rec(x)?);
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = Jet::constant(center, order, C64::new(1.0, 0.0));
                for x in xs {
                    acc = acc.mul_unchecked(&rec(x)?);
                }
                acc
            }
            Node::Quotient(a, b) => {
                let den = rec(b)?;
                if den.value().norm() <= POLE_EPS {
                    return Err(self.domain("denominator vanishes"));
                }
                let num = rec(a)?;
                num.mul_unchecked(&den.recip()?)
            }
            Node::PowI(a, n) => {
                let base = rec(a)?;
                if *n < 0 && base.value().norm() <= POLE_EPS {
                    return Err(self.domain("negative power of zero"));
                }
                base.powi(*n)?
            }
            Node::PowR(a, p) => {
                let base = rec(a)?;
                if base.value().norm() <= POLE_EPS {
                    return Err(self.domain("real power at zero is not smooth"));
                }
                base.powf(*p)?
            }
            Node::Exp(a) => rec(a)?.exp(),
            Node::Log(a) => {
                let v = rec(a)?;
                if v.value().norm() <= POLE_EPS {
                    return Err(self.domain("log of zero"));
                }
                v.ln()?
            }
            Node::Sin(a) => rec(a)?.sin(),
            Node::Cos(a) => rec(a)?.cos(),
            Node::Sinh(a) => rec(a)?.sinh(),
            Node::Cosh(a) => rec(a)?.cosh(),
            Node::Radial(vs) => {
                let mut s = Jet::zero(center, order);
                for &i in vs {
                    if i >= center.len() {
                        return Err(self.missing_var(i, center.len()));
                    }
                    let v = Jet::variable(center, order, i);
                    s = s.add_unchecked(&v.mul_unchecked(&v));
                }
                if s.value().norm().sqrt() <= RADIAL_EPS {
                    return Err(self.domain("radial norm evaluated at the origin"));
                }
                s.sqrt()?
            }
        };
        if out
            .coeffs()
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(self.domain("non-finite jet coefficient"));
        }
        memo.insert(key, out.clone());
        Ok(out)
    }

    /// Renders with variable names `names[i]` (falling back to `v<i>`).
    pub fn to_sexpr(&self, names: &[&str]) -> String {
        let mut s = String::new();
        self.write_sexpr(names, &mut s);
        s
    }

    fn write_sexpr(&self, names: &[&str], out: &mut String) {
        let name = |i: usize| -> String {
            names
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("v{i}"))
        };
        let list = |head: &str, xs: &[&Expr], out: &mut String| {
            out.push('(');
            out.push_str(head);
            for x in xs {
                out.push(' ');
                x.write_sexpr(names, out);
            }
            out.push(')');
        };
        match self.node() {
            Node::Var(i) => out.push_str(&name(*i)),
            Node::Const(c) => {
                if c.im == 0.0 {
                    out.push_str(&format_real(c.re));
                } else {
                    out.push_str(&format!("(c {} {})", format_real(c.re), format_real(c.im)));
                }
            }
            Node::Sum(xs) => list("+", &xs.iter().collect::<Vec<_>>(), out),
            Node::Product(xs) => list("*", &xs.iter().collect::<Vec<_>>(), out),
            Node::Quotient(a, b) => list("/", &[a, b], out),
            Node::PowI(a, n) => {
                out.push_str("(^ ");
                a.write_sexpr(names, out);
                out.push_str(&format!(" {n})"));
            }
            Node::PowR(a, p) => {
                out.push_str("(pow ");
                a.write_sexpr(names, out);
                out.push_str(&format!(" {})", format_real(*p)));
            }
            Node::Exp(a) => list("exp", &[a], out),
            Node::Log(a) => list("log", &[a], out),
            Node::Sin(a) => list("sin", &[a], out),
            Node::Cos(a) => list("cos", &[a], out),
            Node::Sinh(a) => list("sinh", &[a], out),
            Node::Cosh(a) => list("cosh", &[a], out),
            Node::Radial(vs) => {
                out.push_str("(norm");
                for &v in vs {
                    out.push(' ');
                    out.push_str(&name(v));
                }
                out.push(')');
            }
        }
    }
}

fn format_real(x: f64) -> String {
    // shortest round-trip form, always parseable as a number token
    let s = format!("{x:?}");
    if s == "inf" || s == "-inf" || s == "NaN" {
        return s;
    }
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr(&[]))
    }
}

/// Order-`order` jet of `e` at `center`.
pub fn jet_from_expr(e: &Expr, center: &[C64], order: usize) -> Result<Jet> {
    e.jet(center, order)
}

/// Real-centered convenience wrapper around [`jet_from_expr`].
pub fn jet_from_expr_real(e: &Expr, center: &[f64], order: usize) -> Result<Jet> {
    let z: Vec<C64> = center.iter().map(|&v| C64::new(v, 0.0)).collect();
    e.jet(&z, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn exp_jet() {
        let j = jet_from_expr_real(&x(0).exp(), &[0.0], 2).unwrap();
        assert!(close(j.coeffs()[0], 1.0, 1e-15));
        assert!(close(j.coeffs()[1], 1.0, 1e-15));
        assert!(close(j.coeffs()[2], 0.5, 1e-15));
    }

    #[test]
    fn polynomial_identity_jet() {
        let e = Expr::one().add(&x(0)).mul(&Expr::one().sub(&x(0)));
        let j = jet_from_expr_real(&e, &[0.0], 2).unwrap();
        let want = [1.0, 0.0, -1.0];
        for k in 0..3 {
            assert!(close(j.coeffs()[k], want[k], 1e-15));
        }
    }

    #[test]
    fn sin_cos_linear_coefficient() {
        let e = x(0).sin().mul(&x(0).cos());
        let j = jet_from_expr_real(&e, &[0.0], 1).unwrap();
        assert!(close(j.coeffs()[1], 1.0, 1e-15));
    }

    #[test]
    fn mixed_derivative_of_exp_product() {
        let e = x(0).mul(&x(1)).exp();
        let j = jet_from_expr_real(&e, &[0.0, 0.0], 2).unwrap();
        assert!(close(j.derivative_at(&[1, 1]).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn radial_near_origin_is_domain_error() {
        let e = Expr::radial(vec![0, 1]);
        let err = jet_from_expr_real(&e, &[1e-9, 0.0], 2).unwrap_err();
        assert!(matches!(err, Error::Domain { ref node, .. } if node.contains("norm")));
        assert!(jet_from_expr_real(&e, &[3.0, 4.0], 2).is_ok());
    }

    #[test]
    fn quotient_pole_reports_node() {
        let e = Expr::one().div(&x(0));
        let err = jet_from_expr_real(&e, &[0.0], 1).unwrap_err();
        match err {
            Error::Domain { node, .. } => assert!(node.starts_with("(/")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symbolic_diff_agrees_with_jet() {
        let e = x(0)
            .mul(&x(1))
            .sin()
            .div(&Expr::radial(vec![0, 1]))
            .add(&x(0).powf(1.5).mul(&x(1).cosh()));
        let p = [0.7, -0.4];
        let j = jet_from_expr_real(&e, &p, 3).unwrap();
        let d = e.diff(0).diff(1).diff(1);
        let v = d.eval_real(&p).unwrap();
        assert!((j.derivative_at(&[1, 2]).unwrap().re - v).abs() < 1e-12);
    }

    #[test]
    fn subst_and_conj() {
        let e = x(0).mul(&x(1)).add(&Expr::i());
        let s = e.subst(&[x(1), x(1)]);
        assert!(close(
            s.eval(&[C64::new(5.0, 0.0), C64::new(2.0, 0.0)]).unwrap() - C64::new(0.0, 1.0),
            4.0,
            1e-15
        ));
        let c = e.conj();
        assert_eq!(
            c.eval(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap(),
            C64::new(1.0, -1.0)
        );
    }
}
