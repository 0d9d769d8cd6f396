//! S-expression text format for [`Expr`].
//!
//! ```text
//! expr    := number | 'i' | 'pi' | ident | '(' form ')'
//! form    := '+' expr*            sum (empty sum is 0)
//!          | '*' expr*            product (empty product is 1)
//!          | '-' expr             negation
//!          | '-' expr expr+       first minus the rest
//!          | '/' expr expr        quotient
//!          | '^' expr integer     integer power
//!          | 'pow' expr number    real power
//!          | 'sqrt' expr          real power 1/2
//!          | 'exp' | 'log' | 'sin' | 'cos' | 'cosh' | 'sinh'  expr
//!          | 'norm' ident+        Euclidean norm of the listed variables
//!          | 'c' number number    complex constant re + i im
//! number  := decimal float literal, e.g. 2, -0.5, 1e-3
//! ident   := variable name from the caller-supplied table
//! ```
//!
//! `;` starts a comment running to the end of the line.

use num_complex::Complex64 as C64;

use super::expr::Expr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn tokenize(src: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == ';' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push((i, Tok::Open));
            i += 1;
        } else if c == ')' {
            out.push((i, Tok::Close));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() {
                let d = bytes[i] as char;
                if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                    break;
                }
                i += 1;
            }
            out.push((start, Tok::Atom(src[start..i].to_string())));
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    names: &'a [&'a str],
    len: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        let at = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.len);
        Error::Parse {
            pos: at,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn number(&mut self) -> Result<f64> {
        match self.next() {
            Some(Tok::Atom(a)) => a.parse::<f64>().map_err(|_| {
                self.pos -= 1;
                self.err(format!("expected number, found `{a}`"))
            }),
            _ => {
                self.pos -= 1;
                Err(self.err("expected number"))
            }
        }
    }

    fn ident(&mut self) -> Result<usize> {
        match self.next() {
            Some(Tok::Atom(a)) => self.names.iter().position(|n| *n == a).ok_or_else(|| {
                self.pos -= 1;
                self.err(format!("unknown variable `{a}`"))
            }),
            _ => {
                self.pos -= 1;
                Err(self.err("expected variable name"))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        match self.next() {
            None => Err(self.err("unexpected end of input")),
            Some(Tok::Close) => {
                self.pos -= 1;
                Err(self.err("unexpected `)`"))
            }
            Some(Tok::Atom(a)) => {
                if let Some(i) = self.names.iter().position(|n| *n == a) {
                    return Ok(Expr::var(i));
                }
                match a.as_str() {
                    "i" => Ok(Expr::i()),
                    "pi" => Ok(Expr::real(std::f64::consts::PI)),
                    _ => a.parse::<f64>().map(Expr::real).map_err(|_| {
                        self.pos -= 1;
                        self.err(format!("unknown atom `{a}`"))
                    }),
                }
            }
            Some(Tok::Open) => {
                let head = match self.next() {
                    Some(Tok::Atom(h)) => h,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected operator after `(`"));
                    }
                };
                let e = self.form(&head)?;
                match self.next() {
                    Some(Tok::Close) => Ok(e),
                    _ => {
                        self.pos -= 1;
                        Err(self.err(format!("expected `)` closing `{head}`")))
                    }
                }
            }
        }
    }

    fn rest(&mut self) -> Result<Vec<Expr>> {
        let mut xs = Vec::new();
        while !matches!(self.peek(), Some(Tok::Close) | None) {
            xs.push(self.expr()?);
        }
        Ok(xs)
    }

    fn form(&mut self, head: &str) -> Result<Expr> {
        match head {
            "+" => Ok(Expr::sum(self.rest()?)),
            "*" => Ok(Expr::product(self.rest()?)),
            "-" => {
                let xs = self.rest()?;
                match xs.len() {
                    0 => Err(self.err("`-` needs at least one argument")),
                    1 => Ok(xs[0].neg()),
                    _ => {
                        let mut terms = vec![xs[0].clone()];
                        terms.extend(xs[1..].iter().map(|x| x.neg()));
                        Ok(Expr::sum(terms))
                    }
                }
            }
            "/" => {
                let a = self.expr()?;
                let b = self.expr()?;
                Ok(a.div(&b))
            }
            "^" => {
                let a = self.expr()?;
                let n = self.number()?;
                if n != n.trunc() || n.abs() > i32::MAX as f64 {
                    return Err(self.err("`^` needs an integer exponent"));
                }
                Ok(a.powi(n as i32))
            }
            "pow" => {
                let a = self.expr()?;
                let r = self.number()?;
                Ok(a.powf(r))
            }
            "sqrt" => Ok(self.expr()?.sqrt()),
            "exp" => Ok(self.expr()?.exp()),
            "log" => Ok(self.expr()?.ln()),
            "sin" => Ok(self.expr()?.sin()),
            "cos" => Ok(self.expr()?.cos()),
            "sinh" => Ok(self.expr()?.sinh()),
            "cosh" => Ok(self.expr()?.cosh()),
            "norm" => {
                let mut vs = Vec::new();
                while matches!(self.peek(), Some(Tok::Atom(_))) {
                    vs.push(self.ident()?);
                }
                if vs.is_empty() {
                    return Err(self.err("`norm` needs at least one variable"));
                }
                Ok(Expr::radial(vs))
            }
            "c" => {
                let re = self.number()?;
                let im = self.number()?;
                Ok(Expr::constant(C64::new(re, im)))
            }
            other => Err(self.err(format!("unknown operator `{other}`"))),
        }
    }
}

/// Parses one expression; `names[i]` is the spelling of variable `i`.
pub fn parse_expr(src: &str, names: &[&str]) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(src),
        pos: 0,
        names,
        len: src.len(),
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Parses a whitespace-separated sequence of expressions.
pub fn parse_expr_list(src: &str, names: &[&str]) -> Result<Vec<Expr>> {
    let mut p = Parser {
        toks: tokenize(src),
        pos: 0,
        names,
        len: src.len(),
    };
    let mut out = Vec::new();
    while p.pos < p.toks.len() {
        out.push(p.expr()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = parse_expr("(+ (* 2 x) (^ y 2) (/ 1 (norm x y)))", &["x", "y"]).unwrap();
        let v = e.eval_real(&[3.0, 4.0]).unwrap();
        assert!((v - (6.0 + 16.0 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let names = ["x", "xi"];
        let src = "(+ (* (c 0 -1) x xi) (exp (sin x)) (pow xi 0.5) (- x) (log xi))";
        let e = parse_expr(src, &names).unwrap();
        let back = parse_expr(&e.to_sexpr(&names), &names).unwrap();
        let p = [C64::new(0.3, 0.0), C64::new(1.7, 0.0)];
        assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
    }

    #[test]
    fn errors_carry_position() {
        let err = parse_expr("(+ x zz)", &["x"]).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                pos: 5,
                msg: "unknown atom `zz`".into()
            }
        );
        assert!(parse_expr("(+ x", &["x"]).is_err());
        assert!(parse_expr("(^ x 1.5)", &["x"]).is_err());
        assert!(parse_expr("x x", &["x"]).is_err());
    }

    #[test]
    fn complex_and_comments() {
        let e = parse_expr("; unit\n(* i i)", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), C64::new(-1.0, 0.0));
    }
}
