//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default cap on the number of subintervals.
pub const MAX_INTERVALS: usize = 4000;

/// Kronrod estimate and `|K − G|` on one interval.
fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(C64, f64)>
where
    F: Fn(f64) -> Result<C64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    Ok((k * h, ((k - g) * h).norm()))
}

struct Piece {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// `∫_a^b f` to absolute tolerance `tol` by global bisection of the worst interval.
///
/// Returns the value and the summed `|K − G|` error estimate.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<(C64, f64)>
where
    F: Fn(f64) -> Result<C64>,
{
    integrate_capped(f, a, b, tol, MAX_INTERVALS)
}

pub fn integrate_capped<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<(C64, f64)>
where
    F: Fn(f64) -> Result<C64>,
{
    if a == b {
        return Ok((C64::new(0.0, 0.0), 0.0));
    }
    let (v, e) = gk15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        a,
        b,
        value: v,
        err: e,
    });
    let mut total_err = e;
    while total_err > tol {
        if heap.len() >= max_intervals {
            return Err(Error::NoConvergence {
                achieved: total_err,
                requested: tol,
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid)?;
        let (v2, e2) = gk15(&f, mid, worst.b)?;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        total_err = heap.iter().map(|p| p.err).sum();
    }
    // sum in position order so the result is independent of heap layout
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = pieces.iter().map(|p| p.value).sum();
    Ok((value, total_err))
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let (v, e) = integrate(|x| f(x).map(|y| C64::new(y, 0.0)), a, b, tol)?;
    Ok((v.re, e))
}
