//! FBI transform `ℝⁿ → ℝⁿ × S^{n−1}` with kernel `∫_0^∞ e^{itφ} t^{(n+1)/4} dt`,
//! and a large-`t` decay probe for the analytic wavefront set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::quad::integrate;
use crate::report::fmt17;
use crate::C64;

/// `φ(x,ω,y) = (x−y)·ω + i|x−y|²/2 + i(1−|ω|²)/2`.
///
/// For unit `ω` the last term vanishes; for `|ω| < 1` it is the holomorphic
/// extension in `x − iω`, equal to `(i/2)(1 + (x − iω − y)²)`.
pub fn fbi_phase(x: &[f64], omega: &[f64], y: &[f64]) -> C64 {
    let mut re = 0.0;
    let mut d2 = 0.0;
    for ((xi, oi), yi) in x.iter().zip(omega).zip(y) {
        re += (xi - yi) * oi;
        d2 += (xi - yi) * (xi - yi);
    }
    let w2: f64 = omega.iter().map(|o| o * o).sum();
    C64::new(re, 0.5 * d2 + 0.5 * (1.0 - w2))
}

/// Exponent `s = (n+5)/4` of the closed-form kernel.
pub fn kernel_exponent(n: usize) -> f64 {
    (n as f64 + 5.0) / 4.0
}

fn check_point(n: usize, x: &[f64], omega: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != n || omega.len() != n || y.len() != n {
        return Err(Error::Shape(format!("FBI point needs {n} coordinates")));
    }
    let w2: f64 = omega.iter().map(|o| o * o).sum();
    if w2 > 1.0 + 1e-12 {
        return Err(Error::Domain {
            node: "omega".into(),
            reason: format!("|ω|² = {w2} exceeds 1"),
        });
    }
    Ok(())
}

/// `Γ((n+5)/4) (−iφ)^{−(n+5)/4}` on the principal branch.
pub fn fbi_kernel(n: usize, x: &[f64], omega: &[f64], y: &[f64]) -> Result<C64> {
    check_point(n, x, omega, y)?;
    let phi = fbi_phase(x, omega, y);
    if phi.norm() == 0.0 {
        return Err(Error::Domain {
            node: "fbi_kernel".into(),
            reason: "y = x with |ω| = 1: the kernel is singular".into(),
        });
    }
    let s = kernel_exponent(n);
    Ok((-s * (C64::new(0.0, -1.0) * phi).ln()).exp() * gamma(s))
}

/// `∫_0^T e^{itφ} t^{(n+1)/4} dt` by adaptive quadrature.
pub fn kernel_t_integral(n: usize, phi: C64, t_max: f64) -> Result<C64> {
    let p = (n as f64 + 1.0) / 4.0;
    let scale = gamma(kernel_exponent(n)) * phi.norm().powf(-kernel_exponent(n));
    let (v, _) = integrate(
        |t| Ok((C64::new(0.0, t) * phi).exp() * t.powf(p)),
        0.0,
        t_max,
        1e-12 * scale,
    )?;
    Ok(v)
}

/// Named test signals in one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    /// `H(−y) β(y)`.
    Heaviside,
    /// `|y| β(y)`.
    Abs,
    /// `β(y) = exp(1 − 1/(1 − y²/16))` on `(−4, 4)`.
    Bump,
    /// `e^{−y²/2}`, truncated to `|y| ≤ 10`.
    Gaussian,
}

impl Builtin {
    pub fn parse(name: &str) -> Result<Builtin> {
        match name {
            "heaviside" => Ok(Builtin::Heaviside),
            "abs" => Ok(Builtin::Abs),
            "bump" => Ok(Builtin::Bump),
            "gaussian" => Ok(Builtin::Gaussian),
            other => Err(Error::Config(format!("unknown builtin signal '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Heaviside => "heaviside",
            Builtin::Abs => "abs",
            Builtin::Bump => "bump",
            Builtin::Gaussian => "gaussian",
        }
    }
}

fn bump(y: f64) -> f64 {
    let q = 1.0 - y * y / 16.0;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

/// Uniformly sampled data `u(x0 + k h)`, interpolated by cubic Hermite with centred slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<SampledSignal> {
        if !(h > 0.0) || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "samples need h > 0, at least two finite values".into(),
            ));
        }
        Ok(SampledSignal { x0, h, values })
    }

    /// Parses `y,u` lines (blank lines and `#` comments skipped); spacing must be uniform.
    pub fn parse(text: &str) -> Result<SampledSignal> {
        let mut ys = Vec::new();
        let mut us = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    pos: line_no + 1,
                    msg: "expected 'y,u'".into(),
                });
            };
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    pos: line_no + 1,
                    msg: e.to_string(),
                })
            };
            let (y, u) = (parse(a)?, parse(b)?);
            if y.is_nan() && u.is_nan() {
                continue;
            }
            ys.push(y);
            us.push(u);
        }
        if ys.len() < 2 {
            return Err(Error::Invalid("need at least two samples".into()));
        }
        let h = ys[1] - ys[0];
        if ys
            .windows(2)
            .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
        {
            return Err(Error::Invalid("sample spacing must be uniform".into()));
        }
        SampledSignal::new(ys[0], h, us)
    }

    fn slope(&self, k: usize) -> f64 {
        let m = self.values.len();
        if k == 0 {
            (self.values[1] - self.values[0]) / self.h
        } else if k == m - 1 {
            (self.values[m - 1] - self.values[m - 2]) / self.h
        } else {
            (self.values[k + 1] - self.values[k - 1]) / (2.0 * self.h)
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let m = self.values.len();
        let s = (y - self.x0) / self.h;
        if s < 0.0 || s > (m - 1) as f64 {
            return 0.0;
        }
        let k = (s.floor() as usize).min(m - 2);
        let t = s - k as f64;
        let (h00, h10, h01, h11) = (
            2.0 * t * t * t - 3.0 * t * t + 1.0,
            t * t * t - 2.0 * t * t + t,
            -2.0 * t * t * t + 3.0 * t * t,
            t * t * t - t * t,
        );
        h00 * self.values[k]
            + h10 * self.h * self.slope(k)
            + h01 * self.values[k + 1]
            + h11 * self.h * self.slope(k + 1)
    }
}

/// A compactly supported signal on ℝ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Signal {
    Builtin(Builtin),
    Samples(SampledSignal),
    Zero,
}

impl Signal {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Samples(s) => s.eval(y),
            Signal::Builtin(b) => match b {
                Builtin::Heaviside => {
                    if y < 0.0 {
                        bump(y)
                    } else {
                        0.0
                    }
                }
                Builtin::Abs => y.abs() * bump(y),
                Builtin::Bump => bump(y),
                Builtin::Gaussian => {
                    if y.abs() <= 10.0 {
                        (-0.5 * y * y).exp()
                    } else {
                        0.0
                    }
                }
            },
        }
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Signal::Zero => (0.0, 0.0),
            Signal::Samples(s) => (s.x0, s.x0 + s.h * (s.values.len() - 1) as f64),
            Signal::Builtin(Builtin::Heaviside) => (-4.0, 0.0),
            Signal::Builtin(Builtin::Gaussian) => (-10.0, 10.0),
            Signal::Builtin(_) => (-4.0, 4.0),
        }
    }

    /// Points where the signal fails to be real-analytic.
    pub fn singular_support(&self) -> Vec<f64> {
        match self {
            Signal::Zero => vec![],
            Signal::Samples(_) => {
                let (a, b) = self.support();
                vec![a, b]
            }
            Signal::Builtin(Builtin::Heaviside) => vec![-4.0, 0.0],
            Signal::Builtin(Builtin::Abs) => vec![-4.0, 0.0, 4.0],
            Signal::Builtin(Builtin::Bump) => vec![-4.0, 4.0],
            Signal::Builtin(Builtin::Gaussian) => vec![],
        }
    }

    /// Quadrature breakpoints: the support ends, non-smooth points, and sample nodes.
    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.support();
        let mut pts = vec![a, b];
        match self {
            Signal::Samples(s) => {
                pts.extend((0..s.values.len()).map(|k| s.x0 + k as f64 * s.h));
            }
            _ => pts.extend(self.singular_support()),
        }
        pts.retain(|p| *p >= a && *p <= b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Distance below which `|ω| = 1` transforms are refused.
    fn margin(&self) -> f64 {
        match self {
            Signal::Samples(s) => s.h,
            _ => 0.0,
        }
    }
}

/// `∫ g(y) dy` over the support of `u`, split at its breakpoints.
fn integrate_signal<F>(u: &Signal, g: F, tol: f64) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    let pts = u.breakpoints();
    let mut total = C64::new(0.0, 0.0);
    let per = tol / pts.len().max(1) as f64;
    for w in pts.windows(2) {
        let (v, _) = integrate(|y| Ok(g(y) * u.eval(y)), w[0], w[1], per)?;
        total += v;
    }
    Ok(total)
}

/// `Tu(x,ω) = ∫ kernel(x,ω,y) u(y) dy` in one dimension for `|ω| ≤ 1`.
///
/// The kernel is not locally integrable at `y = x` when `|ω| = 1`, so such
/// points inside the support (widened by one sample cell) are refused; use
/// `|ω| < 1` or [`fbi_transform_fiber`] there.
pub fn fbi_transform(u: &Signal, points: &[(f64, f64)]) -> Result<Vec<C64>> {
    let (a, b) = u.support();
    let m = u.margin();
    points
        .par_iter()
        .map(|&(x, om)| {
            check_point(1, &[x], &[om], &[x])?;
            if matches!(u, Signal::Zero) {
                return Ok(C64::new(0.0, 0.0));
            }
            let inside = x >= a - m && x <= b + m;
            if inside && (1.0 - om.abs()) < 1e-12 {
                return Err(Error::Domain {
                    node: "fbi_transform".into(),
                    reason: format!("x = {x} lies in the support with |ω| = 1; the kernel is not integrable there"),
                });
            }
            let s = kernel_exponent(1);
            let floor = (0.5 * (1.0 - om * om)).max(if inside { 0.0 } else { 0.5 * (x - x.clamp(a, b)).powi(2) });
            let scale = gamma(s) * floor.max(1e-300).powf(-s) * (b - a).max(1e-300);
            integrate_signal(
                u,
                |y| {
                    let phi = fbi_phase(&[x], &[om], &[y]);
                    (-s * (C64::new(0.0, -1.0) * phi).ln()).exp() * gamma(s)
                },
                1e-13 * scale,
            )
        })
        .collect()
}

/// `F(t) = ∫ e^{itφ(x,ω,y)} u(y) dy` in one dimension.
pub fn fiber_integral(u: &Signal, x: f64, omega: f64, t: f64) -> Result<C64> {
    // absolute tolerance relative to ∫|u| e^{−t Im φ}, which bounds |F| without cancellation
    let (l1, _) = integrate_signal_abs(u, |y| (-t * fbi_phase(&[x], &[omega], &[y]).im).exp())?;
    if l1 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    integrate_signal(
        u,
        |y| (C64::new(0.0, t) * fbi_phase(&[x], &[omega], &[y])).exp(),
        1e-13 * l1,
    )
}

fn integrate_signal_abs<F>(u: &Signal, w: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let pts = u.breakpoints();
    let mut total = 0.0;
    for p in pts.windows(2) {
        let (v, e) = integrate(
            |y| Ok(C64::new(w(y) * u.eval(y).abs(), 0.0)),
            p[0],
            p[1],
            1e-6,
        )?;
        total += v.re + e;
    }
    Ok((total, 0.0))
}

/// `Tu(x,ω) = ∫_0^∞ t^{(n+1)/4} F(t) dt`, the transform with the integrals exchanged.
///
/// Converges when `F` decays faster than `t^{−5/4}`, in particular at points
/// where `u` is analytic.
pub fn fbi_transform_fiber(u: &Signal, x: f64, omega: f64, t_max: f64) -> Result<C64> {
    let p = 0.5;
    let (v, _) = integrate(
        |t| Ok(fiber_integral(u, x, omega, t)? * t.powf(p)),
        0.0,
        t_max,
        1e-11,
    )?;
    Ok(v)
}

/// Decay model selected by [`wavefront_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    Exponential,
    Polynomial,
    Unclassified,
}

/// A model wins when its log-space RMS residual is this many times smaller.
pub const SELECTION_FACTOR: f64 = 2.0;

/// Both fits are deemed poor above this RMS log-residual.
pub const POOR_FIT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub x: f64,
    pub omega: f64,
    pub t: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// `log|F| = a − c t`.
    pub exp_intercept: f64,
    pub rate: f64,
    pub exp_rms: f64,
    /// `log|F| = a − p log t`.
    pub poly_intercept: f64,
    pub power: f64,
    pub poly_rms: f64,
    pub model: DecayModel,
    /// Diagnostic `log|F| = a − c t − q log t`; not used for selection.
    pub mixed_rate: f64,
    pub mixed_power: f64,
    pub mixed_rms: f64,
}

/// Least squares for `y ≈ a + b u + c v`; returns `(a, b, c, rms)`.
fn fit_two_regressors(u: &[f64], v: &[f64], y: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let m = y.len() as f64;
    let mean = |z: &[f64]| z.iter().sum::<f64>() / m;
    let (mu, mv, my) = (mean(u), mean(v), mean(y));
    let (mut suu, mut svv, mut suv, mut suy, mut svy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let (du, dv, dy) = (u[i] - mu, v[i] - mv, y[i] - my);
        suu += du * du;
        svv += dv * dv;
        suv += du * dv;
        suy += du * dy;
        svy += dv * dy;
    }
    let det = suu * svv - suv * suv;
    if det.abs() <= 1e-14 * suu * svv {
        return None;
    }
    let b = (suy * svv - svy * suv) / det;
    let c = (svy * suu - suy * suv) / det;
    let a = my - b * mu - c * mv;
    let ss: f64 = (0..y.len())
        .map(|i| (y[i] - a - b * u[i] - c * v[i]).powi(2))
        .sum();
    Some((a, b, c, (ss / m).sqrt()))
}

fn rms_residual(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    (ss / xs.len() as f64).sqrt()
}

/// Fits exponential and polynomial decay of `|F(t)|` on a uniform `t`-grid and selects a model.
pub fn wavefront_probe(
    u: &Signal,
    x: f64,
    omega: f64,
    t_range: (f64, f64),
    samples: usize,
) -> Result<DecayFit> {
    let (t_min, t_max) = t_range;
    if t_min < 5.0 || t_max <= t_min || samples < 3 {
        return Err(Error::Invalid(
            "probe needs 5 ≤ t_min < t_max and at least 3 samples".into(),
        ));
    }
    if (omega.abs() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain {
            node: "omega".into(),
            reason: "wavefront probes need a unit direction".into(),
        });
    }
    let t: Vec<f64> = (0..samples)
        .map(|k| t_min + (t_max - t_min) * k as f64 / (samples - 1) as f64)
        .collect();
    let magnitudes: Vec<f64> = t
        .par_iter()
        .map(|&tt| fiber_integral(u, x, omega, tt).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    if magnitudes.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Divergent(
            "fiber integral vanished or is not finite".into(),
        ));
    }
    let logs: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let log_t: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let e = fit_line(&t, &logs).ok_or_else(|| Error::Invalid("degenerate t-grid".into()))?;
    let p = fit_line(&log_t, &logs).ok_or_else(|| Error::Invalid("degenerate t-grid".into()))?;
    let exp_rms = rms_residual(&t, &logs, e.intercept, e.slope);
    let poly_rms = rms_residual(&log_t, &logs, p.intercept, p.slope);
    let model = if exp_rms.min(poly_rms) > POOR_FIT {
        DecayModel::Unclassified
    } else if exp_rms * SELECTION_FACTOR <= poly_rms {
        DecayModel::Exponential
    } else if poly_rms * SELECTION_FACTOR <= exp_rms {
        DecayModel::Polynomial
    } else {
        DecayModel::Unclassified
    };
    let (_, mb, mc, mixed_rms) =
        fit_two_regressors(&t, &log_t, &logs).unwrap_or((0.0, f64::NAN, f64::NAN, f64::NAN));
    Ok(DecayFit {
        x,
        omega,
        t,
        magnitudes,
        exp_intercept: e.intercept,
        rate: -e.slope,
        exp_rms,
        poly_intercept: p.intercept,
        power: -p.slope,
        poly_rms,
        model,
        mixed_rate: -mb,
        mixed_power: -mc,
        mixed_rms,
    })
}

/// Probe points `(x, ω)` for the classification corpus of `u`.
///
/// Singular directions sit on the singular support; regular points are at
/// distances 0.3, 0.5 and 1 from it.
pub fn corpus_points(u: &Signal) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let sing = u.singular_support();
    let mut singular = Vec::new();
    if sing.contains(&0.0) {
        singular.push((0.0, 1.0));
        singular.push((0.0, -1.0));
    }
    let mut regular = Vec::new();
    for cand in [-1.0, -0.5, -0.3, 0.3, 0.5, 1.0] {
        let d = sing
            .iter()
            .map(|s| (cand - s).abs())
            .fold(f64::INFINITY, f64::min);
        if d >= 0.3 - 1e-12 {
            for om in [1.0, -1.0] {
                regular.push((cand, om));
            }
        }
    }
    (singular, regular)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusClassification {
    pub signal: String,
    pub singular: Vec<DecayFit>,
    pub regular: Vec<DecayFit>,
    pub pass: bool,
}

/// Probes every corpus point and checks the singular/regular dichotomy.
///
/// `power_window` constrains the fitted power at singular points, `min_rate`
/// the exponential rate at regular ones.
pub fn classify_corpus(
    u: &Signal,
    t_range: (f64, f64),
    samples: usize,
    power_window: Option<(f64, f64)>,
    min_rate: f64,
) -> Result<CorpusClassification> {
    let (sp, rp) = corpus_points(u);
    let singular: Vec<DecayFit> = sp
        .iter()
        .map(|&(x, om)| wavefront_probe(u, x, om, t_range, samples))
        .collect::<Result<_>>()?;
    let regular: Vec<DecayFit> = rp
        .iter()
        .map(|&(x, om)| wavefront_probe(u, x, om, t_range, samples))
        .collect::<Result<_>>()?;
    let sing_ok = singular.iter().all(|f| {
        f.model == DecayModel::Polynomial
            && power_window.is_none_or(|(lo, hi)| f.power >= lo && f.power <= hi)
    });
    let reg_ok = regular
        .iter()
        .all(|f| f.model == DecayModel::Exponential && f.rate >= min_rate);
    Ok(CorpusClassification {
        signal: match u {
            Signal::Builtin(b) => b.name().into(),
            Signal::Samples(_) => "samples".into(),
            Signal::Zero => "zero".into(),
        },
        singular,
        regular,
        pass: sing_ok && reg_ok,
    })
}

/// Long-format CSV `x,omega,t,abs_F`.
pub fn decay_csv(fits: &[DecayFit]) -> String {
    let mut out = String::from("x,omega,t,abs_F\n");
    for f in fits {
        for (t, m) in f.t.iter().zip(&f.magnitudes) {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt17(f.x),
                fmt17(f.omega),
                fmt17(*t),
                fmt17(*m)
            );
        }
    }
    out
}

/// `∂_{z̄} Tu` for `z = x − iω` by fourth-order central differences, relative to `|∂_z Tu|`.
pub fn holomorphy_residual(u: &Signal, x: f64, omega: f64, h: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .flat_map(|&k| [(x + k * h, omega), (x, omega + k * h)])
        .collect();
    let v = fbi_transform(u, &pts)?;
    let d = |i: usize| (v[i] - v[2 + i] * 8.0 + v[4 + i] * 8.0 - v[6 + i]) / (12.0 * h);
    let dx = d(0);
    let dw = d(1);
    // z = x − iω: ∂_z̄ = (∂_x − i∂_ω)/2 and ∂_z = (∂_x + i∂_ω)/2
    let dbar = (dx - C64::new(0.0, 1.0) * dw) * 0.5;
    let dz = (dx + C64::new(0.0, 1.0) * dw) * 0.5;
    Ok(dbar.norm() / dz.norm())
}

/// `|Tu(x, ω)|` at a unit-ball point, for decay plots.
pub fn transform_profile(u: &Signal, xs: &[f64], omega: f64) -> Result<Vec<f64>> {
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, omega)).collect();
    Ok(fbi_transform(u, &pts)?.iter().map(|v| v.norm()).collect())
}

/// Leading jump contribution `|u(0⁻)| / t` at `(0, ±1)`.
pub fn jump_leading_term(u: &Signal, t: f64) -> f64 {
    u.eval(-1e-300).abs() / t
}
