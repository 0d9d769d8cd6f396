//! The model cylinder `ℝⁿ × S^{n−1}`: sphere moments `m_n`, their formal
//! amplitude, the Szegő kernel and its reproducing property.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fit::{fit_line, ln_factorial};
use crate::quad::integrate;
use crate::report::fmt17;
use crate::C64;

/// Above this modulus `m_n` switches to the Hankel expansion.
pub const HANKEL_SWITCH: f64 = 40.0;

/// Minimal distance to the diagonal accepted by [`szego_kernel`].
pub const DIAGONAL_EXCLUSION: f64 = 1e-3;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Area of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// `m_n(r) = e^{E} · mantissa`, with `E = |Re r|` so large arguments do not overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: C64,
    pub exponent: f64,
}

impl Scaled {
    pub fn value(&self) -> C64 {
        self.mantissa * self.exponent.exp()
    }

    /// `self/other` as a plain number.
    pub fn ratio(&self, other: &Scaled) -> C64 {
        self.mantissa / other.mantissa * (self.exponent - other.exponent).exp()
    }
}

/// Hankel coefficients `a_k(ν) = Π_{i≤k} (4ν² − (2i−1)²) / (k! 8^k)`.
pub fn hankel_coefficients(nu: f64, count: usize) -> Vec<f64> {
    let mu = 4.0 * nu * nu;
    let mut out = Vec::with_capacity(count);
    let mut a = 1.0;
    for k in 0..count {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (8.0 * k as f64);
        }
        out.push(a);
    }
    out
}

/// Asymptotic sums `Σ (∓1)^k a_k / r^k`, truncated at the smallest term.
fn hankel_sums(nu: f64, r: C64) -> (C64, C64) {
    let coeffs = hankel_coefficients(nu, 60);
    let mut s_minus = C64::new(0.0, 0.0);
    let mut s_plus = C64::new(0.0, 0.0);
    let mut pow = c(1.0);
    let mut last = f64::INFINITY;
    for (k, a) in coeffs.iter().enumerate() {
        let term = pow * *a;
        let size = term.norm();
        if size > last || size == 0.0 && k > 0 {
            break;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s_minus += term * sign;
        s_plus += term;
        if size < 1e-17 * s_plus.norm().max(1e-300) {
            break;
        }
        last = size;
        pow /= r;
    }
    (s_minus, s_plus)
}

/// `m_n(r)` for any complex `r`, scaled by `e^{|Re r|}`.
///
/// `m_n` is even and entire, so `r` is first reflected into `Re r ≥ 0`.
/// Small arguments use closed forms (`n = 1, 3`), a periodic trapezoid rule
/// (`n = 2`) or the power series; large ones the two-exponential Hankel
/// expansion of `(2π)^{n/2} r^{1−n/2} I_{n/2−1}(r)`.
pub fn mn_scaled(n: usize, r: C64) -> Result<Scaled> {
    if n == 0 {
        return Err(Error::Invalid("m_n needs n ≥ 1".into()));
    }
    let r = if r.re < 0.0 { -r } else { r };
    let e = r.re;
    let small = r.norm() <= HANKEL_SWITCH;
    let mant = match n {
        1 => C64::from_polar(1.0, r.im) + (-2.0 * r).exp() * C64::from_polar(1.0, r.im),
        3 if r.norm() < 1e-3 => {
            let r2 = r * r;
            (c(1.0) + r2 / 6.0 + r2 * r2 / 120.0) * (4.0 * PI) * (-e).exp()
        }
        3 => {
            (C64::from_polar(1.0, r.im) - (-2.0 * r).exp() * C64::from_polar(1.0, r.im))
                * (2.0 * PI)
                / r
        }
        2 if small => {
            // 2π I₀(r) = ∫_0^{2π} e^{r cos φ} dφ, spectrally accurate on a periodic grid
            let m = (2.0 * r.norm()).ceil() as usize + 64;
            let sum: C64 = (0..m)
                .map(|k| (r * (2.0 * PI * k as f64 / m as f64).cos() - e).exp())
                .sum();
            sum * (2.0 * PI / m as f64)
        }
        _ if small => {
            let nu = n as f64 / 2.0 - 1.0;
            let q = r * r / 4.0;
            let mut term = c(1.0 / gamma(nu + 1.0));
            let mut sum = term;
            for k in 1..400 {
                term *= q / (k as f64 * (k as f64 + nu));
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            sum * (2.0 * PI).powf(n as f64 / 2.0) * 2f64.powf(-nu) * (-e).exp()
        }
        _ => {
            let nu = n as f64 / 2.0 - 1.0;
            let (s_minus, s_plus) = hankel_sums(nu, r);
            let sign = if r.im >= 0.0 { 1.0 } else { -1.0 };
            // I_ν(r) ~ (e^r S₋ ± i e^{±iπν} e^{−r} S₊)/√(2πr) for Im r ≷ 0
            let second = C64::new(0.0, sign) * C64::from_polar(1.0, sign * PI * nu);
            let bracket = C64::from_polar(1.0, r.im) * s_minus
                + second * (-2.0 * e).exp() * C64::from_polar(1.0, -r.im) * s_plus;
            bracket * (2.0 * PI).powf(n as f64 / 2.0) * r.powf(-nu) / (2.0 * PI * r).sqrt()
        }
    };
    Ok(Scaled {
        mantissa: mant,
        exponent: e,
    })
}

/// Whether `r` lies in the cone `|Im r| < Re r`.
pub fn in_cone(r: C64) -> bool {
    r.im.abs() < r.re
}

/// `m_n(r) = ∫_{S^{n−1}} e^{r y_1} dy` for `r` in the cone `Re r > |Im r|`.
pub fn eval_mn(n: usize, r: C64) -> Result<C64> {
    if !in_cone(r) {
        return Err(Error::Domain {
            node: format!("m_{n}"),
            reason: format!("argument {r} outside the cone Re r > |Im r|"),
        });
    }
    Ok(mn_scaled(n, r)?.value())
}

/// `e^{−r} m_n(r)` for `r` in the cone.
pub fn eval_mn_amplitude(n: usize, r: C64) -> Result<C64> {
    if !in_cone(r) {
        return Err(Error::Domain {
            node: format!("m_{n}"),
            reason: format!("argument {r} outside the cone Re r > |Im r|"),
        });
    }
    let s = mn_scaled(n, r)?;
    Ok(s.mantissa * C64::from_polar(1.0, -r.im))
}

/// `e^{−r} m_n(r)` by adaptive quadrature of `|S^{n−2}| ∫_0^π e^{r(cos φ − 1)} sin^{n−2} φ dφ`.
pub fn eval_mn_amplitude_quadrature(n: usize, r: C64) -> Result<C64> {
    if n == 1 {
        return Ok(c(1.0) + (-2.0 * r).exp());
    }
    let area = sphere_area(n - 2);
    let (v, _) = integrate(
        |phi| Ok((r * (phi.cos() - 1.0)).exp() * phi.sin().powi(n as i32 - 2)),
        0.0,
        PI,
        1e-15,
    )?;
    Ok(v * area)
}

/// Evaluation route for [`SphereMoment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MnMode {
    Closed,
    Quadrature,
}

/// `m_n` with a selectable evaluation route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereMoment {
    pub n: usize,
    pub mode: MnMode,
}

impl SphereMoment {
    /// `e^{−r} m_n(r)`.
    pub fn amplitude(&self, r: C64) -> Result<C64> {
        match self.mode {
            MnMode::Closed => eval_mn_amplitude(self.n, r),
            MnMode::Quadrature => {
                if !in_cone(r) {
                    return Err(Error::Domain {
                        node: format!("m_{}", self.n),
                        reason: format!("argument {r} outside the cone"),
                    });
                }
                eval_mn_amplitude_quadrature(self.n, r)
            }
        }
    }

    pub fn eval(&self, r: C64) -> Result<C64> {
        Ok(self.amplitude(r)? * r.exp())
    }
}

/// Formal amplitude of `e^{−r} m_n(r) ~ Σ_j c_j r^{−(n−1)/2−j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MnAmplitude {
    pub n: usize,
    /// Exponent of the leading power, `−(n−1)/2`.
    pub leading_power: f64,
    pub coeffs: Vec<f64>,
}

impl MnAmplitude {
    /// `Σ_{j≤J} c_j r^{p−j}`.
    pub fn partial_sum(&self, r: C64, j_max: usize) -> C64 {
        self.coeffs
            .iter()
            .take(j_max + 1)
            .enumerate()
            .map(|(j, cj)| r.powf(self.leading_power - j as f64) * *cj)
            .sum()
    }
}

/// `c_j = (2π)^{(n−1)/2} · binom(p, j) · (−1/2)^j · (p+1)_j` with `p = (n−3)/2`.
///
/// This is the Laplace expansion of `|S^{n−2}| ∫_0^2 e^{−ry} (y(2−y))^{p} dy`;
/// the series terminates for odd `n`.
pub fn mn_formal_amplitude(n: usize, j_max: usize) -> Result<MnAmplitude> {
    if n == 0 {
        return Err(Error::Invalid("m_n needs n ≥ 1".into()));
    }
    let p = (n as f64 - 3.0) / 2.0;
    let mut coeffs = Vec::with_capacity(j_max + 1);
    let mut binom = 1.0;
    let mut rising = 1.0;
    let lead = (2.0 * PI).powf((n as f64 - 1.0) / 2.0);
    for j in 0..=j_max {
        if j > 0 {
            let jf = j as f64;
            binom *= (p - jf + 1.0) / jf;
            rising *= p + jf;
        }
        coeffs.push(lead * binom * (-0.5f64).powi(j as i32) * rising);
    }
    Ok(MnAmplitude {
        n,
        leading_power: -(n as f64 - 1.0) / 2.0,
        coeffs,
    })
}

/// The amplitude with the printed prefactor `2^{(n−1)/2}|S^{n−2}|(n−1)(n−3)⋯(n−2j+1)/(2^j j!) Γ((n+1)/2+j)`
/// and powers `r^{−(n+1)/2−j}`, kept to measure its disagreement with `m_n`.
pub fn mn_printed_amplitude(n: usize, j_max: usize) -> Result<MnAmplitude> {
    if n < 2 {
        return Err(Error::Invalid("the printed amplitude needs n ≥ 2".into()));
    }
    let nf = n as f64;
    let base = 2f64.powf((nf - 1.0) / 2.0) * sphere_area(n - 2);
    let coeffs = (0..=j_max)
        .map(|j| {
            let prod: f64 = (1..=j).map(|i| nf - 2.0 * i as f64 + 1.0).product();
            base * prod / (2f64.powi(j as i32) * crate::jets::factorial(j))
                * gamma((nf + 1.0) / 2.0 + j as f64)
        })
        .collect();
    Ok(MnAmplitude {
        n,
        leading_power: -(nf + 1.0) / 2.0,
        coeffs,
    })
}

/// Relative residual floor below which partial-sum residuals are round-off.
pub const MN_RESIDUAL_FLOOR: f64 = 1e-12;

/// Partial sums of the formal amplitude against `e^{−r} m_n(r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MnAsymptoticReport {
    pub n: usize,
    pub radii: Vec<f64>,
    pub exact: Vec<f64>,
    /// `residuals[J][i] = |e^{−r_i} m_n(r_i) − Σ_{j≤J} c_j r_i^{p−j}|`.
    pub residuals: Vec<Vec<f64>>,
    /// `E_J = max_r residual · r^{(n−1)/2+J+1} / J!` over residuals above the floor.
    pub envelope: Vec<f64>,
    pub c_fit: f64,
    pub rho_fit: f64,
    pub log_residual: f64,
    /// True when every residual is at the round-off floor (finite expansion).
    pub exact_expansion: bool,
    pub pass: bool,
}

/// Fits `residual_J(r) ≈ C ρ^J J! r^{−(n−1)/2−J−1}` over `r ∈ radii`, `J ≤ j_max`.
pub fn mn_asymptotic_profile(n: usize, j_max: usize, radii: &[f64]) -> Result<MnAsymptoticReport> {
    let amp = mn_formal_amplitude(n, j_max)?;
    let exact: Vec<f64> = radii
        .iter()
        .map(|&r| eval_mn_amplitude(n, c(r)).map(|v| v.re))
        .collect::<Result<_>>()?;
    let mut residuals = Vec::with_capacity(j_max + 1);
    let mut envelope = Vec::with_capacity(j_max + 1);
    let mut all_floor = true;
    for j in 0..=j_max {
        let mut row = Vec::with_capacity(radii.len());
        let mut env: f64 = 0.0;
        for (&r, &ex) in radii.iter().zip(&exact) {
            let res = (ex - amp.partial_sum(c(r), j).re).abs();
            row.push(res);
            if res > MN_RESIDUAL_FLOOR * ex.abs() {
                all_floor = false;
                let scaled = (res.ln() + ((n as f64 - 1.0) / 2.0 + j as f64 + 1.0) * r.ln()
                    - ln_factorial(j))
                .exp();
                env = env.max(scaled);
            }
        }
        residuals.push(row);
        envelope.push(env);
    }
    let (ns, ys): (Vec<f64>, Vec<f64>) = envelope
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0.0)
        .map(|(j, e)| (j as f64, e.ln()))
        .unzip();
    let (c_fit, rho_fit, log_residual) = match fit_line(&ns, &ys) {
        Some(f) => (f.intercept.exp(), f.slope.exp(), f.rel_residual),
        None => (ys.first().map(|y| y.exp()).unwrap_or(0.0), 1.0, 0.0),
    };
    Ok(MnAsymptoticReport {
        n,
        radii: radii.to_vec(),
        exact,
        residuals,
        envelope,
        c_fit,
        rho_fit,
        log_residual,
        exact_expansion: all_floor,
        pass: log_residual <= crate::borel::LOG_FIT_TOLERANCE,
    })
}

/// CSV with columns `r,exact,partial_0..partial_J,residual_J`.
pub fn mn_csv(n: usize, j_max: usize, radii: &[f64]) -> Result<String> {
    let amp = mn_formal_amplitude(n, j_max)?;
    let mut out = String::from("r,exact");
    for j in 0..=j_max {
        let _ = write!(out, ",partial_{j}");
    }
    out.push_str(",residual\n");
    for &r in radii {
        let ex = eval_mn_amplitude(n, c(r))?.re;
        let _ = write!(out, "{},{}", fmt17(r), fmt17(ex));
        let mut last = 0.0;
        for j in 0..=j_max {
            last = amp.partial_sum(c(r), j).re;
            let _ = write!(out, ",{}", fmt17(last));
        }
        let _ = writeln!(out, ",{}", fmt17((ex - last).abs()));
    }
    Ok(out)
}

/// Value of the Szegő kernel with quadrature metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SzegoEvaluation {
    pub n: usize,
    pub z: Vec<[f64; 2]>,
    pub w: Vec<[f64; 2]>,
    pub value: [f64; 2],
    /// `|2 + i s|` with `s² = Σ (z_j − w̄_j)²`, `Im s ≥ 0`: zero exactly on the diagonal.
    pub diagonal_distance: f64,
    /// Angle of the rotated radial ray.
    pub ray_angle: f64,
    /// Exponential decay rate along the ray.
    pub decay_rate: f64,
    pub error_estimate: f64,
}

impl SzegoEvaluation {
    pub fn kernel(&self) -> C64 {
        C64::new(self.value[0], self.value[1])
    }
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn check_tube_point(n: usize, z: &[C64], name: &str) -> Result<()> {
    if z.len() != n {
        return Err(Error::Shape(format!(
            "{name} has {} coordinates, expected {n}",
            z.len()
        )));
    }
    let im: f64 = z.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    if im > 1.0 + 1e-12 {
        return Err(Error::Domain {
            node: name.into(),
            reason: format!("|Im {name}| = {im} exceeds 1"),
        });
    }
    Ok(())
}

/// `s = √(Σ ζ_j²)` with `Im s ≥ 0`, for `ζ = z − w̄`.
fn kernel_s(z: &[C64], w: &[C64]) -> C64 {
    let s2: C64 = z
        .iter()
        .zip(w)
        .map(|(a, b)| (a - b.conj()) * (a - b.conj()))
        .sum();
    let s = s2.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Ray angle maximizing the slower of the two exponential decay rates.
fn best_ray(s: C64) -> (f64, f64) {
    // dominant and recessive exponents of m_n(iρs)/m_n(2ρ) are −ρ(2 + is) and −ρ(2 − is)
    let q1 = C64::new(2.0, 0.0) + C64::new(0.0, 1.0) * s;
    let q2 = C64::new(2.0, 0.0) - C64::new(0.0, 1.0) * s;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in -120..=120 {
        let theta = k as f64 * (PI / 3.0) / 120.0;
        let rot = C64::from_polar(1.0, theta);
        let rate = (q1 * rot).re.min((q2 * rot).re);
        if rate > best.1 {
            best = (theta, rate);
        }
    }
    best
}

/// `K(z,w) = (2π)^{−n} ∫_{ℝⁿ} e^{i(z−w̄)·ξ} / m_n(2ξ) dξ`.
///
/// The angular integral is `∫_{S^{n−1}} e^{iρζ·ν} dν = m_n(iρs)` with
/// `s² = ζ·ζ`, leaving a radial integral in `ρ` which is taken along a ray
/// rotated into the sector `|arg ρ| ≤ π/3` where it decays exponentially.
pub fn szego_kernel(n: usize, z: &[C64], w: &[C64]) -> Result<SzegoEvaluation> {
    if n == 0 || n > 3 {
        return Err(Error::Invalid(format!(
            "Szegő kernel supports 1 ≤ n ≤ 3, got {n}"
        )));
    }
    check_tube_point(n, z, "z")?;
    check_tube_point(n, w, "w")?;
    let s = kernel_s(z, w);
    let dist = (C64::new(2.0, 0.0) + C64::new(0.0, 1.0) * s).norm();
    if dist < DIAGONAL_EXCLUSION {
        return Err(Error::Domain {
            node: "szego_kernel".into(),
            reason: format!(
                "pair within {dist:e} of the diagonal (exclusion radius {DIAGONAL_EXCLUSION:e})"
            ),
        });
    }
    let (theta, rate) = best_ray(s);
    let rot = C64::from_polar(1.0, theta);
    let integrand = |t: f64| -> Result<C64> {
        let rho = rot * t;
        let num = mn_scaled(n, C64::new(0.0, 1.0) * rho * s)?;
        let den = mn_scaled(n, rho * 2.0)?;
        Ok(rho.powi(n as i32 - 1) * num.ratio(&den) * rot)
    };
    let t_max = (45.0 + 5.0 * n as f64) / rate;
    let scale = gamma(n as f64) / ((2.0 * PI).powi(n as i32) * rate.powi(n as i32));
    let tol = 1e-13 * scale.max(1e-300) * (2.0 * PI).powi(n as i32);
    let (v, err) = integrate(integrand, 0.0, t_max, tol)?;
    let value = v / (2.0 * PI).powi(n as i32);
    Ok(SzegoEvaluation {
        n,
        z: pairs(z),
        w: pairs(w),
        value: [value.re, value.im],
        diagonal_distance: dist,
        ray_angle: theta,
        decay_rate: rate,
        error_estimate: err / (2.0 * PI).powi(n as i32),
    })
}

/// `K(z,w) = sech(π(z−w̄)/4)/8` for `n = 1`.
pub fn szego_kernel_n1_closed(z: C64, w: C64) -> C64 {
    c(1.0) / ((z - w.conj()) * (PI / 4.0)).cosh() / 8.0
}

/// Separable holomorphic test function `f(w) = Π_j exp(iζ_j w_j − w_j²/(2σ²))`, optionally conjugated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub zeta: Vec<f64>,
    pub sigma: f64,
    /// Use `conj(f(w))`, an anti-holomorphic probe.
    pub conjugate: bool,
}

impl TestFunction {
    pub fn holomorphic(zeta: Vec<f64>, sigma: f64) -> TestFunction {
        TestFunction {
            zeta,
            sigma,
            conjugate: false,
        }
    }

    fn factor(&self, j: usize, u: C64) -> C64 {
        if self.conjugate {
            let uc = u.conj();
            (C64::new(0.0, 1.0) * self.zeta[j] * uc - uc * uc / (2.0 * self.sigma * self.sigma))
                .exp()
                .conj()
        } else {
            (C64::new(0.0, 1.0) * self.zeta[j] * u - u * u / (2.0 * self.sigma * self.sigma)).exp()
        }
    }

    pub fn eval(&self, w: &[C64]) -> C64 {
        w.iter()
            .enumerate()
            .map(|(j, &u)| self.factor(j, u))
            .product()
    }

    /// Half-width `X` of the `x`-region and a bound on the discarded tail.
    fn truncation(&self) -> (f64, f64) {
        let x = self.sigma * 9.0;
        let tail = self.sigma
            * (2.0 * PI).sqrt()
            * statrs::function::erf::erfc(9.0 / 2f64.sqrt())
            * (1.0 / (2.0 * self.sigma * self.sigma)).exp()
            * self.zeta.iter().map(|z| z.abs()).sum::<f64>().exp();
        (x, tail)
    }
}

/// One reproducing-property sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceSample {
    pub z: Vec<[f64; 2]>,
    pub f: [f64; 2],
    pub sf: [f64; 2],
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub n: usize,
    pub function: TestFunction,
    pub samples: Vec<ReproduceSample>,
    pub max_rel_error: f64,
    pub x_truncation: f64,
    pub tail_estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sphere nodes and weights: `S⁰ = {±1}`, a uniform circle grid, or Gauss–Legendre × uniform for `S²`.
fn sphere_rule(n: usize, count: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / count as f64)
            })
            .collect(),
        _ => {
            // midpoint in cos(polar angle) is enough for the smooth integrands used here
            let m = count / 2;
            let mut out = Vec::new();
            for i in 0..m {
                let mu = -1.0 + (2.0 * i as f64 + 1.0) / m as f64;
                let s = (1.0 - mu * mu).sqrt();
                for k in 0..count {
                    let t = 2.0 * PI * k as f64 / count as f64;
                    out.push((
                        vec![s * t.cos(), s * t.sin(), mu],
                        (2.0 / m as f64) * (2.0 * PI / count as f64),
                    ));
                }
            }
            out
        }
    }
}

/// `Sf(z) = ∫_{ℝⁿ×S^{n−1}} K(z,w) f(w) dw` with the kernel's `ξ`-integral taken last.
///
/// `Sf(z) = (2π)^{−n} ∫ dξ e^{iz·ξ}/m_n(2ξ) ∫_{S^{n−1}} dω ∫_{|x'|≤X} e^{−i(x'−iω)·ξ} f(x'+iω) dx'`.
/// The `x'`-integrals factor over coordinates and are computed by adaptive
/// quadrature; the sphere and `ξ` integrals use trapezoid grids, which are
/// spectrally accurate for these analytic, rapidly decaying integrands.
pub fn reproduce_test(
    n: usize,
    f: &TestFunction,
    points: &[Vec<C64>],
    tolerance: f64,
) -> Result<ReproduceReport> {
    if n == 0 || n > 2 {
        return Err(Error::Invalid(format!(
            "reproduce_test supports n = 1, 2; got {n}"
        )));
    }
    if f.zeta.len() != n {
        return Err(Error::Shape("test function dimension mismatch".into()));
    }
    for z in points {
        check_tube_point(n, z, "z")?;
    }
    let (x_max, tail) = f.truncation();
    if tail > 0.1 * tolerance {
        return Err(Error::NoConvergence {
            achieved: tail,
            requested: tolerance,
        });
    }
    let zmax = points
        .iter()
        .flat_map(|z| z.iter().map(|v| v.re.abs()))
        .fold(0.0, f64::max);
    let half_width = f.zeta.iter().map(|z| z.abs()).fold(0.0, f64::max) + 9.0 / f.sigma;
    let h = PI / (x_max + zmax + 10.0);
    let count = (half_width / h).ceil() as i64;
    let xi_nodes: Vec<f64> = (-count..=count).map(|k| k as f64 * h).collect();
    let sphere = sphere_rule(n, 64);
    // x'-transforms X_j(ξ_j, ω_j) for every node pair
    let mut omega_values: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (om, _) in &sphere {
        for j in 0..n {
            if !omega_values[j].iter().any(|v| (v - om[j]).abs() < 1e-15) {
                omega_values[j].push(om[j]);
            }
        }
    }
    let transforms: Vec<Vec<Vec<C64>>> =
        (0..n)
            .map(|j| {
                omega_values[j]
                    .par_iter()
                    .map(|&om| {
                        xi_nodes
                            .iter()
                            .map(|&xi| {
                                let (v, _) = integrate(
                                    |x| {
                                        Ok(C64::from_polar(1.0, -x * xi)
                                            * f.factor(j, C64::new(x, om)))
                                    },
                                    -x_max,
                                    x_max,
                                    1e-14,
                                )?;
                                Ok(v)
                            })
                            .collect::<Result<Vec<C64>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
    let lookup = |j: usize, om: f64| -> usize {
        omega_values[j]
            .iter()
            .position(|v| (v - om).abs() < 1e-15)
            .expect("sphere node recorded")
    };
    let sphere_idx: Vec<(Vec<usize>, &Vec<f64>, f64)> = sphere
        .iter()
        .map(|(om, wt)| ((0..n).map(|j| lookup(j, om[j])).collect(), om, *wt))
        .collect();
    // all ξ multi-indices
    let mut grid: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                (0..xi_nodes.len()).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    let mut samples = Vec::with_capacity(points.len());
    for z in points {
        let partial: Vec<C64> = grid
            .par_iter()
            .map(|idx| {
                let xi: Vec<f64> = idx.iter().map(|&i| xi_nodes[i]).collect();
                let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                let den = mn_scaled(n, c(2.0 * norm))?;
                let mut acc = C64::new(0.0, 0.0);
                for (oi, om, wt) in &sphere_idx {
                    // e^{iz·ξ} e^{−ω·ξ} / m_n(2|ξ|) with the exponentials combined before scaling
                    let expo: C64 = z
                        .iter()
                        .zip(&xi)
                        .zip(om.iter())
                        .map(|((zj, x), o)| C64::new(0.0, 1.0) * zj * x - o * x)
                        .sum();
                    let mut prod = (expo - den.exponent).exp() / den.mantissa * *wt;
                    for j in 0..n {
                        prod *= transforms[j][oi[j]][idx[j]];
                    }
                    acc += prod;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let total: C64 = partial.iter().sum::<C64>() * h.powi(n as i32) / (2.0 * PI).powi(n as i32);
        let fz = f.eval(z);
        samples.push(ReproduceSample {
            z: pairs(z),
            f: [fz.re, fz.im],
            sf: [total.re, total.im],
            rel_error: (total - fz).norm() / fz.norm(),
        });
    }
    let max_rel_error = samples.iter().map(|s| s.rel_error).fold(0.0, f64::max);
    Ok(ReproduceReport {
        n,
        function: f.clone(),
        samples,
        max_rel_error,
        x_truncation: x_max,
        tail_estimate: tail,
        tolerance,
        pass: max_rel_error <= tolerance,
    })
}

/// `∫_{ℝ×{±1}} K(z,w) f(w) dw` with the closed-form `n = 1` kernel, for interior `z`.
pub fn reproduce_direct_n1(f: &TestFunction, z: C64) -> Result<C64> {
    if z.im.abs() >= 1.0 {
        return Err(Error::Domain {
            node: "reproduce_direct_n1".into(),
            reason: "direct kernel quadrature needs |Im z| < 1".into(),
        });
    }
    let (x_max, _) = f.truncation();
    let mut acc = C64::new(0.0, 0.0);
    for om in [1.0, -1.0] {
        let (v, _) = integrate(
            |x| {
                let w = C64::new(x, om);
                Ok(szego_kernel_n1_closed(z, w) * f.eval(&[w]))
            },
            -x_max - z.re.abs(),
            x_max + z.re.abs(),
            1e-13,
        )?;
        acc += v;
    }
    Ok(acc)
}

/// `ψ(x₁,ω₁,x₂,ω₂) = (i/4)(|x₁−x₂|² + |ω₁−ω₂|² + 2i(x₁−x₂)·(ω₁+ω₂))`.
pub fn toeplitz_phase(x1: &[f64], w1: &[f64], x2: &[f64], w2: &[f64]) -> C64 {
    let dx2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    let dw2: f64 = w1.iter().zip(w2).map(|(a, b)| (a - b) * (a - b)).sum();
    let cross: f64 = x1
        .iter()
        .zip(x2)
        .zip(w1.iter().zip(w2))
        .map(|((a, b), (p, q))| (a - b) * (p + q))
        .sum();
    C64::new(0.0, 0.25) * C64::new(dx2 + dw2, 2.0 * cross)
}

/// `ψ = i(1 + ζ·ζ/4)` with `ζ = z − w̄`, holomorphic in `z` and `w̄`; equals [`toeplitz_phase`]
/// when `z = x₁ + iω₁`, `w = x₂ + iω₂` with unit `ω₁, ω₂`.
pub fn toeplitz_phase_holomorphic(z: &[C64], w: &[C64]) -> C64 {
    let s2: C64 = z
        .iter()
        .zip(w)
        .map(|(a, b)| (a - b.conj()) * (a - b.conj()))
        .sum();
    C64::new(0.0, 1.0) * (c(1.0) + s2 / 4.0)
}

/// Holomorphic radial phase `ψ₂ = −2 + √(−Σ (z_j − w̄_j)²)` of the kernel.
pub fn radial_phase(z: &[C64], w: &[C64]) -> C64 {
    let s2: C64 = z
        .iter()
        .zip(w)
        .map(|(a, b)| (a - b.conj()) * (a - b.conj()))
        .sum();
    (-s2).sqrt() - 2.0
}

/// Kernel against its Fourier-integral model near the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FioComparison {
    pub n: usize,
    pub z: Vec<[f64; 2]>,
    pub w: Vec<[f64; 2]>,
    pub kernel: [f64; 2],
    pub model: [f64; 2],
    pub rel_difference: f64,
    pub psi: [f64; 2],
    pub psi2: [f64; 2],
}

/// Model `(2π)^{−n} ∫_0^∞ e^{rψ₂} b(2r) a(r√(−ζ·ζ)) r^{n−1} dr` with `a`, `b = 1/a` replaced
/// by their formal expansions.
///
/// `a(v)/a(2r) = (2r/v)^{(n−1)/2} Σ_m d_m r^{−m}`; the terms `m < n` integrate to
/// `d_m Γ(n−m) (−ψ₂)^{m−n}`, which carry the whole singularity at the diagonal.
/// Terms `m ≥ n` are locally integrable and are dropped.
pub fn szego_fio_model(n: usize, z: &[C64], w: &[C64], j_max: usize) -> Result<C64> {
    let amp = mn_formal_amplitude(n, j_max.max(n))?;
    let sigma = (-(z
        .iter()
        .zip(w)
        .map(|(a, b)| (a - b.conj()) * (a - b.conj()))
        .sum::<C64>()))
    .sqrt();
    let psi2 = sigma - 2.0;
    let m_max = n.min(j_max + 1);
    let c0 = amp.coeffs[0];
    // α_j = (c_j/c_0) σ^{−j}, β = 1/Σ (c_j/c_0) 2^{−j} r^{−j}, d = α·β
    let alpha: Vec<C64> = (0..m_max)
        .map(|j| sigma.powi(-(j as i32)) * (amp.coeffs[j] / c0))
        .collect();
    let g: Vec<f64> = (0..m_max)
        .map(|j| amp.coeffs[j] / c0 * 2f64.powi(-(j as i32)))
        .collect();
    let mut beta = vec![0.0; m_max];
    for k in 0..m_max {
        let mut v = if k == 0 { 1.0 } else { 0.0 };
        for i in 1..=k {
            v -= g[i] * beta[k - i];
        }
        beta[k] = v;
    }
    let mut total = C64::new(0.0, 0.0);
    for m in 0..m_max {
        let d: C64 = (0..=m).map(|i| alpha[i] * beta[m - i]).sum();
        total += d * gamma((n - m) as f64) * (-psi2).powi(m as i32 - n as i32);
    }
    let p = (n as f64 - 1.0) / 2.0;
    Ok(total * (c(2.0) / sigma).powf(p) / (2.0 * PI).powi(n as i32))
}

/// Compares [`szego_kernel`] with [`szego_fio_model`] for a near-diagonal boundary pair.
pub fn szego_fio_form(n: usize, z: &[C64], w: &[C64], j_max: usize) -> Result<FioComparison> {
    let k = szego_kernel(n, z, w)?.kernel();
    let model = szego_fio_model(n, z, w, j_max)?;
    let x1: Vec<f64> = z.iter().map(|v| v.re).collect();
    let w1: Vec<f64> = z.iter().map(|v| v.im).collect();
    let x2: Vec<f64> = w.iter().map(|v| v.re).collect();
    let w2: Vec<f64> = w.iter().map(|v| v.im).collect();
    let psi = toeplitz_phase(&x1, &w1, &x2, &w2);
    let psi2 = radial_phase(z, w);
    Ok(FioComparison {
        n,
        z: pairs(z),
        w: pairs(w),
        kernel: [k.re, k.im],
        model: [model.re, model.im],
        rel_difference: (k - model).norm() / k.norm(),
        psi: [psi.re, psi.im],
        psi2: [psi2.re, psi2.im],
    })
}

/// Boundary pair `z = iω`, `w = εω + iω` approaching the diagonal along `ω = e_1`.
pub fn diagonal_pair(n: usize, eps: f64) -> (Vec<C64>, Vec<C64>) {
    let mut z = vec![C64::new(0.0, 0.0); n];
    let mut w = vec![C64::new(0.0, 0.0); n];
    z[0] = C64::new(0.0, 1.0);
    w[0] = C64::new(eps, 1.0);
    (z, w)
}

/// CSV with columns `z,w,kernel_re,kernel_im,model_re,model_im,rel_error` for near-diagonal pairs.
pub fn szego_csv(rows: &[FioComparison]) -> String {
    let fmt_point = |p: &[[f64; 2]]| {
        p.iter()
            .map(|v| format!("{}{:+}i", fmt17(v[0]), v[1]))
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut out = String::from("z,w,kernel_re,kernel_im,model_re,model_im,rel_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_point(&r.z),
            fmt_point(&r.w),
            fmt17(r.kernel[0]),
            fmt17(r.kernel[1]),
            fmt17(r.model[0]),
            fmt17(r.model[1]),
            fmt17(r.rel_difference)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn closed_forms() {
        for r in [0.1, 1.0, 7.5, 30.0] {
            assert!(rel(eval_mn(1, c(r)).unwrap(), c(2.0 * r.cosh())) < 1e-14);
            assert!(rel(eval_mn(3, c(r)).unwrap(), c(4.0 * PI * r.sinh() / r)) < 1e-14);
        }
    }

    #[test]
    fn m3_matches_direct_sphere_quadrature() {
        // ∫_{S²} e^{r y₃} dy = 2π ∫_{−1}^{1} e^{rt} dt
        let r = 3.7;
        let (v, _) = integrate(|t| Ok(c((r * t).exp() * 2.0 * PI)), -1.0, 1.0, 1e-13).unwrap();
        assert!(rel(eval_mn(3, c(r)).unwrap(), v) < 1e-10);
    }

    #[test]
    fn closed_and_quadrature_modes_agree() {
        for n in [1, 2, 3, 4, 5] {
            let closed = SphereMoment {
                n,
                mode: MnMode::Closed,
            };
            let quad = SphereMoment {
                n,
                mode: MnMode::Quadrature,
            };
            for r in [0.1, 0.7, 3.0, 12.0, 39.0, 41.0, 50.0] {
                let a = closed.amplitude(c(r)).unwrap();
                let b = quad.amplitude(c(r)).unwrap();
                assert!(rel(a, b) < 1e-9, "n={n} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn complex_arguments_agree() {
        for n in [1, 2, 3, 4] {
            for r in [
                C64::new(5.0, 3.0),
                C64::new(45.0, -30.0),
                C64::new(2.0, 1.5),
            ] {
                let a = eval_mn_amplitude(n, r).unwrap();
                let b = eval_mn_amplitude_quadrature(n, r).unwrap();
                assert!(rel(a, b) < 1e-9, "n={n} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn circle_average_oracle_for_m2() {
        // m₂ of a vector argument by trapezoid over the circle, rotated off the axis
        let xi = [30.0 * 0.6, 30.0 * 0.8];
        let m = 512;
        let v: f64 = (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                (xi[0] * t.cos() + xi[1] * t.sin() - 30.0).exp()
            })
            .sum::<f64>()
            * 2.0
            * PI
            / m as f64;
        assert!((eval_mn_amplitude(2, c(30.0)).unwrap().re - v).abs() < 1e-12 * v);
    }

    #[test]
    fn outside_cone_is_rejected() {
        assert!(eval_mn(2, C64::new(1.0, 2.0)).is_err());
        assert!(eval_mn(2, c(-1.0)).is_err());
    }

    #[test]
    fn leading_asymptotics_n2() {
        let r = 50.0;
        let ratio = eval_mn(2, c(r)).unwrap().re / ((2.0 * PI / r).sqrt() * r.exp());
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn formal_amplitude_matches_hankel() {
        for n in 1..=6 {
            let amp = mn_formal_amplitude(n, 8).unwrap();
            let nu = n as f64 / 2.0 - 1.0;
            let hk = hankel_coefficients(nu, 9);
            for (j, (cj, a)) in amp.coeffs.iter().zip(&hk).enumerate() {
                let expected = (2.0 * PI).powf((n as f64 - 1.0) / 2.0)
                    * a
                    * if j % 2 == 0 { 1.0 } else { -1.0 };
                assert!(
                    (cj - expected).abs() <= 1e-13 * expected.abs().max(1.0),
                    "n={n} j={j}"
                );
            }
        }
        let a2 = mn_formal_amplitude(2, 1).unwrap();
        assert!((a2.coeffs[0] - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((a2.coeffs[1] / a2.coeffs[0] - 0.125).abs() < 1e-15);
        let a3 = mn_formal_amplitude(3, 3).unwrap();
        assert!((a3.coeffs[0] - 2.0 * PI).abs() < 1e-14);
        assert!(a3.coeffs[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn printed_amplitude_disagrees_for_n3() {
        // e^{−r} m₃(r) = 2π(1 − e^{−2r})/r, a single power r^{−1}
        let printed = mn_printed_amplitude(3, 0).unwrap();
        assert!((printed.coeffs[0] - 4.0 * PI).abs() < 1e-13);
        let r = 40.0;
        let exact = eval_mn_amplitude(3, c(r)).unwrap().re;
        let got = printed.partial_sum(c(r), 0).re;
        assert!((got / exact - 2.0 / r).abs() < 1e-12);
        let printed2 = mn_printed_amplitude(2, 0).unwrap();
        assert!((printed2.coeffs[0] - (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn asymptotic_ratio_within_two_over_r() {
        for n in 1..=3 {
            let c0 = mn_formal_amplitude(n, 0).unwrap().coeffs[0];
            for r in [20.0, 35.0, 80.0] {
                let ratio =
                    eval_mn_amplitude(n, c(r)).unwrap().re / (c0 * r.powf(-(n as f64 - 1.0) / 2.0));
                assert!((ratio - 1.0).abs() <= 2.0 / r);
            }
        }
    }

    #[test]
    fn n2_profile_fits_factorial_model() {
        let radii: Vec<f64> = (0..17).map(|i| 20.0 + 5.0 * i as f64).collect();
        let rep = mn_asymptotic_profile(2, 6, &radii).unwrap();
        assert!(!rep.exact_expansion);
        assert!(rep.pass, "{rep:?}");
        let odd = mn_asymptotic_profile(3, 4, &radii).unwrap();
        assert!(odd.exact_expansion);
    }

    #[test]
    fn n1_kernel_matches_sech_closed_form() {
        let pairs = [
            (C64::new(0.0, 0.5), C64::new(0.7, -0.2)),
            (C64::new(0.3, 1.0), C64::new(-0.4, 1.0)),
            (C64::new(1.0, -1.0), C64::new(0.0, 1.0)),
            (C64::new(0.0, 1.0), C64::new(0.3, 1.0)),
        ];
        for (z, w) in pairs {
            let k = szego_kernel(1, &[z], &[w]).unwrap().kernel();
            let exact = szego_kernel_n1_closed(z, w);
            assert!(rel(k, exact) < 1e-8, "{z} {w}: {k} vs {exact}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let z = [C64::new(0.2, 0.6), C64::new(-0.1, 0.3)];
        let w = [C64::new(-0.5, -0.4), C64::new(0.3, 0.8)];
        let a = szego_kernel(2, &z, &w).unwrap().kernel();
        let b = szego_kernel(2, &w, &z).unwrap().kernel();
        assert!((a - b.conj()).norm() <= 1e-9 * a.norm());
        let z3 = [C64::new(0.1, 0.5), C64::new(0.0, 0.2), C64::new(0.2, -0.3)];
        let w3 = [C64::new(-0.3, 0.1), C64::new(0.4, 0.6), C64::new(0.0, 0.0)];
        let a3 = szego_kernel(3, &z3, &w3).unwrap().kernel();
        let b3 = szego_kernel(3, &w3, &z3).unwrap().kernel();
        assert!((a3 - b3.conj()).norm() <= 1e-9 * a3.norm());
    }

    #[test]
    fn cauchy_riemann_in_z() {
        let w = [C64::new(0.1, -0.3), C64::new(0.2, 0.5)];
        let z0 = [C64::new(0.4, 0.2), C64::new(-0.2, 0.1)];
        let h = 1e-3;
        let k = |dz: C64| {
            let z = [z0[0] + dz, z0[1]];
            szego_kernel(2, &z, &w).unwrap().kernel()
        };
        // fourth-order stencils for ∂_x and ∂_y
        let d = |dir: C64| {
            (k(dir * (-2.0 * h)) - k(dir * (-h)) * 8.0 + k(dir * h) * 8.0 - k(dir * (2.0 * h)))
                / (12.0 * h)
        };
        let dx = d(c(1.0));
        let dy = d(C64::new(0.0, 1.0));
        let dbar = (dx + C64::new(0.0, 1.0) * dy) * 0.5;
        assert!(dbar.norm() <= 1e-6 * dx.norm(), "∂̄K = {dbar}, ∂K = {dx}");
    }

    #[test]
    fn diagonal_is_refused() {
        let z = [C64::new(0.0, 1.0)];
        assert!(szego_kernel(1, &z, &z).is_err());
        assert!(szego_kernel(1, &z, &[C64::new(0.0, 2.0)]).is_err());
    }

    #[test]
    fn reproduces_at_boundary_points_n1() {
        let f = TestFunction::holomorphic(vec![0.5], 1.0);
        let pts: Vec<Vec<C64>> = [
            (0.0, 1.0),
            (0.5, -1.0),
            (-0.7, 1.0),
            (1.2, -1.0),
            (0.3, 0.4),
        ]
        .iter()
        .map(|&(x, y)| vec![C64::new(x, y)])
        .collect();
        let rep = reproduce_test(1, &f, &pts, 1e-4).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn reproduces_at_boundary_points_n2() {
        let f = TestFunction::holomorphic(vec![0.4, -0.3], 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pts = vec![
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.3, -s), C64::new(-0.2, s)],
            vec![C64::new(-0.5, 0.0), C64::new(0.4, -1.0)],
        ];
        let rep = reproduce_test(2, &f, &pts, 1e-3).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn fio_model_n2_improves_toward_diagonal() {
        let mut last = f64::INFINITY;
        for eps in [0.3, 0.1, 0.05] {
            let (z, w) = diagonal_pair(2, eps);
            let d = szego_fio_form(2, &z, &w, 4).unwrap().rel_difference;
            assert!(d < last && d < 0.05, "eps {eps}: {d}");
            last = d;
        }
    }

    #[test]
    fn direct_kernel_route_agrees_n1() {
        let f = TestFunction::holomorphic(vec![0.5], 1.0);
        let z = C64::new(0.2, 0.5);
        let direct = reproduce_direct_n1(&f, z).unwrap();
        let fourier = reproduce_test(1, &f, &[vec![z]], 1e-4).unwrap();
        let s = fourier.samples[0].sf;
        assert!(rel(direct, f.eval(&[z])) < 1e-8);
        assert!(rel(C64::new(s[0], s[1]), direct) < 1e-8);
    }

    #[test]
    fn zeta_zero_family_is_reproduced() {
        let f = TestFunction::holomorphic(vec![0.0], 2.0);
        let rep = reproduce_test(1, &f, &[vec![C64::new(0.0, 1.0)]], 1e-4).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn antiholomorphic_probe_is_only_reported() {
        let f = TestFunction {
            zeta: vec![0.5],
            sigma: 1.0,
            conjugate: true,
        };
        let rep = reproduce_test(1, &f, &[vec![C64::new(0.0, 1.0)]], 1e-4).unwrap();
        assert!(rep.samples[0].sf[0].is_finite());
    }

    #[test]
    fn fio_model_off_diagonal_n1() {
        let (z, w) = diagonal_pair(1, 0.3);
        let cmp = szego_fio_form(1, &z, &w, 4).unwrap();
        assert!(cmp.rel_difference <= 0.05, "{cmp:?}");
        assert!(cmp.psi[1] > 0.0);
    }

    #[test]
    fn fio_scaling_toward_diagonal() {
        for n in 1..=2 {
            let k = |eps: f64| {
                let (z, w) = diagonal_pair(n, eps);
                szego_kernel(n, &z, &w).unwrap().kernel().norm()
            };
            let ratio = k(0.05) / k(0.1);
            let target = 2f64.powi(n as i32);
            assert!((ratio / target - 1.0).abs() <= 0.1, "n={n}: ratio {ratio}");
        }
    }

    #[test]
    fn radial_phase_is_a_function_of_toeplitz_phase() {
        // on the boundary ψ₂ = 2√(1 + iψ) − 2, so ψ₂ = iψ + O(|ψ|²)
        let x1 = [0.0, 0.0];
        let w1 = [1.0, 0.0];
        for eps in [0.3, 0.1, 0.05] {
            let x2 = [eps, 0.3 * eps];
            let ang = 0.5f64 * eps;
            let w2 = [ang.cos(), ang.sin()];
            let z: Vec<C64> = x1.iter().zip(&w1).map(|(a, b)| C64::new(*a, *b)).collect();
            let w: Vec<C64> = x2.iter().zip(&w2).map(|(a, b)| C64::new(*a, *b)).collect();
            let psi = toeplitz_phase(&x1, &w1, &x2, &w2);
            let psi2 = radial_phase(&z, &w);
            assert!((toeplitz_phase_holomorphic(&z, &w) - psi).norm() < 1e-15);
            let exact = (c(1.0) + C64::new(0.0, 1.0) * psi).sqrt() * 2.0 - 2.0;
            assert!((psi2 - exact).norm() < 1e-14, "eps {eps}");
            assert!(
                (psi2 - C64::new(0.0, 1.0) * psi).norm() <= psi.norm_sqr(),
                "eps {eps}"
            );
        }
    }
}
