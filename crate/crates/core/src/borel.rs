//! Ehrenpreis cutoffs and Borel realisation of formal symbols.
//!
//! Distances between boxes are measured in the max-norm, matching the cube
//! support of the tensor-product mollifier used in several dimensions.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, ln_factorial};
use crate::report::fmt17;
use crate::symbols::FormalSymbol;
use crate::C64;

/// The set where a cutoff must vanish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// A closed box.
    Box(Vec<(f64, f64)>),
    /// The complement of an open box.
    Outside(Vec<(f64, f64)>),
}

impl Region {
    fn dim(&self) -> usize {
        match self {
            Region::Box(b) | Region::Outside(b) => b.len(),
        }
    }
}

/// Max-norm distance from box `k` to region `l`; negative when they meet.
fn box_distance(k: &[(f64, f64)], l: &Region) -> f64 {
    match l {
        Region::Box(b) => k
            .iter()
            .zip(b)
            .map(|(&(klo, khi), &(llo, lhi))| (llo - khi).max(klo - lhi))
            .fold(f64::NEG_INFINITY, f64::max),
        Region::Outside(b) => k
            .iter()
            .zip(b)
            .map(|(&(klo, khi), &(blo, bhi))| (klo - blo).min(bhi - khi))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Unit-mass bump `exp(−1/(1−u²))` on `(−1, 1)`, unnormalized.
fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_prime(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - u * u;
        bump(u) * (-2.0 * u / (s * s))
    }
}

/// `∫_{-1}^{1} exp(−1/(1−u²)) du`.
pub fn bump_mass() -> f64 {
    // trapezoid is spectrally accurate for this flat-ended integrand
    let n = 4000;
    let h = 2.0 / n as f64;
    (1..n).map(|i| bump(-1.0 + i as f64 * h)).sum::<f64>() * h
}

/// `‖∇φ_c‖_{L¹} = 2 φ_c(0)` for the one-dimensional normalized bump of radius `c`.
pub fn mollifier_gradient_l1(c: f64) -> f64 {
    2.0 * bump(0.0) / (c * bump_mass())
}

/// Options for [`ehrenpreis_cutoffs`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffOptions {
    /// Grid spacing; defaults to `c/(10·N_max)`.
    pub h: Option<f64>,
    /// Derivative certificates are computed for `N` up to this value.
    pub certify_up_to: usize,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions {
            h: None,
            certify_up_to: 16,
        }
    }
}

#[derive(Clone, Debug)]
struct AxisCutoffs {
    x0: f64,
    h: f64,
    /// `chi[N-1][i]` is `χ_N(x0 + i h)`.
    chi: Vec<Vec<f64>>,
    /// `derivs[N-1][j-1]` is `∂^j χ_N` for `j ≤ min(N, 4)`.
    derivs: Vec<Vec<Vec<f64>>>,
    /// `cert[N-1][j]` is the sampled `max |∂^j χ_N|` for `j ≤ N`.
    cert: Vec<Vec<f64>>,
}

/// Ehrenpreis cutoffs `χ_1..χ_{N_max}` sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct CutoffFamily {
    inner: Vec<(f64, f64)>,
    outer: Region,
    intermediate: Vec<(f64, f64)>,
    c: f64,
    h: f64,
    n_max: usize,
    rho: f64,
    axes: Vec<AxisCutoffs>,
}

/// `Σ_j f[i−j] k[j] h` with `k` centered (odd length), zero outside the grid.
fn convolve(f: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    let half = (k.len() / 2) as isize;
    let n = f.len() as isize;
    let mut out = vec![0.0; f.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let i = i as isize;
        let mut acc = 0.0;
        for (jj, kv) in k.iter().enumerate() {
            let src = i - (jj as isize - half);
            if src >= 0 && src < n {
                acc += f[src as usize] * kv;
            }
        }
        *o = acc * h;
    }
    out
}

fn kernels(s: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let half = (s / h).ceil() as isize;
    let mut phi = Vec::with_capacity((2 * half + 1) as usize);
    let mut dphi = Vec::with_capacity((2 * half + 1) as usize);
    for j in -half..=half {
        let u = j as f64 * h / s;
        phi.push(bump(u) / s);
        dphi.push(bump_prime(u) / (s * s));
    }
    let mass: f64 = phi.iter().sum::<f64>() * h;
    for v in phi.iter_mut() {
        *v /= mass;
    }
    for v in dphi.iter_mut() {
        *v /= mass;
    }
    (phi, dphi)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Builds `χ_N = φ_{c/N} * … * φ_{c/N} * 1_{K'}` (`N` factors) for `N ≤ N_max`.
///
/// `K' = K + [−δ, δ]^d` with `δ = dist(K, L)/2`, and `c` must satisfy
/// `0 < c ≤ δ` so that `χ_N = 1` on `K` and `χ_N = 0` on `L`. In several
/// dimensions the mollifier is the tensor product of one-dimensional bumps and
/// `χ_N` factorizes over the axes. Derivatives `∂^j χ_N` replace `j` of the
/// mollifier factors by their exact derivatives.
pub fn ehrenpreis_cutoffs(
    k: &[(f64, f64)],
    l: &Region,
    n_max: usize,
    c: f64,
    opts: &CutoffOptions,
) -> Result<CutoffFamily> {
    if k.is_empty() || l.dim() != k.len() {
        return Err(Error::Shape(
            "K and L must be boxes of the same dimension".into(),
        ));
    }
    if n_max == 0 {
        return Err(Error::Invalid("N_max must be positive".into()));
    }
    let dist = box_distance(k, l);
    if dist <= 0.0 || dist.is_nan() {
        return Err(Error::Invalid(format!(
            "sets too close: dist(K, L) = {dist}"
        )));
    }
    let delta = dist / 2.0;
    if !(c > 0.0 && c <= delta) {
        return Err(Error::Invalid(format!(
            "mollifier scale c = {c} must lie in (0, dist(K, L)/2 = {delta}]"
        )));
    }
    let h_max = c / (10.0 * n_max as f64);
    let h = opts.h.unwrap_or(h_max);
    if h > h_max * (1.0 + 1e-12) || h <= 0.0 {
        return Err(Error::Invalid(format!(
            "grid too coarse: h = {h} exceeds c/(10 N_max) = {h_max}"
        )));
    }
    let intermediate: Vec<(f64, f64)> = k.iter().map(|&(a, b)| (a - delta, b + delta)).collect();
    let mut axes = Vec::with_capacity(k.len());
    for (axis, &(ka, kb)) in intermediate.iter().enumerate() {
        let mut lo = ka - c;
        let mut hi = kb + c;
        let (Region::Box(b) | Region::Outside(b)) = l;
        lo = lo.min(b[axis].0);
        hi = hi.max(b[axis].1);
        lo -= 4.0 * h;
        hi += 4.0 * h;
        let n = ((hi - lo) / h).ceil() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
        // cell averages of the indicator of [ka, kb]
        let indicator: Vec<f64> = grid
            .iter()
            .map(|&x| {
                let left = (x - 0.5 * h).max(ka);
                let right = (x + 0.5 * h).min(kb);
                ((right - left) / h).clamp(0.0, 1.0)
            })
            .collect();
        let mut chi = Vec::with_capacity(n_max);
        let mut derivs = Vec::with_capacity(n_max);
        let mut cert = Vec::with_capacity(n_max);
        for big_n in 1..=n_max {
            let (phi, dphi) = kernels(c / big_n as f64, h);
            // partial[m] = φ^{*m} * 1_{K'}
            let mut partial = vec![indicator.clone()];
            for m in 0..big_n {
                let next = convolve(&partial[m], &phi, h);
                partial.push(next);
            }
            let top = partial[big_n].clone();
            let keep = big_n.min(4);
            let certify = big_n <= opts.certify_up_to;
            let jmax = if certify { big_n } else { keep };
            let mut dlist = Vec::with_capacity(keep);
            let mut maxes = vec![max_abs(&top)];
            for j in 1..=jmax {
                let mut g = partial[big_n - j].clone();
                for _ in 0..j {
                    g = convolve(&g, &dphi, h);
                }
                if certify {
                    maxes.push(max_abs(&g));
                }
                if j <= keep {
                    dlist.push(g);
                }
            }
            chi.push(top);
            derivs.push(dlist);
            cert.push(if certify { maxes } else { Vec::new() });
        }
        axes.push(AxisCutoffs {
            x0: lo,
            h,
            chi,
            derivs,
            cert,
        });
    }
    Ok(CutoffFamily {
        inner: k.to_vec(),
        outer: l.clone(),
        intermediate,
        c,
        h,
        n_max,
        rho: mollifier_gradient_l1(c),
        axes,
    })
}

/// Relative slack in [`CutoffFamily::certificate_violations`].
pub const CERT_SLACK: f64 = 1e-12;

/// One failed certificate entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub axis: usize,
    pub n: usize,
    pub j: usize,
    pub sampled: f64,
    pub bound: f64,
}

impl CutoffFamily {
    /// Cutoffs for the radial profile: `χ_N = 1` on `[−1, 1]`, `0` outside `(−2, 2)`.
    pub fn radial_profile(n_max: usize, opts: &CutoffOptions) -> Result<CutoffFamily> {
        ehrenpreis_cutoffs(
            &[(-1.0, 1.0)],
            &Region::Outside(vec![(-2.0, 2.0)]),
            n_max,
            0.5,
            opts,
        )
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `ρ = ‖∇φ_c‖_{L¹}` (one-dimensional).
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn inner(&self) -> &[(f64, f64)] {
        &self.inner
    }

    pub fn outer(&self) -> &Region {
        &self.outer
    }

    pub fn intermediate(&self) -> &[(f64, f64)] {
        &self.intermediate
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Grid positions and samples of `χ_N` along `axis`.
    pub fn samples(&self, axis: usize, n: usize) -> Result<(Vec<f64>, &[f64])> {
        let ax = self.axis(axis)?;
        let v = self.chi_grid(ax, n)?;
        let xs = (0..v.len()).map(|i| ax.x0 + i as f64 * ax.h).collect();
        Ok((xs, v))
    }

    fn axis(&self, axis: usize) -> Result<&AxisCutoffs> {
        self.axes
            .get(axis)
            .ok_or_else(|| Error::Invalid(format!("axis {axis} out of range")))
    }

    fn chi_grid<'a>(&self, ax: &'a AxisCutoffs, n: usize) -> Result<&'a [f64]> {
        if n == 0 || n > self.n_max {
            return Err(Error::Invalid(format!(
                "cutoff index {n} outside 1..={}",
                self.n_max
            )));
        }
        Ok(&ax.chi[n - 1])
    }

    /// Sampled `max |∂^j χ_N|` along `axis` for `j = 0..=N`; empty when not certified.
    pub fn derivative_maxima(&self, axis: usize, n: usize) -> Result<&[f64]> {
        let ax = self.axis(axis)?;
        self.chi_grid(ax, n)?;
        Ok(&ax.cert[n - 1])
    }

    /// Entries violating `max |∂^j χ_N| ≤ (ρN)^j`; empty means the certificate holds.
    pub fn certificate_violations(&self) -> Vec<CertificateEntry> {
        let mut out = Vec::new();
        for (a, ax) in self.axes.iter().enumerate() {
            for (i, maxes) in ax.cert.iter().enumerate() {
                let n = i + 1;
                for (j, &m) in maxes.iter().enumerate() {
                    let bound = (self.rho * n as f64).powi(j as i32);
                    // round-off in the cell-averaged indicator reaches a few ulps
                    if m > bound * (1.0 + CERT_SLACK) {
                        out.push(CertificateEntry {
                            axis: a,
                            n,
                            j,
                            sampled: m,
                            bound,
                        });
                    }
                }
            }
        }
        out
    }

    /// Largest `N` with a stored certificate.
    pub fn certified_up_to(&self) -> usize {
        self.axes
            .iter()
            .map(|ax| ax.cert.iter().take_while(|c| !c.is_empty()).count())
            .min()
            .unwrap_or(0)
    }

    /// `χ_N` at `x` by cubic Hermite interpolation of the grid values and slopes.
    pub fn eval(&self, n: usize, x: &[f64]) -> Result<f64> {
        if x.len() != self.axes.len() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, cutoff has {}",
                x.len(),
                self.axes.len()
            )));
        }
        let mut acc = 1.0;
        for (ax, &xi) in self.axes.iter().zip(x) {
            acc *= self.eval_axis(ax, n, xi)?;
            if acc == 0.0 {
                break;
            }
        }
        Ok(acc)
    }

    fn eval_axis(&self, ax: &AxisCutoffs, n: usize, x: f64) -> Result<f64> {
        let v = self.chi_grid(ax, n)?;
        let d1 = &ax.derivs[n - 1][0];
        let s = (x - ax.x0) / ax.h;
        if s <= 0.0 || s >= (v.len() - 1) as f64 {
            return Ok(0.0);
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        let (p0, p1) = (v[i], v[i + 1]);
        let (m0, m1) = (d1[i] * ax.h, d1[i + 1] * ax.h);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1)
    }

    /// CSV with columns `position,value,d1..d<j>` for `χ_N` along `axis`, `j ≤ min(4, N)`.
    pub fn to_csv(&self, axis: usize, n: usize, n_derivs: usize) -> Result<String> {
        let ax = self.axis(axis)?;
        let v = self.chi_grid(ax, n)?;
        let j = n_derivs.min(4).min(ax.derivs[n - 1].len());
        let mut out = String::from("position,value");
        for k in 1..=j {
            let _ = write!(out, ",d{k}");
        }
        out.push('\n');
        for (i, val) in v.iter().enumerate() {
            let _ = write!(out, "{},{}", fmt17(ax.x0 + i as f64 * ax.h), fmt17(*val));
            for k in 0..j {
                let _ = write!(out, ",{}", fmt17(ax.derivs[n - 1][k][i]));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Borel realisation `a(x,θ) = Σ_ℓ a_ℓ(x,θ)(1 − χ_{ℓ+1}(c|θ|/(ℓ+1)))` of a formal symbol.
#[derive(Clone, Debug)]
pub struct RealizedAmplitude {
    symbol: FormalSymbol,
    c: f64,
    cutoffs: Arc<CutoffFamily>,
    warnings: Vec<String>,
}

/// Fitted factorial growth rate `R` from `sup_θ |a_k| |θ|^{k−d}/k! ≈ C R^k`.
pub fn fit_growth_rate(a: &FormalSymbol, x: &[f64], thetas: &[Vec<f64>]) -> Result<f64> {
    let mut ks = Vec::new();
    let mut ys = Vec::new();
    for k in 0..=a.order() {
        let ak = a.coeff(k);
        if ak.is_zero() {
            continue;
        }
        let mut sup: f64 = 0.0;
        for th in thetas {
            let r = norm(th);
            let v = eval_at(&ak, x, th)?.norm();
            sup = sup.max(v * r.powf(k as f64 - a.degree()));
        }
        if sup > 0.0 {
            ks.push(k as f64);
            ys.push(sup.ln() - ln_factorial(k));
        }
    }
    Ok(fit_line(&ks, &ys).map(|f| f.slope.exp()).unwrap_or(1.0))
}

/// Default realisation scale `c = 1/(4 R_fit)`.
pub fn default_c(a: &FormalSymbol, x: &[f64], thetas: &[Vec<f64>]) -> Result<f64> {
    Ok(0.25 / fit_growth_rate(a, x, thetas)?)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn eval_at(e: &crate::jets::Expr, x: &[f64], theta: &[f64]) -> Result<C64> {
    eval_at_y(e, x, theta, &[])
}

fn eval_at_y(e: &crate::jets::Expr, x: &[f64], theta: &[f64], y: &[f64]) -> Result<C64> {
    let z: Vec<C64> = x
        .iter()
        .chain(theta)
        .chain(y)
        .map(|&v| C64::new(v, 0.0))
        .collect();
    e.eval(&z)
}

/// Lazy Borel sum of `a` with realisation scale `c`.
///
/// When `c · R_fit > 1/4` (with `R_fit` from [`fit_growth_rate`] over
/// `thetas`) a warning is recorded: the remainder bound is then not
/// guaranteed.
pub fn borel_sum(
    a: &FormalSymbol,
    c: f64,
    cutoffs: Arc<CutoffFamily>,
    x: &[f64],
    thetas: &[Vec<f64>],
) -> Result<RealizedAmplitude> {
    if cutoffs.dim() != 1 {
        return Err(Error::Shape(
            "borel_sum needs a one-dimensional radial cutoff family".into(),
        ));
    }
    if !(c > 0.0) {
        return Err(Error::Invalid(
            "realisation scale c must be positive".into(),
        ));
    }
    let mut warnings = Vec::new();
    if !thetas.is_empty() {
        let r = fit_growth_rate(a, x, thetas)?;
        if c * r > 0.25 * (1.0 + 1e-9) {
            warnings.push(format!(
                "c = {c} exceeds 1/(4 R_fit) = {}; remainder bound not guaranteed",
                0.25 / r
            ));
        }
    }
    Ok(RealizedAmplitude {
        symbol: a.clone(),
        c,
        cutoffs,
        warnings,
    })
}

impl RealizedAmplitude {
    /// Realisation without the growth-rate admissibility check.
    pub fn unchecked(a: &FormalSymbol, c: f64, cutoffs: Arc<CutoffFamily>) -> RealizedAmplitude {
        RealizedAmplitude {
            symbol: a.clone(),
            c,
            cutoffs,
            warnings: Vec::new(),
        }
    }

    pub fn symbol(&self) -> &FormalSymbol {
        &self.symbol
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn with_c(&self, c: f64) -> RealizedAmplitude {
        RealizedAmplitude { c, ..self.clone() }
    }

    /// `1 − χ_{ℓ+1}(c|θ|/(ℓ+1))`, using `χ = 1` on `[0,1]` and `0` past `2`.
    pub fn weight(&self, l: usize, r: f64) -> Result<f64> {
        let t = self.c * r / (l + 1) as f64;
        if t <= 1.0 {
            return Ok(0.0);
        }
        if t >= 2.0 {
            return Ok(1.0);
        }
        if l + 1 > self.cutoffs.n_max() {
            return Err(Error::Invalid(format!(
                "term {l} needs cutoff index {} beyond N_max = {}",
                l + 1,
                self.cutoffs.n_max()
            )));
        }
        Ok(1.0 - self.cutoffs.eval(l + 1, &[t])?)
    }

    /// Number of leading terms with weight exactly one at `|θ| = r`.
    pub fn active_terms(&self, r: f64) -> usize {
        ((self.c * r / 2.0).floor() as usize).min(self.symbol.order() + 1)
    }

    /// Largest `ℓ` whose weight can be nonzero at `|θ| = r`.
    fn last_term(&self, r: f64) -> usize {
        ((self.c * r).ceil() as usize).saturating_sub(1)
    }

    /// Evaluates the realisation; terms past the truncation order are zero.
    pub fn eval(&self, x: &[f64], theta: &[f64]) -> Result<C64> {
        self.eval_with_y(x, theta, &[])
    }

    /// Evaluates an amplitude that also depends on fibre variables `y`.
    pub fn eval_with_y(&self, x: &[f64], theta: &[f64], y: &[f64]) -> Result<C64> {
        let r = norm(theta);
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..=self.last_term(r).min(self.symbol.order()) {
            let w = self.weight(l, r)?;
            if w != 0.0 {
                acc += eval_at_y(&self.symbol.coeff(l), x, theta, y)? * w;
            }
        }
        Ok(acc)
    }

    /// `a(x,θ) − Σ_{k<N} a_k(x,θ)`, summed termwise without cancellation:
    /// `Σ_{ℓ≥N} a_ℓ w_ℓ − Σ_{ℓ<N} a_ℓ (1 − w_ℓ)`.
    pub fn remainder(&self, x: &[f64], theta: &[f64], n: usize) -> Result<C64> {
        let r = norm(theta);
        let top = self
            .last_term(r)
            .min(self.symbol.order())
            .max(n.saturating_sub(1));
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..=top {
            let w = self.weight(l, r)?;
            let factor = if l >= n { w } else { w - 1.0 };
            if factor != 0.0 {
                acc += eval_at(&self.symbol.coeff(l), x, theta)? * factor;
            }
        }
        Ok(acc)
    }

    /// Whether a term past the truncation order would carry weight at `|θ| = r`.
    pub fn truncation_active(&self, r: f64) -> bool {
        self.last_term(r) > self.symbol.order()
    }
}

/// Remainder profile with the fitted model `C ρ^N N! |θ|^{d−N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub n: usize,
    pub theta_norms: Vec<f64>,
    /// `|a − Σ_{k<N} a_k|` at each θ.
    pub residuals: Vec<f64>,
    /// `E_n = max_θ |a − Σ_{k<n} a_k| |θ|^{n−d}/n!` for `n = 0..=N`.
    pub envelope: Vec<f64>,
    pub c_fit: f64,
    pub rho_fit: f64,
    /// Relative log-space residual `sqrt(SSR/SST)` of `ln E_n` against `ln C + n ln ρ`.
    pub log_residual: f64,
    /// Whether `log_residual ≤ 0.25`.
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// Acceptance threshold on relative log-space residuals.
pub const LOG_FIT_TOLERANCE: f64 = 0.25;

fn envelope_fit(envelope: &[f64]) -> (f64, f64, f64) {
    let (mut ns, mut ys) = (Vec::new(), Vec::new());
    for (n, &e) in envelope.iter().enumerate() {
        if e > 0.0 {
            ns.push(n as f64);
            ys.push(e.ln());
        }
    }
    match (ys.len(), fit_line(&ns, &ys)) {
        (0, _) => (0.0, 0.0, 0.0),
        (_, Some(f)) => (f.intercept.exp(), f.slope.exp(), f.rel_residual),
        (_, None) => (ys[0].exp(), 1.0, 0.0),
    }
}

fn profile_from<F>(n: usize, degree: f64, thetas: &[Vec<f64>], rem: F) -> Result<RemainderReport>
where
    F: Fn(&[f64], usize) -> Result<f64> + Sync,
{
    let theta_norms: Vec<f64> = thetas.iter().map(|t| norm(t)).collect();
    // rows[i][order] = |remainder of that order| at thetas[i]
    let rows: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|th| {
            (0..=n)
                .map(|order| rem(th, order))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut envelope = vec![0.0f64; n + 1];
    for (row, &r) in rows.iter().zip(&theta_norms) {
        for (order, (env, &v)) in envelope.iter_mut().zip(row).enumerate() {
            let scaled = (v.ln() + (order as f64 - degree) * r.ln() - ln_factorial(order)).exp();
            *env = env.max(scaled);
        }
    }
    let residuals = rows.iter().map(|row| row[n]).collect();
    let (c_fit, rho_fit, log_residual) = envelope_fit(&envelope);
    Ok(RemainderReport {
        n,
        theta_norms,
        residuals,
        envelope,
        c_fit,
        rho_fit,
        log_residual,
        pass: log_residual <= LOG_FIT_TOLERANCE,
        warnings: Vec::new(),
    })
}

impl RemainderReport {
    /// Smallest `C` with `E_n ≤ C ρ^n` for all stored orders at a fixed `ρ`.
    pub fn constant_for_rate(&self, rho: f64) -> f64 {
        self.envelope
            .iter()
            .enumerate()
            .map(|(n, e)| e / rho.powi(n as i32))
            .fold(0.0, f64::max)
    }
}

/// Remainders of orders `0..=N` over `thetas` at base point `x`, with the envelope fit.
pub fn remainder_profile(
    r: &RealizedAmplitude,
    x: &[f64],
    n: usize,
    thetas: &[Vec<f64>],
) -> Result<RemainderReport> {
    let mut rep = profile_from(n, r.symbol.degree(), thetas, |th, order| {
        Ok(r.remainder(x, th, order)?.norm())
    })?;
    rep.warnings = r.warnings.clone();
    if thetas.iter().any(|t| r.truncation_active(norm(t))) {
        rep.warnings
            .push("terms past the truncation order would carry weight on this grid".into());
    }
    Ok(rep)
}

/// Remainder of `A·B` against the Cauchy product `(a*b)_k = Σ_ℓ a_ℓ b_{k−ℓ}`.
pub fn cauchy_product_check(
    a: &RealizedAmplitude,
    b: &RealizedAmplitude,
    x: &[f64],
    n: usize,
    thetas: &[Vec<f64>],
) -> Result<RemainderReport> {
    a.symbol.check_same_space(&b.symbol)?;
    let degree = a.symbol.degree() + b.symbol.degree();
    let mut rep = profile_from(n, degree, thetas, |th, order| {
        let r = norm(th);
        let la = a.last_term(r).min(a.symbol.order()).max(order);
        let lb = b.last_term(r).min(b.symbol.order()).max(order);
        let wa: Vec<f64> = (0..=la).map(|l| a.weight(l, r)).collect::<Result<_>>()?;
        let wb: Vec<f64> = (0..=lb).map(|l| b.weight(l, r)).collect::<Result<_>>()?;
        let va: Vec<C64> = (0..=la)
            .map(|l| eval_at(&a.symbol.coeff(l), x, th))
            .collect::<Result<_>>()?;
        let vb: Vec<C64> = (0..=lb)
            .map(|l| eval_at(&b.symbol.coeff(l), x, th))
            .collect::<Result<_>>()?;
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..=la {
            for m in 0..=lb {
                let w = wa[l] * wb[m];
                let factor = if l + m >= order { w } else { w - 1.0 };
                if factor != 0.0 {
                    acc += va[l] * vb[m] * factor;
                }
            }
        }
        Ok(acc.norm())
    })?;
    rep.warnings = a.warnings.iter().chain(&b.warnings).cloned().collect();
    Ok(rep)
}

/// Exponential fit `|D(θ)| ≈ C e^{−ε|θ|}` of the difference of two realisations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub theta_norms: Vec<f64>,
    pub differences: Vec<f64>,
    pub prefactor: f64,
    pub rate: f64,
    pub log_residual: f64,
}

/// `a_c − a_{c'}` summed termwise as `Σ_ℓ a_ℓ (w_ℓ(c) − w_ℓ(c'))`, with its decay fit.
pub fn realisation_difference(
    a: &RealizedAmplitude,
    b: &RealizedAmplitude,
    x: &[f64],
    thetas: &[Vec<f64>],
) -> Result<DecayReport> {
    let mut theta_norms = Vec::new();
    let mut differences = Vec::new();
    for th in thetas {
        let r = norm(th);
        let top = a.last_term(r).max(b.last_term(r)).min(a.symbol.order());
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..=top {
            let w = a.weight(l, r)? - b.weight(l, r)?;
            if w != 0.0 {
                acc += eval_at(&a.symbol.coeff(l), x, th)? * w;
            }
        }
        theta_norms.push(r);
        differences.push(acc.norm());
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = theta_norms
        .iter()
        .zip(&differences)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, d)| (*r, d.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys);
    Ok(DecayReport {
        theta_norms,
        differences,
        prefactor: fit.map(|f| f.intercept.exp()).unwrap_or(0.0),
        rate: fit.map(|f| -f.slope).unwrap_or(f64::INFINITY),
        log_residual: fit.map(|f| f.rel_residual).unwrap_or(0.0),
    })
}

/// `a_k = k! |θ|^{−k}` in dimension 1 through order `k_max`, scaled as `k! (s|θ|)^{−k}`.
pub fn factorial_symbol(k_max: usize, s: f64) -> FormalSymbol {
    use crate::jets::Expr;
    let r = Expr::radial(vec![1]);
    let coeffs = (0..=k_max)
        .map(|k| {
            let f = crate::jets::factorial(k) / s.powi(k as i32);
            r.powi(-(k as i32)).scale(C64::new(f, 0.0))
        })
        .collect();
    FormalSymbol::new(1, 0.0, coeffs).expect("valid factorial symbol")
}

/// Geometric grid of `count` radial points `θ = (r, 0, ..)` on `[lo, hi]` in dimension `d`.
pub fn radial_grid(lo: f64, hi: f64, count: usize, d: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let t = if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            let mut v = vec![0.0; d];
            v[0] = lo * (hi / lo).powf(t);
            v
        })
        .collect()
}
