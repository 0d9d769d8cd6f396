//! Left quantization on a periodic one-dimensional grid, computed with FFTs.
//!
//! Samples sit at `x_m = mL/M` and the retained frequencies are
//! `ξ_f = 2πf/L` for `|f| ≤ F`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Expr;
use crate::symbols::{moyal_product, FormalSymbol};
use crate::C64;

/// Largest mode count accepted by [`commutator_matrix`].
pub const MAX_DENSE_MODES: usize = 4096;

/// Samples of a periodic function.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    period: f64,
    samples: Vec<C64>,
}

impl GridFunction {
    pub fn new(period: f64, samples: Vec<C64>) -> Result<GridFunction> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Invalid(format!(
                "period must be positive, got {period}"
            )));
        }
        if samples.len() < 2 || !samples.len().is_power_of_two() {
            return Err(Error::Invalid(format!(
                "sample count {} is not a power of two",
                samples.len()
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Invalid(format!("sample {i} is not finite")));
        }
        Ok(GridFunction { period, samples })
    }

    pub fn from_fn<F: Fn(f64) -> C64>(period: f64, m: usize, f: F) -> Result<GridFunction> {
        let samples = (0..m).map(|i| f(i as f64 * period / m as f64)).collect();
        GridFunction::new(period, samples)
    }

    /// `Σ c e^{i x ξ_f}` over the given `(f, c)` pairs.
    pub fn from_modes(period: f64, m: usize, modes: &[(i64, C64)]) -> Result<GridFunction> {
        GridFunction::from_fn(period, m, |x| {
            modes
                .iter()
                .map(|&(f, c)| c * C64::from_polar(1.0, x * 2.0 * PI * f as f64 / period))
                .sum()
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn x(&self, m: usize) -> f64 {
        m as f64 * self.period / self.samples.len() as f64
    }

    pub fn xi(&self, f: i64) -> f64 {
        2.0 * PI * f as f64 / self.period
    }

    /// `(Σ |u_m|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GridFunction {
            period: self.period,
            samples,
        })
    }

    pub fn scale(&self, s: C64) -> GridFunction {
        GridFunction {
            period: self.period,
            samples: self.samples.iter().map(|z| z * s).collect(),
        }
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.samples.len() != other.samples.len() || self.period != other.period {
            return Err(Error::Shape(
                "grid functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Unnormalized DFT `û_f = Σ_m u_m e^{−2πi fm/M}`, indexed `0..M`.
    pub fn spectrum(&self) -> Vec<C64> {
        let mut buf = self.samples.clone();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf
    }

    /// `û_f` for signed `f`.
    pub fn mode(spectrum: &[C64], f: i64) -> C64 {
        let m = spectrum.len() as i64;
        spectrum[f.rem_euclid(m) as usize]
    }
}

/// Highest retained frequency index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandLimit {
    pub f: usize,
}

impl BandLimit {
    pub fn new(f: usize) -> Result<BandLimit> {
        if f == 0 {
            return Err(Error::Invalid("band limit must be at least 1".into()));
        }
        Ok(BandLimit { f })
    }

    /// `F = M/2 − 1`.
    pub fn nyquist(m: usize) -> BandLimit {
        BandLimit { f: m / 2 - 1 }
    }

    fn check(&self, m: usize) -> Result<()> {
        if 2 * self.f >= m {
            return Err(Error::Invalid(format!(
                "band F = {} exceeds Nyquist for M = {m}",
                self.f
            )));
        }
        Ok(())
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let f = self.f as i64;
        -f..=f
    }
}

/// `Σ_{k≤K} a_k` as a single expression in `(x, ξ)`, with the low-frequency policy.
struct SymbolSampler {
    total: Expr,
    clamp: bool,
}

impl SymbolSampler {
    /// Low frequencies are clamped to `|ξ| = 1` exactly when the symbol cannot
    /// be evaluated at `ξ = 0` for some grid point.
    fn new(a: &FormalSymbol, u: &GridFunction) -> Result<SymbolSampler> {
        if a.d() != 1 || a.y_dim() != 0 {
            return Err(Error::Shape(
                "quantization oracle is one-dimensional".into(),
            ));
        }
        let total = a.coeffs().iter().fold(Expr::zero(), |acc, c| acc.add(c));
        let clamp =
            (0..u.len()).any(
                |m| match total.eval(&[C64::new(u.x(m), 0.0), C64::new(0.0, 0.0)]) {
                    Ok(z) => !(z.re.is_finite() && z.im.is_finite()),
                    Err(_) => true,
                },
            );
        Ok(SymbolSampler { total, clamp })
    }

    fn at(&self, x: f64, xi: f64) -> Result<C64> {
        let xi = if self.clamp && xi.abs() < 1.0 {
            if xi < 0.0 {
                -1.0
            } else {
                1.0
            }
        } else {
            xi
        };
        self.total.eval(&[C64::new(x, 0.0), C64::new(xi, 0.0)])
    }
}

/// `(Op(a)u)(x_m) = Σ_{|f|≤F} e^{i x_m ξ_f} a(x_m, ξ_f) û_f / M` with all coefficients of `a` summed.
///
/// When the symbol is singular at `ξ = 0`, frequencies with `|ξ| < 1` use
/// the value at `|ξ| = 1` with the sign of `ξ`.
pub fn op_apply(a: &FormalSymbol, u: &GridFunction, band: BandLimit) -> Result<GridFunction> {
    band.check(u.len())?;
    let sampler = SymbolSampler::new(a, u)?;
    let spec = u.spectrum();
    let m = u.len();
    let active: Vec<(i64, C64)> = band
        .modes()
        .map(|f| (f, GridFunction::mode(&spec, f)))
        .filter(|(_, c)| *c != C64::new(0.0, 0.0))
        .collect();
    let columns: Vec<Vec<C64>> = active
        .par_iter()
        .map(|&(f, c)| {
            let xi = u.xi(f);
            (0..m)
                .map(|i| {
                    let x = u.x(i);
                    Ok(sampler.at(x, xi)? * C64::from_polar(1.0, x * xi) * c)
                })
                .collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![C64::new(0.0, 0.0); m];
    for col in &columns {
        for (o, v) in out.iter_mut().zip(col) {
            *o += v;
        }
    }
    let inv = 1.0 / m as f64;
    GridFunction::new(u.period(), out.into_iter().map(|z| z * inv).collect())
}

/// `(Op(a)u)(x_m) = Σ_{|f|≤F} Σ_n e^{i(x_m−y_n)ξ_f} a(x_m, y_n, ξ_f) u_n / M` for an amplitude in `(x, ξ, y)`.
///
/// Direct `O(M² F)` summation, used as an independent check of total symbols.
pub fn op_apply_amplitude(
    a: &FormalSymbol,
    u: &GridFunction,
    band: BandLimit,
) -> Result<GridFunction> {
    band.check(u.len())?;
    if a.d() != 1 || a.y_dim() != 1 {
        return Err(Error::Shape(
            "amplitude oracle needs d = 1 and one y variable".into(),
        ));
    }
    let total = a.coeffs().iter().fold(Expr::zero(), |acc, c| acc.add(c));
    let m = u.len();
    let out: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = u.x(i);
            let mut acc = C64::new(0.0, 0.0);
            for f in band.modes() {
                let xi = u.xi(f);
                for (n, un) in u.samples().iter().enumerate() {
                    let y = u.x(n);
                    let z = [C64::new(x, 0.0), C64::new(xi, 0.0), C64::new(y, 0.0)];
                    acc += total.eval(&z)? * C64::from_polar(1.0, (x - y) * xi) * un;
                }
            }
            Ok(acc / m as f64)
        })
        .collect::<Result<_>>()?;
    GridFunction::new(u.period(), out)
}

/// Per-order composition residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoyalConsistency {
    /// `ε(K) = ‖Op(a)Op(b)u − Op(a♯_K b)u‖/‖u‖` for `K = 0, 1, …`.
    pub eps: Vec<f64>,
    /// Whether `ε` strictly decreases until it reaches `floor`.
    pub monotone: bool,
    pub floor: f64,
}

/// Aliasing floor below which `ε(K)` is not required to decrease.
pub const ALIASING_FLOOR: f64 = 1e-9;

/// Compares `Op(a)∘Op(b)` with `Op(a♯_K b)` for `K = 0..=k_max`.
pub fn moyal_consistency(
    a: &FormalSymbol,
    b: &FormalSymbol,
    k_max: usize,
    u: &GridFunction,
    band: BandLimit,
) -> Result<MoyalConsistency> {
    let composed = op_apply(a, &op_apply(b, u, band)?, band)?;
    let un = u.norm();
    let mut eps = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let c = moyal_product(a, b, k)?;
        let direct = op_apply(&c, u, band)?;
        let r = composed.sub(&direct)?.norm();
        eps.push(if un > 0.0 { r / un } else { 0.0 });
    }
    let monotone = eps
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= ALIASING_FLOOR && w[1] <= ALIASING_FLOOR));
    Ok(MoyalConsistency {
        eps,
        monotone,
        floor: ALIASING_FLOOR,
    })
}

/// Dense operator on the retained modes `f = −F..=F`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMatrix {
    pub band: BandLimit,
    /// Row-major, `entries[r * n + c]` with `n = 2F + 1`.
    pub entries: Vec<C64>,
}

impl ModeMatrix {
    pub fn size(&self) -> usize {
        2 * self.band.f + 1
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.size() + col]
    }

    pub fn identity(band: BandLimit) -> ModeMatrix {
        let n = 2 * band.f + 1;
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = C64::new(1.0, 0.0);
        }
        ModeMatrix { band, entries }
    }

    pub fn mul(&self, other: &ModeMatrix) -> Result<ModeMatrix> {
        if self.band != other.band {
            return Err(Error::Shape("mode matrices on different bands".into()));
        }
        let n = self.size();
        let entries = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (r, c) = (idx / n, idx % n);
                (0..n)
                    .map(|k| self.entries[r * n + k] * other.entries[k * n + c])
                    .sum()
            })
            .collect();
        Ok(ModeMatrix {
            band: self.band,
            entries,
        })
    }

    pub fn sub(&self, other: &ModeMatrix) -> Result<ModeMatrix> {
        if self.band != other.band {
            return Err(Error::Shape("mode matrices on different bands".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ModeMatrix {
            band: self.band,
            entries,
        })
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &ModeMatrix) -> Result<ModeMatrix> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let n = self.size();
        if v.len() != n {
            return Err(Error::Shape(format!(
                "vector has {} entries, matrix {n}",
                v.len()
            )));
        }
        Ok((0..n)
            .map(|r| (0..n).map(|c| self.entries[r * n + c] * v[c]).sum())
            .collect())
    }
}

/// Matrix of `Op(a)` on modes: entry `(g, f)` is the `g`-th coefficient of `Op(a) e^{ixξ_f}`.
pub fn commutator_matrix(
    a: &FormalSymbol,
    period: f64,
    m: usize,
    band: BandLimit,
) -> Result<ModeMatrix> {
    let n = 2 * band.f + 1;
    if n > MAX_DENSE_MODES {
        return Err(Error::Invalid(format!(
            "band of {n} modes exceeds the dense limit {MAX_DENSE_MODES}"
        )));
    }
    let probe = GridFunction::new(period, vec![C64::new(0.0, 0.0); m])?;
    band.check(m)?;
    let sampler = SymbolSampler::new(a, &probe)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let columns: Vec<Vec<C64>> = band
        .modes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&f| {
            let xi = probe.xi(f);
            let mut col = (0..m)
                .map(|i| {
                    let x = probe.x(i);
                    Ok(sampler.at(x, xi)? * C64::from_polar(1.0, x * xi))
                })
                .collect::<Result<Vec<C64>>>()?;
            fft.process(&mut col);
            Ok(band
                .modes()
                .map(|g| GridFunction::mode(&col, g) / m as f64)
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut entries = vec![C64::new(0.0, 0.0); n * n];
    for (c, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            entries[r * n + c] = *v;
        }
    }
    Ok(ModeMatrix { band, entries })
}

/// Coefficients `û_f/M` of `u` on the retained modes.
pub fn mode_vector(u: &GridFunction, band: BandLimit) -> Vec<C64> {
    let spec = u.spectrum();
    band.modes()
        .map(|f| GridFunction::mode(&spec, f) / u.len() as f64)
        .collect()
}

/// Packet sharpness `s`: the packet is `e^{−s²/2} < 1e-21` at the wrap-around point.
pub const PACKET_SHARPNESS: f64 = 10.0;

/// Gaussian wave packet centred at `L/2` with width `L/(2 s)` and carrier `ξ_{carrier}`.
pub fn wave_packet(period: f64, m: usize, sharpness: f64, carrier: i64) -> Result<GridFunction> {
    let w = period / (2.0 * sharpness);
    GridFunction::from_fn(period, m, |x| {
        let t = (x - period / 2.0) / w;
        C64::from_polar((-0.5 * t * t).exp(), 2.0 * PI * carrier as f64 * x / period)
    })
}

/// Residual of `[Op(a), Op(b)] = s·Id` on wave packets, measured on modes `|g| ≤ F/2`.
///
/// The periodic grid turns a non-periodic multiplier into a sawtooth whose
/// jump adds a term supported at `x = 0`; packets centred at `L/2` vanish
/// there to machine precision, so the identity is checked on them.
pub fn commutator_residual(
    a: &FormalSymbol,
    b: &FormalSymbol,
    s: C64,
    period: f64,
    m: usize,
    band: BandLimit,
) -> Result<f64> {
    let ca = commutator_matrix(a, period, m, band)?;
    let cb = commutator_matrix(b, period, m, band)?;
    let comm = ca.commutator(&cb)?;
    let interior = (band.f / 2) as i64;
    let mut worst: f64 = 0.0;
    for carrier in [-(interior / 4), 0, interior / 8, interior / 4] {
        let u = wave_packet(period, m, PACKET_SHARPNESS, carrier)?;
        let v = mode_vector(&u, band);
        let w = comm.apply(&v)?;
        let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (g, (wi, vi)) in band.modes().zip(w.iter().zip(&v)) {
            if g.abs() <= interior {
                worst = worst.max((wi - s * vi).norm() / scale);
            }
        }
    }
    Ok(worst)
}

/// Seeded random function with modes `lo ≤ |f| ≤ hi` and unit-modulus random phases.
pub fn random_band_function(
    period: f64,
    m: usize,
    lo: usize,
    hi: usize,
    seed: u64,
) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for f in lo..=hi {
        for sign in [1i64, -1] {
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            let amp: f64 = rng.random_range(0.5..1.0);
            modes.push((sign * f as i64, C64::from_polar(amp, phase)));
        }
    }
    GridFunction::from_modes(period, m, &modes)
}

/// Elliptic symbol pairs with trigonometric `x`-dependence used for composition checks.
pub fn elliptic_corpus() -> Vec<(String, FormalSymbol, FormalSymbol)> {
    let names = ["x", "xi"];
    let sym = |degree: f64, srcs: &[&str]| {
        let coeffs = srcs
            .iter()
            .map(|s| crate::jets::parse_expr(s, &names).expect("corpus expression"))
            .collect();
        FormalSymbol::new(1, degree, coeffs).expect("corpus symbol")
    };
    vec![
        (
            "order-zero pair".into(),
            sym(0.0, &["(+ 2 (cos x))", "(/ (* 0.5 (sin x)) (norm xi))"]),
            sym(
                0.0,
                &["(+ 1 (* 0.3 (cos x)))", "(/ (* 0.2 (sin x)) (norm xi))"],
            ),
        ),
        (
            "first-order pair".into(),
            sym(1.0, &["(* (norm xi) (+ 1 (* 0.2 (sin x))))"]),
            sym(
                0.0,
                &[
                    "(+ 1 (* 0.3 (cos x)))",
                    "(/ (* 0.1 (sin (* 2 x))) (norm xi))",
                ],
            ),
        ),
        (
            "smoothing multiplier and potential".into(),
            sym(-1.0, &["(/ (+ 4 (cos x)) (norm xi))"]),
            sym(0.0, &["(+ 2 (* 0.2 (sin x)))"]),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::parse_expr;
    use crate::symbols::left_total_symbol;

    const L: f64 = 2.0 * PI;

    fn sym(srcs: &[&str], y: bool) -> FormalSymbol {
        let names: &[&str] = if y { &["x", "xi", "y"] } else { &["x", "xi"] };
        let coeffs = srcs.iter().map(|s| parse_expr(s, names).unwrap()).collect();
        if y {
            FormalSymbol::with_y(1, 1, 0.0, coeffs).unwrap()
        } else {
            FormalSymbol::new(1, 0.0, coeffs).unwrap()
        }
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_on_band_limited_data() {
        let u = random_band_function(L, 64, 1, 20, 3).unwrap();
        let v = op_apply(&FormalSymbol::unit(1), &u, BandLimit::new(31).unwrap()).unwrap();
        assert!(max_diff(&u, &v) < 1e-12);
    }

    #[test]
    fn xi_is_a_fourier_multiplier() {
        let u = GridFunction::from_modes(L, 64, &[(5, C64::new(1.0, 0.0))]).unwrap();
        let v = op_apply(&sym(&["xi"], false), &u, BandLimit::new(31).unwrap()).unwrap();
        assert!(max_diff(&v, &u.scale(C64::new(5.0, 0.0))) < 1e-12);
    }

    #[test]
    fn x_multiplies_pointwise() {
        let u = GridFunction::from_modes(L, 64, &[(3, C64::new(1.0, 0.0))]).unwrap();
        let v = op_apply(&sym(&["x"], false), &u, BandLimit::new(31).unwrap()).unwrap();
        let direct =
            GridFunction::new(L, (0..64).map(|m| u.samples()[m] * u.x(m)).collect()).unwrap();
        assert!(max_diff(&v, &direct) < 1e-12);
    }

    #[test]
    fn linearity() {
        let a = sym(&["(+ (cos x) (* xi (sin x)))"], false);
        let u = random_band_function(L, 64, 1, 10, 1).unwrap();
        let w = random_band_function(L, 64, 2, 12, 2).unwrap();
        let band = BandLimit::new(31).unwrap();
        let s = C64::new(0.3, -1.2);
        let sum = GridFunction::new(
            L,
            u.samples()
                .iter()
                .zip(w.samples())
                .map(|(p, q)| p + q * s)
                .collect(),
        )
        .unwrap();
        let lhs = op_apply(&a, &sum, band).unwrap();
        let ou = op_apply(&a, &u, band).unwrap();
        let ow = op_apply(&a, &w, band).unwrap();
        let rhs = GridFunction::new(
            L,
            ou.samples()
                .iter()
                .zip(ow.samples())
                .map(|(p, q)| p + q * s)
                .collect(),
        )
        .unwrap();
        assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn nyquist_and_grid_errors() {
        let u = random_band_function(L, 16, 1, 3, 0).unwrap();
        assert!(op_apply(&FormalSymbol::unit(1), &u, BandLimit::new(8).unwrap()).is_err());
        assert!(BandLimit::new(0).is_err());
        assert!(GridFunction::new(L, vec![C64::new(0.0, 0.0); 12]).is_err());
    }

    #[test]
    fn unit_pair_is_exact() {
        let u = random_band_function(L, 64, 1, 10, 5).unwrap();
        let rep = moyal_consistency(
            &FormalSymbol::unit(1),
            &FormalSymbol::unit(1),
            3,
            &u,
            BandLimit::new(31).unwrap(),
        )
        .unwrap();
        assert!(rep.eps.iter().all(|&e| e < 1e-14));
    }

    #[test]
    fn xi_times_x_needs_first_order_term() {
        // a = ξ, b = x is not periodic; the packet keeps the wrap-around jump invisible
        let u = wave_packet(L, 256, PACKET_SHARPNESS, 10).unwrap();
        let rep = moyal_consistency(
            &sym(&["xi"], false),
            &sym(&["x"], false),
            1,
            &u,
            BandLimit::nyquist(256),
        )
        .unwrap();
        assert!(rep.eps[0] > 0.1, "{:?}", rep.eps);
        assert!(rep.eps[1] <= 1e-8, "{:?}", rep.eps);
    }

    #[test]
    fn elliptic_corpus_converges() {
        let u = random_band_function(L, 256, 8, 64, 11).unwrap();
        for (name, a, b) in elliptic_corpus() {
            let rep = moyal_consistency(&a, &b, 4, &u, BandLimit::nyquist(256)).unwrap();
            assert!(rep.monotone, "{name}: {:?}", rep.eps);
            assert!(rep.eps[4] <= 1e-6, "{name}: {:?}", rep.eps);
        }
    }

    #[test]
    fn dense_matrices() {
        let band = BandLimit::new(8).unwrap();
        let id = commutator_matrix(&FormalSymbol::unit(1), L, 32, band).unwrap();
        let xi = commutator_matrix(&sym(&["xi"], false), L, 32, band).unwrap();
        for (r, g) in band.modes().enumerate() {
            for c in 0..id.size() {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((id.get(r, c) - e).norm() < 1e-14);
                let d = if r == c { g as f64 } else { 0.0 };
                assert!((xi.get(r, c) - d).norm() < 1e-13);
            }
        }
        assert!(commutator_matrix(
            &FormalSymbol::unit(1),
            L,
            8192,
            BandLimit::new(2100).unwrap()
        )
        .is_err());
    }

    #[test]
    fn convention_lock() {
        let r = commutator_residual(
            &sym(&["x"], false),
            &sym(&["xi"], false),
            C64::new(0.0, 1.0),
            L,
            256,
            BandLimit::nyquist(256),
        )
        .unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn total_symbol_matches_amplitude_kernel() {
        // a(x, y, ξ) = sin(y) ξ + cos(x − 2y)
        let a = sym(&["(+ (* (sin y) xi) (cos (- x (* 2 y))))"], true);
        let b = left_total_symbol(&a, 2).unwrap();
        let band = BandLimit::new(15).unwrap();
        let u = random_band_function(L, 64, 1, 10, 9).unwrap();
        let direct = op_apply_amplitude(&a, &u, band).unwrap();
        let via_symbol = op_apply(&b, &u, band).unwrap();
        assert!(max_diff(&direct, &via_symbol) < 1e-10);
    }
}
