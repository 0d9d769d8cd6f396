//! Experiment runners behind the command line, the criterion battery and
//! the artifact manifest.
//!
//! Every runner returns an [`Outcome`]: named text artifacts plus a
//! [`ManifestEntry`]. Artifacts are rendered with [`report::to_json`] or the
//! module CSV writers, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::borel::{
    borel_sum, ehrenpreis_cutoffs, factorial_symbol, radial_grid, realisation_difference,
    remainder_profile, CutoffFamily, CutoffOptions, Region, LOG_FIT_TOLERANCE,
};
use crate::config::{KeySpec, Kind, RunConfig};
use crate::cylinder::{
    diagonal_pair, eval_mn, mn_asymptotic_profile, mn_csv, reproduce_test, szego_csv,
    szego_fio_form, TestFunction,
};
use crate::error::{Error, Result};
use crate::fbi::{
    classify_corpus, decay_csv, Builtin, DecayFit, DecayModel, SampledSignal, Signal,
};
use crate::normalform::{
    commutator_check, commutator_corpus, random_corpus, solve_order0, stability_sweep,
    transport_recursion, transport_residuals, JetSymbol, JsParams, ModelOperator, ORDER0_NODES,
};
use crate::quantize::{
    commutator_residual, elliptic_corpus, moyal_consistency, random_band_function, wave_packet,
    BandLimit, PACKET_SHARPNESS,
};
use crate::report::{self, fmt17};
use crate::statphase::{
    gaussian_expansion, gaussian_quadrature_oracle, oracle_tolerance, polynomial_corpus,
    polynomial_gaussian_integral, polynomial_tail_bound, remainder_certificate, u_corpus,
    StatPhaseConstants,
};
use crate::symbols::{
    admissible_r, banach_bound_check, banach_corpus, banach_sample_box, FormalSymbol, M0_DIM1,
};
use crate::C64;

/// Named text output of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn json<T: Serialize>(name: &str, value: &T) -> Result<Artifact> {
        Ok(Artifact {
            name: name.into(),
            contents: report::to_json(value)?,
        })
    }

    fn text(name: &str, contents: String) -> Artifact {
        Artifact {
            name: name.into(),
            contents,
        }
    }
}

/// One line of `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub subcommand: String,
    /// Criterion ID when produced by the verification battery.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    pub parameters: BTreeMap<String, String>,
    pub anchor: String,
    pub pass: bool,
    pub summary: String,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub entry: ManifestEntry,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn new(
        subcommand: &str,
        anchor: &str,
        pass: bool,
        summary: String,
        artifacts: Vec<Artifact>,
    ) -> Outcome {
        Outcome {
            entry: ManifestEntry {
                subcommand: subcommand.into(),
                criterion: None,
                parameters: BTreeMap::new(),
                anchor: anchor.into(),
                pass,
                summary,
                artifacts: artifacts.iter().map(|a| a.name.clone()).collect(),
            },
            artifacts,
        }
    }

    fn with_parameters(mut self, parameters: BTreeMap<String, String>) -> Outcome {
        self.entry.parameters = parameters;
        self
    }

    /// Prefixes artifact names, keeping the manifest in sync.
    fn prefixed(mut self, prefix: &str) -> Outcome {
        for a in &mut self.artifacts {
            a.name = format!("{prefix}{}", a.name);
        }
        self.entry.artifacts = self.artifacts.iter().map(|a| a.name.clone()).collect();
        self
    }

    pub fn pass(&self) -> bool {
        self.entry.pass
    }
}

/// Writes every artifact into `dir` and a `manifest.json` listing the entries.
pub fn write_outputs(dir: &Path, outcomes: &[Outcome]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut seen = std::collections::BTreeSet::new();
    for o in outcomes {
        for a in &o.artifacts {
            if !seen.insert(a.name.clone()) {
                return Err(Error::Invalid(format!(
                    "artifact `{}` written twice",
                    a.name
                )));
            }
            fs::write(dir.join(&a.name), &a.contents)?;
        }
    }
    let manifest: Vec<&ManifestEntry> = outcomes.iter().map(|o| &o.entry).collect();
    let path = dir.join("manifest.json");
    fs::write(&path, report::to_json(&manifest)?)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// anchors

const ANCHOR_MN: &str = "cylinder: large-r expansion of the sphere moment m_n";
const ANCHOR_SZEGO: &str =
    "cylinder: reproducing property of the Szego projector on the tube boundary";
const ANCHOR_FIO: &str = "cylinder: Szego kernel as a Fourier integral operator near the diagonal";
const ANCHOR_MOYAL: &str = "quantize: composition of quantizations against the Moyal product";
const ANCHOR_BANACH: &str = "symbols: algebra bound for the analytic symbol norm";
const ANCHOR_CUTOFF: &str = "borel: derivative bounds for Ehrenpreis cutoffs";
const ANCHOR_BOREL: &str = "borel: remainder and uniqueness of the Borel realisation";
const ANCHOR_STATPHASE: &str = "statphase: fixed-order remainder of Gaussian stationary phase";
const ANCHOR_FBI: &str = "fbi: wavefront classification by decay of the FBI transform";
const ANCHOR_NORMALFORM: &str = "normalform: transport recursion and order-zero conjugation";
const ANCHOR_STABILITY: &str = "normalform: norm stability of the transport recursion";
const ANCHOR_DETERMINISM: &str = "verify-all: reproducibility of artifacts";

// ---------------------------------------------------------------------------
// experiment kernels shared by subcommands and criteria

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return Err(Error::Config(format!(
            "bad grid [{lo}, {hi}] with step {step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

/// `m₂(50)·√(50/2π)·e^{−50}`.
pub fn mn_leading_constant() -> Result<f64> {
    let r = 50.0f64;
    Ok(eval_mn(2, C64::new(r, 0.0))?.re * (r / (2.0 * PI)).sqrt() * (-r).exp())
}

fn mn_asym(ns: &[usize], j_max: usize, radii: &[f64]) -> Result<Outcome> {
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for &n in ns {
        artifacts.push(Artifact::text(
            &format!("mn_n{n}.csv"),
            mn_csv(n, j_max, radii)?,
        ));
        reports.push(mn_asymptotic_profile(n, j_max, radii)?);
    }
    let leading = mn_leading_constant()?;
    let leading_ok = (0.98..=1.02).contains(&leading);
    let pass = leading_ok && reports.iter().all(|r| r.pass);
    let mut summary = String::new();
    for r in &reports {
        let _ = write!(
            summary,
            "n={}: log residual {:.3} (rho {:.3}{}); ",
            r.n,
            r.log_residual,
            r.rho_fit,
            if r.exact_expansion {
                ", finite expansion"
            } else {
                ""
            }
        );
    }
    let _ = write!(summary, "m2(50) leading constant {leading:.6}");
    artifacts.push(Artifact::json(
        "mn_asym.json",
        &json!({
            "j_max": j_max,
            "tolerance": LOG_FIT_TOLERANCE,
            "leading_constant": leading,
            "leading_window": [0.98, 1.02],
            "profiles": reports,
        }),
    )?);
    Ok(Outcome::new("mn-asym", ANCHOR_MN, pass, summary, artifacts))
}

/// Test function and sample points of the reproducing-property check.
fn szego_setup(n: usize) -> Result<(TestFunction, Vec<Vec<C64>>, f64)> {
    let c = C64::new;
    match n {
        1 => Ok((
            TestFunction::holomorphic(vec![0.5], 1.0),
            vec![
                vec![c(0.0, 1.0)],
                vec![c(0.5, -1.0)],
                vec![c(-0.7, 1.0)],
                vec![c(1.2, -1.0)],
                vec![c(0.3, 0.4)],
            ],
            1e-4,
        )),
        2 => {
            let s = 0.5f64.sqrt();
            Ok((
                TestFunction::holomorphic(vec![0.4, -0.3], 1.0),
                vec![
                    vec![c(0.0, 1.0), c(0.0, 0.0)],
                    vec![c(0.3, -s), c(-0.2, s)],
                    vec![c(-0.5, 0.0), c(0.4, -1.0)],
                ],
                1e-3,
            ))
        }
        _ => Err(Error::Config(format!(
            "szego-reproduce supports n = 1, 2; got {n}"
        ))),
    }
}

fn szego_reproduce(ns: &[usize], tolerance: Option<f64>) -> Result<Outcome> {
    let mut reports = Vec::new();
    for &n in ns {
        let (f, points, tol) = szego_setup(n)?;
        reports.push(reproduce_test(n, &f, &points, tolerance.unwrap_or(tol))?);
    }
    let pass = reports.iter().all(|r| r.pass);
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "n={}: max rel error {:.3e} at {} points (tol {:.0e})",
                r.n,
                r.max_rel_error,
                r.samples.len(),
                r.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let artifacts = vec![Artifact::json("szego_reproduce.json", &reports)?];
    Ok(Outcome::new(
        "szego-reproduce",
        ANCHOR_SZEGO,
        pass,
        summary,
        artifacts,
    ))
}

fn szego_fio(n: usize, j_max: usize, eps: &[f64], tolerance: f64) -> Result<Outcome> {
    let rows = eps
        .iter()
        .map(|&e| {
            let (z, w) = diagonal_pair(n, e);
            szego_fio_form(n, &z, &w, j_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.rel_difference).fold(0.0, f64::max);
    let pass = worst <= tolerance;
    let summary = format!("n={n}: max relative kernel/model difference {worst:.3e} over {} pairs (tol {tolerance:.0e})", rows.len());
    let artifacts = vec![
        Artifact::text("szego_fio.csv", szego_csv(&rows)),
        Artifact::json("szego_fio.json", &rows)?,
    ];
    Ok(Outcome::new(
        "szego-fio",
        ANCHOR_FIO,
        pass,
        summary,
        artifacts,
    ))
}

fn symbol_1d(srcs: &[&str]) -> Result<FormalSymbol> {
    let coeffs = srcs
        .iter()
        .map(|s| crate::jets::parse_expr(s, &["x", "xi"]))
        .collect::<Result<_>>()?;
    FormalSymbol::new(1, 0.0, coeffs)
}

const PERIOD: f64 = 2.0 * PI;
const GRID: usize = 256;

/// `[Op(x), Op(ξ)]` against `i·Id` on interior modes.
fn canonical_commutator() -> Result<f64> {
    commutator_residual(
        &symbol_1d(&["x"])?,
        &symbol_1d(&["xi"])?,
        C64::new(0.0, 1.0),
        PERIOD,
        GRID,
        BandLimit::nyquist(GRID),
    )
}

#[derive(Serialize)]
struct MoyalRow {
    pair: String,
    eps: Vec<f64>,
    monotone: bool,
    pass: bool,
}

fn moyal_rows(
    pairs: &[(String, FormalSymbol, FormalSymbol)],
    k_max: usize,
    u_seed: u64,
    tol: f64,
) -> Result<Vec<MoyalRow>> {
    let u = random_band_function(PERIOD, GRID, 8, 64, u_seed)?;
    pairs
        .iter()
        .map(|(name, a, b)| {
            let rep = moyal_consistency(a, b, k_max, &u, BandLimit::nyquist(GRID))?;
            let last = *rep.eps.last().unwrap_or(&0.0);
            Ok(MoyalRow {
                pair: name.clone(),
                pass: rep.monotone && last <= tol,
                monotone: rep.monotone,
                eps: rep.eps,
            })
        })
        .collect()
}

fn moyal_outcome(
    commutator: f64,
    rows: Vec<MoyalRow>,
    extra: serde_json::Value,
) -> Result<Outcome> {
    let comm_ok = commutator <= 1e-10;
    let pass = comm_ok && rows.iter().all(|r| r.pass);
    let worst = rows
        .iter()
        .map(|r| *r.eps.last().unwrap_or(&0.0))
        .fold(0.0, f64::max);
    let summary = format!(
        "[Op(x),Op(xi)] - i interior residual {commutator:.3e}; {} pairs, worst final eps {worst:.3e}, monotone {}",
        rows.len(),
        rows.iter().all(|r| r.monotone)
    );
    let artifacts = vec![Artifact::json(
        "moyal.json",
        &json!({ "commutator_residual": commutator, "commutator_tolerance": 1e-10, "pairs": rows, "settings": extra }),
    )?];
    Ok(Outcome::new(
        "moyal-check",
        ANCHOR_MOYAL,
        pass,
        summary,
        artifacts,
    ))
}

fn banach(rhos: &[f64], points: usize) -> Result<Outcome> {
    let mut checks = Vec::new();
    for &rho in rhos {
        let p = crate::symbols::NormParams::new(
            rho,
            admissible_r(1, rho),
            M0_DIM1,
            banach_sample_box(points),
        );
        for (name, a, b) in banach_corpus() {
            checks.push(banach_bound_check(&name, &a, &b, 4, &p)?);
        }
    }
    let worst = checks.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let pass = checks.iter().all(|c| c.pass);
    let summary = format!(
        "{} checks at m=8, R=8 rho^2, {points} points per axis; max ratio to 12|a||b| {worst:.3e}",
        checks.len()
    );
    let artifacts = vec![Artifact::json("banach.json", &checks)?];
    Ok(Outcome::new(
        "verify-all",
        ANCHOR_BANACH,
        pass,
        summary,
        artifacts,
    ))
}

fn cutoff_certificate(n_max: usize) -> Result<Outcome> {
    let fam = ehrenpreis_cutoffs(
        &[(0.0, 1.0)],
        &Region::Box(vec![(2.0, 3.0)]),
        n_max,
        0.5,
        &CutoffOptions {
            h: None,
            certify_up_to: n_max,
        },
    )?;
    let violations = fam.certificate_violations();
    let mut worst: f64 = 0.0;
    let mut table = Vec::new();
    for n in 1..=n_max {
        let maxes = fam.derivative_maxima(0, n)?.to_vec();
        for (j, &m) in maxes.iter().enumerate().skip(1) {
            worst = worst.max(m.powf(1.0 / j as f64) / (n as f64 * fam.rho()));
        }
        table.push(json!({ "N": n, "max_abs_derivatives": maxes }));
    }
    let pass = violations.is_empty();
    let summary = format!(
        "N <= {n_max}: {} violations; max (max|d^j chi_N|)^(1/j) / (rho N) = {worst:.4} with rho = {:.6}",
        violations.len(),
        fam.rho()
    );
    let artifacts = vec![
        Artifact::text("cutoffs.csv", fam.to_csv(0, n_max, 4.min(n_max))?),
        Artifact::json(
            "cutoffs.json",
            &json!({ "K": [0.0, 1.0], "L": [2.0, 3.0], "c": 0.5, "rho": fam.rho(), "worst_ratio": worst,
                     "violations": violations, "maxima": table }),
        )?,
    ];
    Ok(Outcome::new(
        "borel-demo",
        ANCHOR_CUTOFF,
        pass,
        summary,
        artifacts,
    ))
}

struct BorelSettings {
    order: usize,
    scale: f64,
    c: f64,
    c_other: f64,
    theta: (f64, f64),
    points: usize,
    diff_points: usize,
}

impl Default for BorelSettings {
    fn default() -> Self {
        BorelSettings {
            order: 10,
            scale: 1.0,
            c: 0.125,
            c_other: 0.0625,
            theta: (20.0, 200.0),
            points: 25,
            diff_points: 19,
        }
    }
}

fn borel_remainder(s: &BorelSettings) -> Result<Outcome> {
    let a = factorial_symbol(40, s.scale);
    let fam = Arc::new(CutoffFamily::radial_profile(
        30,
        &CutoffOptions {
            h: None,
            certify_up_to: 0,
        },
    )?);
    let r1 = borel_sum(&a, s.c, fam, &[0.0], &[])?;
    let r2 = r1.with_c(s.c_other);
    let profile = remainder_profile(
        &r1,
        &[0.0],
        s.order,
        &radial_grid(s.theta.0, s.theta.1, s.points, 1),
    )?;
    let decay = realisation_difference(
        &r1,
        &r2,
        &[0.0],
        &radial_grid(s.theta.0, s.theta.1, s.diff_points, 1),
    )?;
    let pass = profile.pass && decay.rate >= 0.01;
    let summary =
        format!(
        "N <= {}: log residual {:.3} (rho {:.3}); realisations c={} vs c={} differ at rate {:.4}{}",
        s.order,
        profile.log_residual,
        profile.rho_fit,
        s.c,
        s.c_other,
        decay.rate,
        if profile.warnings.is_empty() { "" } else { "; warnings recorded" }
    );
    let artifacts = vec![Artifact::json(
        "borel.json",
        &json!({ "c": s.c, "c_other": s.c_other, "symbol_scale": s.scale, "profile": profile, "difference": decay,
                 "rate_threshold": 0.01 }),
    )?];
    Ok(Outcome::new(
        "borel-demo",
        ANCHOR_BOREL,
        pass,
        summary,
        artifacts,
    ))
}

/// Scales `C_d` and `ρ_d` of the default constants.
pub fn scaled_constants(d: usize, scale: f64) -> StatPhaseConstants {
    let c = StatPhaseConstants::default_for(d);
    StatPhaseConstants {
        c_d: c.c_d * scale,
        rho_d: c.rho_d * scale,
    }
}

#[derive(Serialize)]
struct PolyExactness {
    d: usize,
    name: String,
    lambda: f64,
    expansion: f64,
    closed_form: f64,
    oracle: f64,
    exact_rel_error: f64,
    tail_bound: f64,
    pass: bool,
}

fn polynomial_exactness(d: usize, lambdas: &[f64]) -> Result<Vec<PolyExactness>> {
    let mut out = Vec::new();
    for (name, u) in polynomial_corpus(d)? {
        let jet = u.jet(&vec![C64::new(0.0, 0.0); d], 8)?;
        for &lambda in lambdas {
            let expansion = gaussian_expansion(&u, d, lambda, 8)?.value();
            let closed_form = polynomial_gaussian_integral(&jet, lambda);
            let oracle = gaussian_quadrature_oracle(&u, d, lambda, 1.0)?;
            let tail_bound = polynomial_tail_bound(&jet, lambda);
            let exact_rel_error =
                (expansion - closed_form).abs() / closed_form.abs().max(f64::MIN_POSITIVE);
            let pass = exact_rel_error <= 1e-10
                && (oracle - expansion).abs() <= tail_bound + oracle_tolerance(d);
            out.push(PolyExactness {
                d,
                name: name.clone(),
                lambda,
                expansion,
                closed_form,
                oracle,
                exact_rel_error,
                tail_bound,
                pass,
            });
        }
    }
    Ok(out)
}

fn statphase(
    ds: &[usize],
    lambdas: &[f64],
    orders: &[usize],
    scale: f64,
    custom: Option<(&str, crate::jets::Expr)>,
) -> Result<Outcome> {
    let mut certs = Vec::new();
    let mut exact = Vec::new();
    for &d in ds {
        let consts = scaled_constants(d, scale);
        let corpus = match &custom {
            Some((name, u)) => vec![(name.to_string(), u.clone())],
            None => u_corpus(d)?,
        };
        for (name, u) in corpus {
            for &lambda in lambdas {
                for &n in orders {
                    let c = remainder_certificate(&u, d, lambda, n, &consts)?;
                    certs.push(json!({ "u": name, "certificate": c }));
                }
            }
        }
        if custom.is_none() {
            exact.extend(polynomial_exactness(d, lambdas)?);
        }
    }
    let failed_certs = certs
        .iter()
        .filter(|c| c["certificate"]["pass"] != json!(true))
        .count();
    let failed_exact = exact.iter().filter(|e| !e.pass).count();
    let tightest = certs
        .iter()
        .filter_map(|c| {
            let cert = &c["certificate"];
            Some(cert["tightest_c_d"].as_f64()? / cert["constants"]["c_d"].as_f64()?)
        })
        .fold(0.0, f64::max);
    let pass = failed_certs == 0 && failed_exact == 0;
    let summary = format!(
        "{} certificates ({failed_certs} failed), max residual/bound {tightest:.3e}; {} polynomial exactness checks ({failed_exact} failed); constant scale {scale}",
        certs.len(),
        exact.len()
    );
    let artifacts = vec![Artifact::json(
        "statphase.json",
        &json!({ "constant_scale": scale, "certificates": certs, "polynomial_exactness": exact }),
    )?];
    Ok(Outcome::new(
        "statphase-cert",
        ANCHOR_STATPHASE,
        pass,
        summary,
        artifacts,
    ))
}

fn describe_fit(f: &DecayFit) -> String {
    let model = match f.model {
        DecayModel::Exponential => format!("exponential, rate {:.4}", f.rate),
        DecayModel::Polynomial => format!("polynomial, power {:.3}", f.power),
        DecayModel::Unclassified => format!(
            "unclassified (exp rms {:.3}, power rms {:.3})",
            f.exp_rms, f.poly_rms
        ),
    };
    format!("({}, {}): {model}", f.x, f.omega)
}

fn fbi_wavefront(
    signal: &Signal,
    t: (f64, f64),
    samples: usize,
    window: (f64, f64),
    min_rate: f64,
) -> Result<Outcome> {
    let rep = classify_corpus(signal, t, samples, Some(window), min_rate)?;
    let sing_bad: Vec<String> = rep
        .singular
        .iter()
        .filter(|f| {
            !(f.model == DecayModel::Polynomial && f.power >= window.0 && f.power <= window.1)
        })
        .map(describe_fit)
        .collect();
    let reg_bad: Vec<String> = rep
        .regular
        .iter()
        .filter(|f| !(f.model == DecayModel::Exponential && f.rate >= min_rate))
        .map(describe_fit)
        .collect();
    let summary = if rep.pass {
        format!(
            "{}: {} singular and {} regular probes classified as expected",
            rep.signal,
            rep.singular.len(),
            rep.regular.len()
        )
    } else {
        format!(
            "{}: misclassified probes {}",
            rep.signal,
            sing_bad
                .iter()
                .chain(&reg_bad)
                .cloned()
                .collect::<Vec<_>>()
                .join("; ")
        )
    };
    let fits: Vec<DecayFit> = rep.singular.iter().chain(&rep.regular).cloned().collect();
    let artifacts = vec![
        Artifact::text("fbi_decay.csv", decay_csv(&fits)),
        Artifact::json(
            "fbi.json",
            &json!({ "t_range": [t.0, t.1], "samples": samples, "power_window": [window.0, window.1],
                     "min_rate": min_rate, "classification": rep }),
        )?,
    ];
    Ok(Outcome::new(
        "fbi-wavefront",
        ANCHOR_FBI,
        rep.pass,
        summary,
        artifacts,
    ))
}

/// Transport corpus of `count` seeded jets for the model in dimension `d`.
fn transport_corpus(
    d: usize,
    seed: u64,
    count: usize,
    k_max: usize,
    n_max: usize,
) -> Result<Vec<JetSymbol>> {
    let model = ModelOperator::new(d)?;
    (0..count as u64)
        .map(|s| random_corpus(model, 0, seed.wrapping_add(s), k_max, n_max))
        .collect()
}

fn normalform(d: usize, seed: u64, seeds: usize, r0: &str, commutator: bool) -> Result<Outcome> {
    let corpus = transport_corpus(d, seed, seeds, 3, 6)?;
    let p = JsParams::at_threshold(8.0, d);
    let checks = corpus
        .iter()
        .map(|g| transport_residuals(g, &transport_recursion(g, g.k_max(), g.n_max()), &p))
        .collect::<Result<Vec<_>>>()?;
    let symbolic = checks.iter().all(|c| c.symbolic_zero);
    let sampled = checks
        .iter()
        .map(|c| c.max_sampled_residual)
        .fold(0.0, f64::max);

    let model = ModelOperator::new(d)?;
    let order0 = solve_order0(model, &model.parse(r0)?, 0, ORDER0_NODES)?;
    let order0_res = crate::normalform::order0_residual(&order0, 0.1, 3)?;
    let order0_ok = order0_res <= 1e-9;

    let comm = if commutator {
        commutator_corpus()
            .iter()
            .map(|b| commutator_check(b, &crate::normalform::CommutatorParams::default()))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let comm_worst = comm.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    let pass = symbolic && order0_ok && comm.iter().all(|c| c.pass);
    let mut summary = format!(
        "{} seeds: transport residuals symbolically zero {symbolic}, sampled max {sampled:.3e}; order-0 residual {order0_res:.3e}",
        checks.len()
    );
    if commutator {
        let _ = write!(summary, "; commutator corpus max residual {comm_worst:.3e}");
    }
    let artifacts = vec![Artifact::json(
        "normalform.json",
        &json!({ "d": d, "seed": seed, "transport": checks, "order0": { "r0": r0, "nodes": ORDER0_NODES,
                 "residual": order0_res, "tolerance": 1e-9 }, "commutator": comm }),
    )?];
    Ok(Outcome::new(
        "normalform-demo",
        ANCHOR_NORMALFORM,
        pass,
        summary,
        artifacts,
    ))
}

fn stability(
    d: usize,
    seed: u64,
    seeds: usize,
    ms: &[f64],
    k_max: usize,
    n_max: usize,
) -> Result<Outcome> {
    let corpus = transport_corpus(d, seed, seeds, k_max, n_max)?;
    let params: Vec<JsParams> = ms.iter().map(|&m| JsParams::at_threshold(m, d)).collect();
    let rep = stability_sweep(&corpus, &params)?;
    let summary = format!(
        "{} seeds x {} weights: max asserted ratio {:.9} (tol 1 + {:.0e}), {} rows",
        seeds,
        ms.len(),
        rep.max_asserted_ratio,
        rep.tolerance,
        rep.rows.len()
    );
    let artifacts = vec![Artifact::json("stability.json", &rep)?];
    Ok(Outcome::new(
        "stability-sweep",
        ANCHOR_STABILITY,
        rep.pass,
        summary,
        artifacts,
    ))
}

// ---------------------------------------------------------------------------
// subcommands

/// Front-end entry: name, manifest anchor and accepted keys.
pub struct Subcommand {
    pub name: &'static str,
    pub anchor: &'static str,
    pub keys: &'static [KeySpec],
    run: fn(&RunConfig) -> Result<Outcome>,
}

const fn key(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        kind,
        default,
        help,
    }
}

const MN_KEYS: &[KeySpec] = &[
    key("n", Kind::Count, "2", "cylinder dimension (1, 2 or 3)"),
    key("J", Kind::Count, "6", "largest partial-sum order"),
    key("r_min", Kind::Real, "20", "smallest radius"),
    key("r_max", Kind::Real, "100", "largest radius"),
    key("r_step", Kind::Real, "5", "radius step"),
];

const SZEGO_KEYS: &[KeySpec] = &[
    key("n", Kind::Count, "1", "dimension (1 or 2)"),
    key(
        "tolerance",
        Kind::Real,
        "0",
        "relative error bound; 0 picks 1e-4 for n = 1, 1e-3 for n = 2",
    ),
];

const FIO_KEYS: &[KeySpec] = &[
    key("n", Kind::Count, "1", "dimension"),
    key("J", Kind::Count, "4", "amplitude order"),
    key(
        "eps",
        Kind::Reals,
        "0.3,0.2,0.1,0.05",
        "distances of boundary pairs from the diagonal",
    ),
    key(
        "tolerance",
        Kind::Real,
        "0.05",
        "bound on the relative kernel/model difference",
    ),
];

const MOYAL_KEYS: &[KeySpec] = &[
    key("pair", Kind::Text, "elliptic", "xi-x, elliptic or files"),
    key(
        "a_file",
        Kind::Path,
        "",
        "symbol a in S-expression form (pair = files)",
    ),
    key(
        "b_file",
        Kind::Path,
        "",
        "symbol b in S-expression form (pair = files)",
    ),
    key("K", Kind::Count, "4", "largest Moyal order"),
    key("tolerance", Kind::Real, "1e-6", "bound on eps(K)"),
];

const BOREL_KEYS: &[KeySpec] = &[
    key("N", Kind::Count, "10", "largest remainder order"),
    key(
        "N_cutoff",
        Kind::Count,
        "12",
        "largest certified cutoff index",
    ),
    key(
        "s",
        Kind::Real,
        "1",
        "factorial symbol a_k = k! (s|theta|)^-k",
    ),
    key("c", Kind::Real, "0.125", "realisation scale"),
    key("c_other", Kind::Real, "0.0625", "second realisation scale"),
    key("theta_min", Kind::Real, "20", "smallest |theta|"),
    key("theta_max", Kind::Real, "200", "largest |theta|"),
    key(
        "points",
        Kind::Count,
        "25",
        "theta samples of the remainder fit",
    ),
];

const STATPHASE_KEYS: &[KeySpec] = &[
    key("d", Kind::Count, "1", "dimension (1 or 2)"),
    key(
        "u",
        Kind::Text,
        "",
        "amplitude in y1..yd; empty runs the shipped corpus",
    ),
    key("lambdas", Kind::Reals, "5,10,20", "large parameters"),
    key("N", Kind::Count, "8", "largest expansion order"),
    key(
        "constant_scale",
        Kind::Real,
        "1",
        "factor applied to C_d and rho_d",
    ),
];

const FBI_KEYS: &[KeySpec] = &[
    key(
        "signal",
        Kind::Text,
        "heaviside",
        "heaviside, abs, bump or gaussian",
    ),
    key(
        "samples_file",
        Kind::Path,
        "",
        "sampled signal file; overrides signal",
    ),
    key("t_min", Kind::Real, "10", "smallest t"),
    key("t_max", Kind::Real, "80", "largest t"),
    key("samples", Kind::Count, "24", "t samples per probe"),
    key(
        "power_lo",
        Kind::Real,
        "0.8",
        "lower end of the power window",
    ),
    key(
        "power_hi",
        Kind::Real,
        "1.2",
        "upper end of the power window",
    ),
    key(
        "min_rate",
        Kind::Real,
        "0.03",
        "smallest accepted exponential rate",
    ),
];

const NORMALFORM_KEYS: &[KeySpec] = &[
    key("d", Kind::Count, "2", "dimension of the model operator"),
    key("seeds", Kind::Count, "4", "random transport sources"),
    key(
        "r0",
        Kind::Text,
        "(+ (* x1 eta1) (* 0.5 (exp xi1)))",
        "order-zero source in x1.., y1.., xi1.., eta1..",
    ),
    key(
        "commutator",
        Kind::Count,
        "1",
        "1 runs the operator commutator check",
    ),
];

const STABILITY_KEYS: &[KeySpec] = &[
    key("d", Kind::Count, "2", "dimension of the model operator"),
    key("seeds", Kind::Count, "20", "random sources"),
    key(
        "m",
        Kind::Reals,
        "4,8",
        "weights; rho and R sit at the threshold for each",
    ),
    key("k_max", Kind::Count, "3", "largest k"),
    key("n_max", Kind::Count, "6", "largest n"),
];

const VERIFY_KEYS: &[KeySpec] = &[key(
    "statphase_constant_scale",
    Kind::Real,
    "1",
    "factor applied to the stationary-phase constants",
)];

fn run_mn(c: &RunConfig) -> Result<Outcome> {
    let radii = grid(c.real("r_min")?, c.real("r_max")?, c.real("r_step")?)?;
    mn_asym(&[c.count("n")?], c.count("J")?, &radii)
}

fn run_szego(c: &RunConfig) -> Result<Outcome> {
    let tol = c.real("tolerance")?;
    szego_reproduce(&[c.count("n")?], (tol > 0.0).then_some(tol))
}

fn run_fio(c: &RunConfig) -> Result<Outcome> {
    szego_fio(
        c.count("n")?,
        c.count("J")?,
        &c.reals("eps")?,
        c.real("tolerance")?,
    )
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

fn run_moyal(c: &RunConfig) -> Result<Outcome> {
    let k = c.count("K")?;
    let tol = c.real("tolerance")?;
    let pair = c.text("pair")?;
    let commutator = canonical_commutator()?;
    let rows = match pair.as_str() {
        "xi-x" => {
            // a packet keeps the wrap-around jump of the multiplier x invisible
            let u = wave_packet(PERIOD, GRID, PACKET_SHARPNESS, 10)?;
            let (a, b) = (symbol_1d(&["xi"])?, symbol_1d(&["x"])?);
            let rep = moyal_consistency(&a, &b, k, &u, BandLimit::nyquist(GRID))?;
            let eps1 = rep.eps.get(1).copied().unwrap_or(f64::INFINITY);
            vec![MoyalRow {
                pair: "xi, x".into(),
                pass: eps1 <= 1e-8,
                monotone: rep.monotone,
                eps: rep.eps,
            }]
        }
        "elliptic" => moyal_rows(&elliptic_corpus(), k, c.seed, tol)?,
        "files" => {
            let a = FormalSymbol::parse(&read(&c.text("a_file")?)?)?;
            let b = FormalSymbol::parse(&read(&c.text("b_file")?)?)?;
            moyal_rows(&[("files".into(), a, b)], k, c.seed, tol)?
        }
        other => return Err(Error::Config(format!("key `pair`: unknown pair `{other}`"))),
    };
    moyal_outcome(
        commutator,
        rows,
        json!({ "pair": pair, "K": k, "tolerance": tol, "seed": c.seed }),
    )
}

fn run_borel(c: &RunConfig) -> Result<Outcome> {
    let s = BorelSettings {
        order: c.count("N")?,
        scale: c.real("s")?,
        c: c.real("c")?,
        c_other: c.real("c_other")?,
        theta: (c.real("theta_min")?, c.real("theta_max")?),
        points: c.count("points")?,
        diff_points: c.count("points")?,
    };
    let cert = cutoff_certificate(c.count("N_cutoff")?)?;
    let rem = borel_remainder(&s)?;
    let pass = cert.pass() && rem.pass();
    let summary = format!("{}; {}", cert.entry.summary, rem.entry.summary);
    let artifacts = cert.artifacts.into_iter().chain(rem.artifacts).collect();
    Ok(Outcome::new(
        "borel-demo",
        ANCHOR_BOREL,
        pass,
        summary,
        artifacts,
    ))
}

fn run_statphase(c: &RunConfig) -> Result<Outcome> {
    let d = c.count("d")?;
    let n = c.count("N")?;
    let src = c.text("u")?;
    let custom = if src.is_empty() {
        None
    } else {
        let names: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Some(("custom", crate::jets::parse_expr(&src, &refs)?))
    };
    let orders: Vec<usize> = (1..=n).collect();
    statphase(
        &[d],
        &c.reals("lambdas")?,
        &orders,
        c.real("constant_scale")?,
        custom,
    )
}

fn run_fbi(c: &RunConfig) -> Result<Outcome> {
    let file = c.text("samples_file")?;
    let signal = if file.is_empty() {
        Signal::Builtin(Builtin::parse(&c.text("signal")?)?)
    } else {
        Signal::Samples(SampledSignal::parse(&read(&file)?)?)
    };
    fbi_wavefront(
        &signal,
        (c.real("t_min")?, c.real("t_max")?),
        c.count("samples")?,
        (c.real("power_lo")?, c.real("power_hi")?),
        c.real("min_rate")?,
    )
}

fn run_normalform(c: &RunConfig) -> Result<Outcome> {
    normalform(
        c.count("d")?,
        c.seed,
        c.count("seeds")?,
        &c.text("r0")?,
        c.count("commutator")? != 0,
    )
}

fn run_stability(c: &RunConfig) -> Result<Outcome> {
    stability(
        c.count("d")?,
        c.seed,
        c.count("seeds")?,
        &c.reals("m")?,
        c.count("k_max")?,
        c.count("n_max")?,
    )
}

fn run_verify(c: &RunConfig) -> Result<Outcome> {
    let _ = c;
    Err(Error::Config("verify-all runs through verify_all".into()))
}

const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "mn-asym",
        anchor: ANCHOR_MN,
        keys: MN_KEYS,
        run: run_mn,
    },
    Subcommand {
        name: "szego-reproduce",
        anchor: ANCHOR_SZEGO,
        keys: SZEGO_KEYS,
        run: run_szego,
    },
    Subcommand {
        name: "szego-fio",
        anchor: ANCHOR_FIO,
        keys: FIO_KEYS,
        run: run_fio,
    },
    Subcommand {
        name: "moyal-check",
        anchor: ANCHOR_MOYAL,
        keys: MOYAL_KEYS,
        run: run_moyal,
    },
    Subcommand {
        name: "borel-demo",
        anchor: ANCHOR_BOREL,
        keys: BOREL_KEYS,
        run: run_borel,
    },
    Subcommand {
        name: "statphase-cert",
        anchor: ANCHOR_STATPHASE,
        keys: STATPHASE_KEYS,
        run: run_statphase,
    },
    Subcommand {
        name: "fbi-wavefront",
        anchor: ANCHOR_FBI,
        keys: FBI_KEYS,
        run: run_fbi,
    },
    Subcommand {
        name: "normalform-demo",
        anchor: ANCHOR_NORMALFORM,
        keys: NORMALFORM_KEYS,
        run: run_normalform,
    },
    Subcommand {
        name: "stability-sweep",
        anchor: ANCHOR_STABILITY,
        keys: STABILITY_KEYS,
        run: run_stability,
    },
    Subcommand {
        name: "verify-all",
        anchor: ANCHOR_DETERMINISM,
        keys: VERIFY_KEYS,
        run: run_verify,
    },
];

pub fn subcommands() -> &'static [Subcommand] {
    SUBCOMMANDS
}

pub fn find_subcommand(name: &str) -> Result<&'static Subcommand> {
    SUBCOMMANDS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("unknown subcommand `{name}`")))
}

/// Builds a [`RunConfig`] from the schema of `subcommand` and optional config text.
pub fn configure(
    subcommand: &str,
    text: Option<&str>,
    out: PathBuf,
    seed: u64,
) -> Result<RunConfig> {
    let sc = find_subcommand(subcommand)?;
    RunConfig::build(sc.name, sc.keys, text, out, seed)
}

/// Runs one subcommand; the manifest entry records the canonical parameters.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    let sc = find_subcommand(&config.subcommand)?;
    let mut params = config.canonical();
    params.insert("seed".into(), config.seed.to_string());
    Ok((sc.run)(config)?.with_parameters(params))
}

/// Keys of every subcommand, one block each.
pub fn key_help() -> String {
    let mut out = String::new();
    for sc in SUBCOMMANDS {
        let _ = writeln!(out, "{}:", sc.name);
        for k in sc.keys {
            let _ = writeln!(
                out,
                "  {:<26} default {:<40} {}",
                k.key,
                format!("`{}`", k.default),
                k.help
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// verification battery

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Suite> {
        match name {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => Err(Error::Config(format!(
                "unknown suite `{other}`; expected fast or full"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Fast => "fast",
            Suite::Full => "full",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub seed: u64,
    /// Factor on the stationary-phase constants; 1 is the shipped calibration.
    pub statphase_constant_scale: f64,
    /// Re-run the battery for the byte-identity criterion.
    pub determinism: bool,
}

impl VerifyOptions {
    pub fn new(suite: Suite, seed: u64) -> VerifyOptions {
        VerifyOptions {
            suite,
            seed,
            statphase_constant_scale: 1.0,
            determinism: true,
        }
    }
}

/// One row of the verification table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionRow {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub summary: String,
    /// Wall time; kept out of the artifacts.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct VerifySummary {
    pub options: VerifyOptions,
    pub rows: Vec<CriterionRow>,
    pub outcomes: Vec<Outcome>,
}

impl VerifySummary {
    pub fn failed(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.id.clone())
            .collect()
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, id: &str) -> Option<&CriterionRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Fixed-width table keyed by criterion ID.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<4} {:<5} {:>8}  {:<34} summary",
            "id", "pass", "seconds", "criterion"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<4} {:<5} {:>8.2}  {:<34} {}",
                r.id,
                if r.pass { "PASS" } else { "FAIL" },
                r.seconds,
                r.title,
                r.summary
            );
        }
        let failed = self.failed();
        if failed.is_empty() {
            let _ = writeln!(
                out,
                "all criteria passed ({} suite)",
                self.options.suite.name()
            );
        } else {
            let _ = writeln!(out, "failed criteria: {}", failed.join(", "));
        }
        out
    }
}

/// `(id, title)` of criteria 1 to 10.
pub const CRITERIA: [(&str, &str); 10] = [
    ("1", "m_n asymptotics"),
    ("2", "Szego reproducing property"),
    ("3", "Moyal and quantization consistency"),
    ("4", "Banach-algebra bound"),
    ("5", "Ehrenpreis certificate"),
    ("6", "Borel remainder"),
    ("7", "stationary-phase certificate"),
    ("8", "FBI wavefront classification"),
    ("9", "normal-form recursion"),
    ("10", "determinism"),
];

fn criterion(id: &str, opts: &VerifyOptions) -> Result<Outcome> {
    let full = opts.suite == Suite::Full;
    match id {
        "1" => mn_asym(
            &[1, 2, 3],
            6,
            &grid(20.0, 100.0, if full { 2.5 } else { 5.0 })?,
        ),
        "2" => szego_reproduce(&[1, 2], None),
        "3" => {
            let commutator = canonical_commutator()?;
            let rows = moyal_rows(&elliptic_corpus(), 4, opts.seed, 1e-6)?;
            moyal_outcome(
                commutator,
                rows,
                json!({ "K": 4, "tolerance": 1e-6, "seed": opts.seed }),
            )
        }
        "4" => banach(
            if full { &[1.0, 2.0, 4.0] } else { &[1.0, 2.0] },
            if full { 17 } else { 9 },
        ),
        "5" => cutoff_certificate(12),
        "6" => borel_remainder(&BorelSettings::default()),
        "7" => {
            let orders: Vec<usize> = if full {
                (1..=8).collect()
            } else {
                vec![2, 4, 6, 8]
            };
            statphase(
                &[1, 2],
                &[5.0, 10.0, 20.0],
                &orders,
                opts.statphase_constant_scale,
                None,
            )
        }
        "8" => fbi_wavefront(
            &Signal::Builtin(Builtin::Heaviside),
            (10.0, 80.0),
            24,
            (0.8, 1.2),
            0.03,
        ),
        "9" => {
            let transport =
                normalform(2, opts.seed, 20, "(+ (* x1 eta1) (* 0.5 (exp xi1)))", true)?;
            let ms: &[f64] = if full { &[2.0, 4.0, 8.0] } else { &[4.0, 8.0] };
            let stab = stability(2, opts.seed, 20, ms, 3, 6)?;
            let pass = transport.pass() && stab.pass();
            let summary = format!("{}; {}", transport.entry.summary, stab.entry.summary);
            let artifacts = transport
                .artifacts
                .into_iter()
                .chain(stab.artifacts)
                .collect();
            Ok(Outcome::new(
                "verify-all",
                ANCHOR_NORMALFORM,
                pass,
                summary,
                artifacts,
            ))
        }
        other => Err(Error::Config(format!("unknown criterion `{other}`"))),
    }
}

fn battery(opts: &VerifyOptions) -> Result<(Vec<CriterionRow>, Vec<Outcome>)> {
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    let mut params = BTreeMap::new();
    params.insert("suite".to_string(), opts.suite.name().to_string());
    params.insert("seed".to_string(), opts.seed.to_string());
    params.insert(
        "statphase_constant_scale".to_string(),
        fmt17(opts.statphase_constant_scale),
    );
    for (id, title) in &CRITERIA[..9] {
        let start = Instant::now();
        let mut o = criterion(id, opts)?
            .prefixed(&format!("c{id}_"))
            .with_parameters(params.clone());
        o.entry.subcommand = "verify-all".into();
        o.entry.criterion = Some(id.to_string());
        rows.push(CriterionRow {
            id: id.to_string(),
            title: title.to_string(),
            pass: o.pass(),
            summary: o.entry.summary.clone(),
            seconds: start.elapsed().as_secs_f64(),
        });
        outcomes.push(o);
    }
    Ok((rows, outcomes))
}

/// Concatenated artifact bytes and manifest entries, the unit of comparison for determinism.
pub fn artifact_digest(outcomes: &[Outcome]) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = outcomes
        .iter()
        .flat_map(|o| {
            o.artifacts
                .iter()
                .map(|a| (a.name.clone(), a.contents.clone()))
        })
        .collect();
    let manifest: Vec<&ManifestEntry> = outcomes.iter().map(|o| &o.entry).collect();
    out.push(("manifest.json".into(), report::to_json(&manifest)?));
    Ok(out)
}

/// Runs criteria 1 to 9 and, when requested, repeats them to check criterion 10.
pub fn verify_all(opts: &VerifyOptions) -> Result<VerifySummary> {
    let (mut rows, mut outcomes) = battery(opts)?;
    if opts.determinism {
        let start = Instant::now();
        let (_, again) = battery(opts)?;
        let first = artifact_digest(&outcomes)?;
        let second = artifact_digest(&again)?;
        let differing: Vec<String> = first
            .iter()
            .zip(&second)
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.0.clone())
            .collect();
        let pass = first.len() == second.len() && differing.is_empty();
        let summary = if pass {
            format!(
                "{} artifacts byte-identical across two runs with seed {}",
                first.len(),
                opts.seed
            )
        } else {
            format!("artifacts differ between runs: {}", differing.join(", "))
        };
        let artifacts = vec![Artifact::json(
            "c10_determinism.json",
            &json!({ "artifacts": first.iter().map(|a| a.0.clone()).collect::<Vec<_>>(), "pass": pass }),
        )?];
        let mut o = Outcome::new(
            "verify-all",
            ANCHOR_DETERMINISM,
            pass,
            summary.clone(),
            artifacts,
        );
        o.entry.criterion = Some("10".into());
        rows.push(CriterionRow {
            id: "10".into(),
            title: CRITERIA[9].1.into(),
            pass,
            summary,
            seconds: start.elapsed().as_secs_f64(),
        });
        outcomes.push(o);
    }
    Ok(VerifySummary {
        options: opts.clone(),
        rows,
        outcomes,
    })
}

/// Usage text of the command-line front end.
pub fn usage() -> String {
    let names: Vec<&str> = SUBCOMMANDS.iter().map(|s| s.name).collect();
    format!(
        "usage: microlocal <subcommand> [--config <path>] [--out <dir>] [--seed <int>] [--suite fast|full]\n\
         subcommands: {}\n\
         config files hold `key = value` lines; `microlocal keys` lists the accepted keys\n",
        names.join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(20.0, 100.0, 5.0).unwrap().len(), 17);
        assert_eq!(*grid(10.0, 100.0, 30.0).unwrap().last().unwrap(), 100.0);
        assert!(grid(1.0, 0.0, 1.0).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn every_subcommand_has_valid_defaults() {
        for sc in subcommands() {
            configure(sc.name, None, PathBuf::from("out"), 0).unwrap();
        }
        assert!(find_subcommand("nope").is_err());
    }

    #[test]
    fn unknown_key_names_key_and_subcommand() {
        let e = configure(
            "mn-asym",
            Some("n = 2\nradius = 3\n"),
            PathBuf::from("out"),
            0,
        )
        .unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("`radius`") && msg.contains("mn-asym"), "{msg}");
    }

    #[test]
    fn mn_asym_example_grid() {
        let cfg = configure(
            "mn-asym",
            Some("n = 2\nJ = 6\nr_min = 10\nr_max = 100\nr_step = 10\n"),
            PathBuf::from("o"),
            0,
        )
        .unwrap();
        let o = run(&cfg).unwrap();
        assert!(o.pass(), "{}", o.entry.summary);
        let csv = &o.artifacts[0].contents;
        assert!(csv.starts_with("r,exact,"));
        assert_eq!(csv.lines().count(), 11);
        assert_eq!(o.entry.parameters["n"], "2");
        assert_eq!(o.entry.anchor, ANCHOR_MN);
    }

    #[test]
    fn leading_constant_window() {
        let v = mn_leading_constant().unwrap();
        assert!((0.98..=1.02).contains(&v), "{v}");
    }

    #[test]
    fn moyal_xi_x_pair() {
        let cfg = configure(
            "moyal-check",
            Some("pair = xi-x\nK = 2\n"),
            PathBuf::from("o"),
            0,
        )
        .unwrap();
        let o = run(&cfg).unwrap();
        assert!(o.pass(), "{}", o.entry.summary);
        assert!(o.artifacts[0].contents.contains("\"eps\""));
    }

    #[test]
    fn moyal_rejects_unknown_pair() {
        let cfg = configure("moyal-check", Some("pair = nope\n"), PathBuf::from("o"), 0).unwrap();
        assert!(run(&cfg).unwrap_err().to_string().contains("`pair`"));
    }

    #[test]
    fn statphase_custom_amplitude() {
        let cfg = configure(
            "statphase-cert",
            Some("u = (exp y1)\nlambdas = 20\nN = 4\n"),
            PathBuf::from("o"),
            0,
        )
        .unwrap();
        let o = run(&cfg).unwrap();
        assert!(o.pass(), "{}", o.entry.summary);
        let bad = configure(
            "statphase-cert",
            Some("u = (exp z)\n"),
            PathBuf::from("o"),
            0,
        )
        .unwrap();
        assert!(run(&bad).is_err());
    }

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse("fast").unwrap(), Suite::Fast);
        assert_eq!(Suite::parse("full").unwrap(), Suite::Full);
        assert!(Suite::parse("quick")
            .unwrap_err()
            .to_string()
            .contains("`quick`"));
    }

    #[test]
    fn outputs_and_manifest() {
        let dir = std::env::temp_dir().join(format!("microlocal-exp-{}", std::process::id()));
        let cfg = configure("szego-fio", Some("eps = 0.3,0.2\n"), dir.clone(), 0).unwrap();
        let o = run(&cfg).unwrap();
        let manifest = write_outputs(&dir, std::slice::from_ref(&o)).unwrap();
        let text = fs::read_to_string(&manifest).unwrap();
        assert!(text.contains("\"subcommand\": \"szego-fio\""));
        assert!(text.contains(ANCHOR_FIO));
        assert!(dir.join("szego_fio.csv").exists());
        assert!(write_outputs(&dir, &[o.clone(), o]).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
