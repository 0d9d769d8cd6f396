//! Python bindings: symbols, kernels, certificates and the experiment runners.
//!
//! Structured results cross the boundary as plain dicts and lists built from
//! their JSON form.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use microlocal::experiments::{self, Suite, VerifyOptions};
use microlocal::fbi::{wavefront_probe, Builtin, Signal};
use microlocal::normalform::{
    random_corpus, stability_sweep, transport_recursion, transport_residuals, JsParams,
    ModelOperator,
};
use microlocal::statphase::{gaussian_expansion, remainder_certificate, StatPhaseConstants};
use microlocal::symbols::{moyal_product, FormalSymbol};
use microlocal::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Invalid(_) | Error::Shape(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Formal symbol `Σ_k a_k` with homogeneous coefficients.
#[pyclass(name = "Symbol", module = "microlocal_py", frozen)]
struct PySymbol {
    inner: FormalSymbol,
}

#[pymethods]
impl PySymbol {
    /// Parses the S-expression symbol format with its `(d, d0, K)` header.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<PySymbol> {
        Ok(PySymbol {
            inner: FormalSymbol::parse(text).map_err(err)?,
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn degree(&self) -> f64 {
        self.inner.degree()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// `a♯b` through order `k`.
    fn moyal(&self, other: &PySymbol, k: usize) -> PyResult<PySymbol> {
        Ok(PySymbol {
            inner: moyal_product(&self.inner, &other.inner, k).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Symbol(d={}, degree={}, order={})",
            self.inner.d(),
            self.inner.degree(),
            self.inner.order()
        )
    }
}

/// `e^{−r} m_n(r)` for complex `r` in the cone.
#[pyfunction]
fn mn_amplitude(n: usize, r: Complex64) -> PyResult<Complex64> {
    microlocal::cylinder::eval_mn_amplitude(n, r).map_err(err)
}

/// Szegő kernel `K(z, w)` of the tube over the sphere in dimension `n`.
#[pyfunction]
fn szego_kernel(n: usize, z: Vec<Complex64>, w: Vec<Complex64>) -> PyResult<Complex64> {
    Ok(microlocal::cylinder::szego_kernel(n, &z, &w)
        .map_err(err)?
        .kernel())
}

fn parse_u(u: &str, d: usize) -> PyResult<microlocal::jets::Expr> {
    let names: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    microlocal::jets::parse_expr(u, &refs).map_err(err)
}

/// Stationary-phase expansion of `∫ e^{−λ|y|²} u(y) dy` to order `n`; `u` uses `y1..yd`.
#[pyfunction]
fn gaussian_expansion_value(u: &str, d: usize, lam: f64, n: usize) -> PyResult<f64> {
    Ok(gaussian_expansion(&parse_u(u, d)?, d, lam, n)
        .map_err(err)?
        .value())
}

/// Remainder certificate; constants default to the shipped calibration.
#[pyfunction]
#[pyo3(signature = (u, d, lam, n, c_d=None, rho_d=None))]
fn statphase_certificate<'py>(
    py: Python<'py>,
    u: &str,
    d: usize,
    lam: f64,
    n: usize,
    c_d: Option<f64>,
    rho_d: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let base = StatPhaseConstants::default_for(d);
    let consts = StatPhaseConstants {
        c_d: c_d.unwrap_or(base.c_d),
        rho_d: rho_d.unwrap_or(base.rho_d),
    };
    let cert = remainder_certificate(&parse_u(u, d)?, d, lam, n, &consts).map_err(err)?;
    serialize(py, &cert)
}

/// Decay fit of `|Tu(x, ω)|` in `t` for a builtin signal.
#[pyfunction]
#[pyo3(signature = (signal, x, omega, t_min=10.0, t_max=80.0, samples=24))]
fn fbi_probe<'py>(
    py: Python<'py>,
    signal: &str,
    x: f64,
    omega: f64,
    t_min: f64,
    t_max: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let u = Signal::Builtin(Builtin::parse(signal).map_err(err)?);
    serialize(
        py,
        &wavefront_probe(&u, x, omega, (t_min, t_max), samples).map_err(err)?,
    )
}

/// Transport recursion on a seeded random source; returns the residual check.
#[pyfunction]
#[pyo3(signature = (d=2, seed=0, k_max=3, n_max=6))]
fn transport_check<'py>(
    py: Python<'py>,
    d: usize,
    seed: u64,
    k_max: usize,
    n_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let model = ModelOperator::new(d).map_err(err)?;
    let g = random_corpus(model, 0, seed, k_max, n_max).map_err(err)?;
    let b = transport_recursion(&g, k_max, n_max);
    serialize(
        py,
        &transport_residuals(&g, &b, &JsParams::at_threshold(8.0, d)).map_err(err)?,
    )
}

/// Norm-stability sweep over `seeds` random sources at the threshold weights `ms`.
#[pyfunction]
#[pyo3(signature = (ms, seeds=20, d=2, seed=0, k_max=3, n_max=6))]
fn stability<'py>(
    py: Python<'py>,
    ms: Vec<f64>,
    seeds: u64,
    d: usize,
    seed: u64,
    k_max: usize,
    n_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let model = ModelOperator::new(d).map_err(err)?;
    let corpus = (0..seeds)
        .map(|s| random_corpus(model, 0, seed + s, k_max, n_max))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let params: Vec<JsParams> = ms.iter().map(|&m| JsParams::at_threshold(m, d)).collect();
    serialize(py, &stability_sweep(&corpus, &params).map_err(err)?)
}

/// Runs one subcommand with `key = value` config text; writes artifacts when `out` is given.
#[pyfunction]
#[pyo3(signature = (subcommand, config="", seed=0, out=None))]
fn run<'py>(
    py: Python<'py>,
    subcommand: &str,
    config: &str,
    seed: u64,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let cfg = experiments::configure(subcommand, Some(config), dir.clone(), seed).map_err(err)?;
    let outcome = py.detach(|| experiments::run(&cfg)).map_err(err)?;
    if out.is_some() {
        experiments::write_outputs(&dir, std::slice::from_ref(&outcome)).map_err(err)?;
    }
    serialize(py, &outcome.entry)
}

/// Runs the criterion battery; returns rows, failed IDs and the printed table.
#[pyfunction]
#[pyo3(signature = (suite="fast", seed=0, determinism=false, statphase_constant_scale=1.0))]
fn verify_all<'py>(
    py: Python<'py>,
    suite: &str,
    seed: u64,
    determinism: bool,
    statphase_constant_scale: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut opts = VerifyOptions::new(Suite::parse(suite).map_err(err)?, seed);
    opts.determinism = determinism;
    opts.statphase_constant_scale = statphase_constant_scale;
    let summary = py.detach(|| experiments::verify_all(&opts)).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("rows", serialize(py, &summary.rows)?)?;
    dict.set_item("failed", summary.failed())?;
    dict.set_item("pass", summary.pass())?;
    dict.set_item("table", summary.table())?;
    Ok(dict.into_any())
}

#[pymodule]
fn microlocal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymbol>()?;
    m.add_function(wrap_pyfunction!(mn_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(szego_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_expansion_value, m)?)?;
    m.add_function(wrap_pyfunction!(statphase_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(fbi_probe, m)?)?;
    m.add_function(wrap_pyfunction!(transport_check, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    Ok(())
}
