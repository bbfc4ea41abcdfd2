//! Python module `subcheck_py`.
//!
//! Reports come back as plain dicts decoded from the same JSON the CLI
//! prints, so both front ends share one schema.

use std::collections::BTreeMap;
use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use subcheck::corpus::{self, CorpusEntry};
use subcheck::expr::{eval_jet2, parse_with_params, Params};
use subcheck::geometry::{standard_j, MetricField};
use subcheck::report::{self, Command, RunConfig};
use subcheck::submersion::{split_d1_d2, SubmersionMap};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

fn params_of(params: Option<BTreeMap<String, f64>>) -> Params {
    params.unwrap_or_default()
}

/// Value of an expression in `x1..xn` at `point`.
#[pyfunction]
#[pyo3(signature = (text, point, params=None))]
fn evaluate(text: &str, point: Vec<f64>, params: Option<BTreeMap<String, f64>>) -> PyResult<f64> {
    let params = params_of(params);
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    let e = parse_with_params(text, point.len().max(1), &names).map_err(value_err)?;
    e.eval_f64(&point, &params).map_err(value_err)
}

/// `(value, gradient, hessian)` by forward-mode differentiation.
#[pyfunction]
#[pyo3(signature = (text, point, params=None))]
fn derivatives(
    text: &str,
    point: Vec<f64>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let params = params_of(params);
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    let e = parse_with_params(text, point.len().max(1), &names).map_err(value_err)?;
    let j = eval_jet2(&e, &point, &params).map_err(value_err)?;
    Ok((j.val(), j.gradient(), j.hessian()))
}

/// Classifies a map on flat space with the standard complex structure at
/// one point.
#[pyfunction]
#[pyo3(signature = (components, point, params=None))]
fn classify_map<'py>(
    py: Python<'py>,
    components: Vec<String>,
    point: Vec<f64>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = params_of(params);
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    let m = point.len();
    let comps = components
        .iter()
        .map(|t| parse_with_params(t, m, &names).and_then(|e| e.bind(&params)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    let j = standard_j(m).map_err(value_err)?;
    let map = SubmersionMap::new(comps, MetricField::euclidean(m), j).map_err(value_err)?;
    let a = split_d1_d2(&map, &point).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("verdict", a.verdict.as_str())?;
    out.set_item("theta", a.theta)?;
    out.set_item("d1_dim", a.d1.dim())?;
    out.set_item("d2_dim", a.d2.dim())?;
    out.set_item("mu_dim", a.mu.dim())?;
    out.set_item("boundary", a.boundary)?;
    out.set_item("spectrum", a.spectrum.clone())?;
    out.set_item("submersion_residual", a.submersion_residual)?;
    out.set_item("d1_basis", a.d1.vectors())?;
    out.set_item("d2_basis", a.d2.vectors())?;
    Ok(out)
}

fn load(paths: &[String], cmd: Command, params: &Params) -> PyResult<Vec<CorpusEntry>> {
    if paths.is_empty() && cmd == Command::CorpusVerify {
        return corpus::load_all_bundled(params).map_err(value_err);
    }
    paths
        .iter()
        .map(|p| corpus::load(Path::new(p), params).map_err(value_err))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    cmd: Command,
    paths: Vec<String>,
    seed: u64,
    points: Option<usize>,
    tol: Option<f64>,
    only: Option<Vec<String>>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let params = params_of(params);
    let cfg = RunConfig {
        seed,
        points,
        tol,
        only,
        params: params.clone(),
        ..Default::default()
    };
    cfg.validate().map_err(PyValueError::new_err)?;
    let entries = load(&paths, cmd, &params)?;
    let jobs: Vec<_> = entries.into_iter().map(|e| (e.origin, e.instances)).collect();
    let doc = py.detach(|| report::run(&jobs, cmd, &cfg));
    if doc.exit_code == 3 {
        return Err(PyRuntimeError::new_err(doc.to_json()));
    }
    to_py(py, &doc.to_json())
}

/// Classification report for definition files (or bundled entry names).
#[pyfunction]
#[pyo3(signature = (paths, seed=42, points=None, params=None))]
fn classify<'py>(
    py: Python<'py>,
    paths: Vec<String>,
    seed: u64,
    points: Option<usize>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    run(py, Command::Classify, paths, seed, points, None, None, params)
}

/// Classification plus the theorem suite.
#[pyfunction]
#[pyo3(signature = (paths, seed=42, points=None, tol=None, only=None, params=None))]
fn check<'py>(
    py: Python<'py>,
    paths: Vec<String>,
    seed: u64,
    points: Option<usize>,
    tol: Option<f64>,
    only: Option<Vec<String>>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    run(py, Command::Check, paths, seed, points, tol, only, params)
}

/// Full run over the bundled corpus.
#[pyfunction]
#[pyo3(signature = (seed=42, points=None))]
fn corpus_verify<'py>(py: Python<'py>, seed: u64, points: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    run(py, Command::CorpusVerify, Vec::new(), seed, points, None, None, None)
}

#[pyfunction]
fn bundled_names() -> Vec<&'static str> {
    corpus::bundled_names()
}

#[pyfunction]
fn check_ids() -> Vec<&'static str> {
    subcheck::theorems::catalog_ids()
}

#[pymodule]
fn subcheck_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every function to `m`; also used to build the module in tests.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(derivatives, m)?)?;
    m.add_function(wrap_pyfunction!(classify_map, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_verify, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_names, m)?)?;
    m.add_function(wrap_pyfunction!(check_ids, m)?)?;
    Ok(())
}
