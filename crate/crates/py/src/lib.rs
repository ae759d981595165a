//! Python bindings for `openbook_core`.

use openbook_core::cotangent::{self, DehnTwistProfile, SpherePoint};
use openbook_core::monodromy;
use openbook_core::moves::{equivalent_up_to_moves, Equivalence, OpenBookDesc};
use openbook_core::scenario::{run_suite, ScenarioConfig, SUITES};
use openbook_core::weinstein::ModelPoint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Pair = (Vec<f64>, Vec<f64>);

/// Suite names accepted by `run`.
#[pyfunction]
fn suites() -> Vec<&'static str> {
    SUITES.to_vec()
}

/// Runs a suite and returns the JSON report. `config` is TOML text.
#[pyfunction]
#[pyo3(signature = (suite, seed=None, config=None))]
fn run(py: Python<'_>, suite: &str, seed: Option<u64>, config: Option<&str>) -> PyResult<String> {
    let mut cfg = match config {
        Some(text) => ScenarioConfig::from_toml(text).map_err(value_err)?,
        None => ScenarioConfig::default(),
    };
    cfg.suite = suite.to_string();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = py.detach(|| run_suite(&cfg)).map_err(value_err)?;
    Ok(out.report.to_json())
}

/// Radial projection of `(q, p)` onto `T*S^n`.
#[pyfunction]
fn project(q: Vec<f64>, p: Vec<f64>) -> PyResult<Pair> {
    let pt = cotangent::project_to_bundle(&q, &p).map_err(value_err)?;
    Ok((pt.q().to_vec(), pt.p().to_vec()))
}

/// The `k`-fold model Dehn twist supported in `|p| < p0`.
#[pyfunction]
#[pyo3(signature = (q, p, k=1, p0=1.0))]
fn dehn_twist(q: Vec<f64>, p: Vec<f64>, k: u32, p0: f64) -> PyResult<Pair> {
    let pt = SpherePoint::new(q, p).map_err(value_err)?;
    let profile = DehnTwistProfile::new(p0, k).map_err(value_err)?;
    let out = cotangent::dehn_twist(&pt, &profile);
    Ok((out.q().to_vec(), out.p().to_vec()))
}

/// Normalized geodesic flow for time `t`.
#[pyfunction]
fn geodesic_flow(q: Vec<f64>, p: Vec<f64>, t: f64) -> PyResult<Pair> {
    let pt = SpherePoint::new(q, p).map_err(value_err)?;
    let out = cotangent::geodesic_flow(&pt, t).map_err(value_err)?;
    Ok((out.q().to_vec(), out.p().to_vec()))
}

/// Closed-form post-surgery monodromy on the `(z, w)` block, from page `−ε` to `+ε`.
#[pyfunction]
fn monodromy_closed_form(z: Vec<f64>, w: Vec<f64>, epsilon: f64) -> PyResult<Pair> {
    if z.len() != w.len() {
        return Err(PyValueError::new_err("z and w must have equal length"));
    }
    let start = ModelPoint {
        x: vec![],
        y: vec![],
        z,
        w,
    };
    let out = monodromy::post_surgery_closed_form(&start, epsilon).map_err(value_err)?;
    Ok((out.z, out.w))
}

/// Parses an open book description and returns its canonical text.
#[pyfunction]
fn canonical_openbook(text: &str) -> PyResult<String> {
    let d: OpenBookDesc = text.parse().map_err(value_err)?;
    Ok(d.canonical().to_string())
}

/// Bounded equivalence search. Returns the depth used, or `None` when unknown.
#[pyfunction]
#[pyo3(signature = (a, b, depth=6))]
fn equivalent(a: &str, b: &str, depth: usize) -> PyResult<Option<usize>> {
    let a: OpenBookDesc = a.parse().map_err(value_err)?;
    let b: OpenBookDesc = b.parse().map_err(value_err)?;
    Ok(match equivalent_up_to_moves(&a, &b, depth) {
        Equivalence::Equivalent { depth } => Some(depth),
        Equivalence::Unknown => None,
    })
}

#[pymodule]
fn openbook_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(suites, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(dehn_twist, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_flow, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_openbook, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
