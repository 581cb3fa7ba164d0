//! Python bindings: closed-form verdicts, packing counts and full CLI runs
//! from a JSON config.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use randers_lab::cli::{run, RunConfig};
use randers_lab::modelspace::{comparison_volume as comparison_volume_rs, SpaceForm};
use randers_lab::numerics::beta_fn;
use randers_lab::orbits::{packing_count_only, GroupAction};
use randers_lab::sobolev::{classify_pair as classify_rs, funk_beta_verdict, funk_parameter};
use randers_lab::{Exponent, Extended};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ext(v: Extended) -> f64 {
    v.value().unwrap_or(f64::INFINITY)
}

/// Regime name ("S", "MT", "M") of `(p, q)` in dimension `d`, or None.
#[pyfunction]
fn classify_pair(p: f64, q: f64, d: usize) -> Option<String> {
    classify_rs(p, Exponent::from_f64(q), d).ok().map(|a| a.regime.to_string())
}

/// `(w_bound, lq, fails)` for the Funk test function; divergent values are
/// `inf`. Without `t` the pair must be admissible.
#[pyfunction]
#[pyo3(signature = (d, p, q, t=None))]
fn funk_verdict(d: usize, p: f64, q: f64, t: Option<f64>) -> PyResult<(f64, f64, bool)> {
    let q = Exponent::from_f64(q);
    let t = match t {
        Some(t) => t,
        None => funk_parameter(&classify_rs(p, q, d).map_err(err)?),
    };
    let v = funk_beta_verdict(d, p, q, t).map_err(err)?;
    Ok((ext(v.w_norm_bound), ext(v.lq_norm), v.embedding_fails))
}

/// `B(x, y)`, `inf` when divergent.
#[pyfunction]
fn beta(x: f64, y: f64) -> PyResult<f64> {
    beta_fn(x, y).map(ext).map_err(err)
}

/// Volume of a geodesic ball of radius `rho` in the space form of curvature `c`.
#[pyfunction]
fn comparison_volume(c: f64, d: usize, rho: f64) -> PyResult<f64> {
    comparison_volume_rs(c, d, rho).map_err(err)
}

/// `(count, method)` for the full rotation orbit of the chart point `y`.
#[pyfunction]
#[pyo3(signature = (y, rho, curvature=0.0))]
fn packing_count(y: Vec<f64>, rho: f64, curvature: f64) -> PyResult<(usize, String)> {
    let space = SpaceForm::new(y.len(), curvature).map_err(err)?;
    let (n, m) = packing_count_only(&GroupAction::FullRotation, &space, &y, rho).map_err(err)?;
    Ok((n, m.to_string()))
}

/// Runs a JSON config as the CLI would; returns `(artifact, passed)`.
#[pyfunction]
fn run_config(config: &str) -> PyResult<(String, bool)> {
    let cfg = RunConfig::from_json(config).map_err(err)?;
    let out = run(&cfg).map_err(err)?;
    Ok((out.render().map_err(err)?, out.passed()))
}

#[pymodule]
fn randers_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(classify_pair, m)?)?;
    m.add_function(wrap_pyfunction!(funk_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_volume, m)?)?;
    m.add_function(wrap_pyfunction!(packing_count, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
