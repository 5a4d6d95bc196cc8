//! Python bindings: Voronoi checks, kernel tables, coefficient listings and
//! the randomized identity suites.

use std::path::Path;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use metavoronoi_core::bessel::{kernel_eval, KernelSpec};
use metavoronoi_core::forms::{exact_to_f64, parse_arch, ArchType, FormManifest, HalfIntegralForm};
use metavoronoi_core::suites::{run_suite, Suite};
use metavoronoi_core::voronoi::{verify as verify_job, RhsPath, TestFunction, VoronoiJob};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load_form(manifest: &str) -> PyResult<HalfIntegralForm> {
    FormManifest::load(Path::new(manifest)).and_then(|m| m.build()).map_err(value_err)
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Both sides of the summation formula for the form in `manifest`,
/// returned as the JSON report decoded into a dict.
#[pyfunction]
#[pyo3(signature = (manifest, a, b, bump_center=100.0, bump_radius=50.0, tol=1e-6, n_max=None, path="auto"))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    manifest: &str,
    a: i64,
    b: i64,
    bump_center: f64,
    bump_radius: f64,
    tol: f64,
    n_max: Option<i64>,
    path: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let form = load_form(manifest)?;
    let test = TestFunction::bump(bump_center, bump_radius).map_err(value_err)?;
    let mut job = VoronoiJob::new(form, a, b, test, tol);
    job.rhs_n_max = n_max;
    job.path = match path {
        "auto" => RhsPath::Auto,
        "infinity" => RhsPath::Infinity,
        "general" => RhsPath::General,
        other => return Err(value_err(format!("unknown path '{other}'"))),
    };
    let report = py.detach(|| verify_job(&job)).map_err(value_err)?;
    to_python(py, &report)
}

/// Kernel values at each `x`. `arch` is `holomorphic` or `maass:<re>,<im>`.
#[pyfunction]
#[pyo3(signature = (xs, arch="holomorphic", k=1, sign=1))]
fn kernel(py: Python<'_>, xs: Vec<f64>, arch: &str, k: u32, sign: i8) -> PyResult<Vec<Complex64>> {
    if sign != 1 && sign != -1 {
        return Err(value_err("sign must be 1 or -1"));
    }
    let spec = match parse_arch(arch).map_err(value_err)? {
        ArchType::Holomorphic => KernelSpec::holomorphic(k, sign),
        ArchType::Maass { s } => KernelSpec::maass(s, k, sign),
    };
    py.detach(|| xs.iter().map(|&x| kernel_eval(&spec, x)).collect::<Result<Vec<_>, _>>())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Nonzero coefficients at `∞` up to `n_max` as `(n, exact, normalised)`.
#[pyfunction]
fn coefficients(manifest: &str, n_max: i64) -> PyResult<Vec<(i64, String, f64)>> {
    let form = load_form(manifest)?;
    if n_max >= form.order() {
        return Err(value_err(format!("the cache only reaches {}", form.order() - 1)));
    }
    Ok((0..=n_max)
        .filter_map(|n| {
            let c = form.coeff_exact(n);
            (exact_to_f64(&c) != 0.0).then(|| (n, c.to_string(), form.coeff(n)))
        })
        .collect())
}

/// One randomized identity suite; the outcome as a dict.
#[pyfunction]
#[pyo3(signature = (suite, seed=0, count=None))]
fn check<'py>(py: Python<'py>, suite: &str, seed: u64, count: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(value_err)?;
    let outcome = py.detach(|| run_suite(suite, seed, count.unwrap_or(suite.default_count())));
    let d = to_python(py, &outcome)?;
    d.set_item("passed", outcome.passed())?;
    Ok(d)
}

#[pymodule]
fn metavoronoi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
