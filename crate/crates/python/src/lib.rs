//! Python bindings: sampled paths, linear Young equations, solves, flows and spectra.
//!
//! Matrices cross the boundary as lists of rows; reports come back as dicts.

use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use ylyap::lyapunov::{self, Method, SpectrumOptions};
use ylyap::path::{self, Interval, SampledPath};
use ylyap::solver::{self, SolveOptions};
use ylyap::stochastic::{self, FbmMethod, FbmSpec};
use ylyap::triangular::{self, TriangularYDE};
use ylyap::{young, LinearYDE, YoungParams};

create_exception!(ylyap_py, YlyapError, PyException);

fn err(e: ylyap::Error) -> PyErr {
    match e {
        ylyap::Error::Domain(msg) => PyValueError::new_err(msg),
        other => YlyapError::new_err(other.to_string()),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Serializes through JSON into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| YlyapError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn window(a: f64, b: f64) -> PyResult<Interval> {
    Interval::new(a, b).map_err(err)
}

/// Scalar or matrix valued path sampled on an increasing grid, linear between nodes.
#[pyclass(name = "Path", module = "ylyap_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPath {
    inner: SampledPath,
}

#[pymethods]
impl PyPath {
    /// `values[i]` is a float for scalar paths or a list of rows for matrix paths.
    #[new]
    fn new(times: Vec<f64>, values: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(v) = values.extract::<Vec<f64>>() {
            return Ok(PyPath { inner: SampledPath::scalar(times, v).map_err(err)? });
        }
        let mats: Vec<Vec<Vec<f64>>> = values.extract()?;
        let mats = mats.iter().map(|m| matrix(m)).collect::<PyResult<Vec<_>>>()?;
        Ok(PyPath { inner: SampledPath::from_matrices(times, &mats).map_err(err)? })
    }

    #[staticmethod]
    fn constant(m: Vec<Vec<f64>>, a: f64, b: f64) -> PyResult<Self> {
        Ok(PyPath { inner: SampledPath::constant_matrix(&matrix(&m)?, a, b).map_err(err)? })
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    /// Flat row-major values, one list per node.
    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.value(i).to_vec()).collect()
    }

    fn value_at(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.value_at(t).map_err(err)
    }

    /// Exact p-variation seminorm over `[a, b]` (whole span by default).
    #[pyo3(signature = (p, a=None, b=None))]
    fn p_variation(&self, p: f64, a: Option<f64>, b: Option<f64>) -> PyResult<f64> {
        let span = self.inner.span();
        path::p_variation_seminorm(&self.inner, p, window(a.unwrap_or(span.a), b.unwrap_or(span.b))?).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.inner.shape();
        format!("Path({} nodes on [{}, {}], {r}x{c})", self.inner.len(), self.inner.start(), self.inner.end())
    }
}

/// `dx = A(t) x dt + C(t) x dω(t)`.
#[pyclass(name = "Equation", module = "ylyap_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEquation {
    inner: LinearYDE,
}

#[pymethods]
impl PyEquation {
    #[new]
    #[pyo3(signature = (a, c, p=1.5, q=2.5))]
    fn new(a: &PyPath, c: &PyPath, p: f64, q: f64) -> PyResult<Self> {
        let params = YoungParams::new(p, q).map_err(err)?;
        Ok(PyEquation { inner: LinearYDE::new(a.inner.clone(), c.inner.clone(), params).map_err(err)? })
    }

    /// Constant coefficients on `[t0, t1]`.
    #[staticmethod]
    #[pyo3(signature = (a, c, t0, t1, p=1.5, q=2.5))]
    fn constant(a: Vec<Vec<f64>>, c: Vec<Vec<f64>>, t0: f64, t1: f64, p: f64, q: f64) -> PyResult<Self> {
        let params = YoungParams::new(p, q).map_err(err)?;
        let eq = LinearYDE::constant(&matrix(&a)?, &matrix(&c)?, window(t0, t1)?, params).map_err(err)?;
        Ok(PyEquation { inner: eq })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn span(&self) -> (f64, f64) {
        let s = self.inner.span();
        (s.a, s.b)
    }

    fn adjoint(&self) -> Self {
        PyEquation { inner: self.inner.adjoint() }
    }

    fn is_upper_triangular(&self) -> bool {
        self.inner.is_upper_triangular()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.span();
        format!("Equation(dim={}, span=[{}, {}])", self.inner.dim(), s.a, s.b)
    }
}

fn solve_options(mu: Option<f64>, tol: f64, max_iterations: usize) -> SolveOptions {
    SolveOptions { mu, tol, max_iterations }
}

fn parse_method(method: &str) -> PyResult<Method> {
    match method {
        "qr" => Ok(Method::Qr),
        "svd" => Ok(Method::Svd),
        other => Err(PyValueError::new_err(format!("method must be 'qr' or 'svd', got {other:?}"))),
    }
}

/// Fractional Brownian motion on `[0, horizon]` with step `dt`.
#[pyfunction]
#[pyo3(signature = (hurst, dt, horizon, seed, method="circulant"))]
fn fbm(hurst: f64, dt: f64, horizon: f64, seed: u64, method: &str) -> PyResult<PyPath> {
    let method = match method {
        "circulant" => FbmMethod::Circulant,
        "cholesky" => FbmMethod::Cholesky,
        other => return Err(PyValueError::new_err(format!("unknown fbm method {other:?}"))),
    };
    let spec = FbmSpec::new(hurst, dt, horizon, seed, method).map_err(err)?;
    Ok(PyPath { inner: stochastic::fbm_sample(&spec).map_err(err)? })
}

/// Left-point Young integral `∫_a^b x dω` (list of rows).
#[pyfunction]
fn young_integral(x: &PyPath, omega: &PyPath, a: f64, b: f64) -> PyResult<Vec<Vec<f64>>> {
    let w = window(a, b)?;
    let (x, om) = young::merge_grids(&x.inner, &omega.inner, w).map_err(err)?;
    Ok(rows(&young::young_integral(&x, &om, w).map_err(err)?))
}

/// Picard solve from `x0` at `a` over `[a, b]`.
#[pyfunction]
#[pyo3(signature = (eq, x0, omega, a, b, mu=None, tol=1e-12, max_iterations=200))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    eq: &PyEquation,
    x0: Vec<f64>,
    omega: &PyPath,
    a: f64,
    b: f64,
    mu: Option<f64>,
    tol: f64,
    max_iterations: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = solver::picard_solve(
        &eq.inner,
        &DVector::from_vec(x0),
        &omega.inner,
        window(a, b)?,
        &solve_options(mu, tol, max_iterations),
    )
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("solution", PyPath { inner: rep.solution.clone() })?;
    d.set_item("final_value", rep.final_value().iter().copied().collect::<Vec<_>>())?;
    d.set_item("greedy_times", rep.partition.taus.clone())?;
    d.set_item("iterations", rep.iterations.clone())?;
    d.set_item("sup_norm", rep.sup_norm)?;
    d.set_item("pvar_seminorm", rep.pvar_norm)?;
    d.set_item("growth_bound", rep.growth_bound)?;
    d.set_item("pvar_bound", rep.pvar_bound)?;
    d.set_item("bounds_hold", rep.bounds_hold())?;
    d.set_item("m_star", rep.m_star)?;
    d.set_item("mu", rep.mu)?;
    Ok(d)
}

/// Two-parameter flow `Φ(s, t)`; `s > t` gives the backward flow.
#[pyfunction]
#[pyo3(signature = (eq, omega, s, t, tol=1e-12))]
fn flow(eq: &PyEquation, omega: &PyPath, s: f64, t: f64, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    let opts = SolveOptions { tol, ..SolveOptions::default() };
    Ok(rows(&solver::flow_matrix(&eq.inner, &omega.inner, s, t, &opts).map_err(err)?))
}

/// `∫_s^t tr A du + ∫_s^t tr C dω`.
#[pyfunction]
fn liouville(eq: &PyEquation, omega: &PyPath, s: f64, t: f64) -> PyResult<f64> {
    solver::liouville_log_det(&eq.inner, &omega.inner, s, t).map_err(err)
}

/// Discrete-time Lyapunov spectrum over `[t0, t0 + horizon]`.
#[pyfunction]
#[pyo3(signature = (eq, omega, horizon, t0=0.0, h=1.0, method="qr", tail_fraction=0.2))]
#[allow(clippy::too_many_arguments)]
fn spectrum<'py>(
    py: Python<'py>,
    eq: &PyEquation,
    omega: &PyPath,
    horizon: f64,
    t0: f64,
    h: f64,
    method: &str,
    tail_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = SpectrumOptions { h, method: parse_method(method)?, tail_fraction, ..SpectrumOptions::default() };
    let (series, est) = lyapunov::discrete_spectrum(&eq.inner, &omega.inner, t0, horizon, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambdas", est.lambdas.clone())?;
    d.set_item("lambdas_max", est.lambdas_max.clone())?;
    d.set_item("dispersion", est.dispersion.clone())?;
    d.set_item("tail_window", est.tail_window)?;
    d.set_item("flag_basis", rows(&est.flag_basis))?;
    d.set_item("times", series.times.clone())?;
    d.set_item("series", series.lambdas.clone())?;
    d.set_item("logdet", series.logdet.clone())?;
    Ok(d)
}

/// Nonregularity coefficient and Perron defects.
#[pyfunction]
#[pyo3(signature = (eq, omega, horizon, t0=0.0, h=1.0, threshold=None))]
fn nonregularity<'py>(
    py: Python<'py>,
    eq: &PyEquation,
    omega: &PyPath,
    horizon: f64,
    t0: f64,
    h: f64,
    threshold: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = SpectrumOptions { h, ..SpectrumOptions::default() };
    let rep = lyapunov::nonregularity(&eq.inner, &omega.inner, t0, horizon, &opts, threshold).map_err(err)?;
    to_py(py, &rep)
}

/// `{ā_kk}` for an upper-triangular equation, sorted nonincreasing, with the exactness flag.
#[pyfunction]
#[pyo3(signature = (eq, horizon, tol=triangular::EXACTNESS_TOL))]
fn triangular_spectrum<'py>(py: Python<'py>, eq: &PyEquation, horizon: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let tri = TriangularYDE::new(eq.inner.clone()).map_err(err)?;
    let s = triangular::triangular_spectrum(&tri, horizon, tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("spectrum", s.spectrum.clone())?;
    d.set_item("exact", s.exact)?;
    d.set_item("oscillation", s.means.oscillation.clone())?;
    d.set_item("note", s.note.clone())?;
    Ok(d)
}

/// `(1/n) Σ_{k<n} |||ω|||^p` over unit windows.
#[pyfunction]
fn gamma_p(omega: &PyPath, p: f64, n: usize) -> PyResult<f64> {
    stochastic::gamma_p(&omega.inner, p, n).map_err(err)
}

/// Closed-form bound on every Lyapunov exponent given `Γ_p`.
#[pyfunction]
#[pyo3(signature = (eq, gamma, mu=None))]
fn exponent_bound(eq: &PyEquation, gamma: f64, mu: Option<f64>) -> PyResult<f64> {
    lyapunov::exponent_bound(&eq.inner, gamma, mu).map_err(err)
}

#[pymodule]
fn ylyap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("YlyapError", m.py().get_type::<YlyapError>())?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyEquation>()?;
    m.add_function(wrap_pyfunction!(fbm, m)?)?;
    m.add_function(wrap_pyfunction!(young_integral, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(flow, m)?)?;
    m.add_function(wrap_pyfunction!(liouville, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(nonregularity, m)?)?;
    m.add_function(wrap_pyfunction!(triangular_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_p, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_bound, m)?)?;
    Ok(())
}
