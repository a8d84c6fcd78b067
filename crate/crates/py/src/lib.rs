//! Python bindings: distributions, asymptotic analysis, LP bounds, the codec
//! and the simulation sweep.

use fountain_lab::asymptotics::{self, DEFAULT_GRID_STEP, DEFAULT_REFINE_TOL};
use fountain_lab::degree_dist;
use fountain_lab::lp_bounds::{self, DEFAULT_BOUND_GRID_STEP};
use fountain_lab::lt_codec::{self, CodedSymbol};
use fountain_lab::sim_harness::{self, ReceiveModel, SimulationConfig};
use fountain_lab::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py(e: Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Probability mass function over output symbol degrees.
#[pyclass(name = "DegreeDistribution", module = "fountain_lab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: degree_dist::DegreeDistribution,
}

impl From<degree_dist::DegreeDistribution> for PyDistribution {
    fn from(inner: degree_dist::DegreeDistribution) -> Self {
        PyDistribution { inner }
    }
}

#[pymethods]
impl PyDistribution {
    #[new]
    #[pyo3(signature = (entries, label = "custom"))]
    fn new(entries: Vec<(u32, f64)>, label: &str) -> PyResult<Self> {
        degree_dist::DegreeDistribution::new(label, entries).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn point_mass(degree: u32) -> PyResult<Self> {
        degree_dist::DegreeDistribution::point_mass(degree).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn ideal_soliton(k: u32) -> PyResult<Self> {
        degree_dist::ideal_soliton(k).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn limiting_soliton(max_degree: u32) -> PyResult<Self> {
        degree_dist::limiting_soliton(max_degree).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn robust_soliton(k: u32, c: f64, fail_prob: f64) -> PyResult<Self> {
        degree_dist::robust_soliton(k, c, fail_prob).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn raptor_omega(eps: f64) -> PyResult<Self> {
        degree_dist::raptor_omega(eps).map(Into::into).map_err(to_py)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        degree_dist::DegreeDistribution::from_text(text).map(Into::into).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn perturb(&self, delta: f64) -> PyResult<Self> {
        degree_dist::perturb(&self.inner, delta).map(Into::into).map_err(to_py)
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn entries(&self) -> Vec<(u32, f64)> {
        self.inner.entries().to_vec()
    }

    #[getter]
    fn max_degree(&self) -> u32 {
        self.inner.max_degree()
    }

    #[getter]
    fn mean_degree(&self) -> f64 {
        self.inner.mean_degree()
    }

    fn mass(&self, degree: u32) -> f64 {
        self.inner.mass(degree)
    }

    fn pgf(&self, t: f64) -> PyResult<f64> {
        self.inner.pgf_eval(t).map_err(to_py)
    }

    fn pgf_derivative(&self, t: f64) -> PyResult<f64> {
        self.inner.pgf_derivative(t).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }

    fn __repr__(&self) -> String {
        format!("DegreeDistribution({:?}, {} degrees)", self.inner.label(), self.inner.entries().len())
    }
}

/// Asymptotic recovered fraction at normalized receive count `r`.
#[pyfunction]
#[pyo3(signature = (r, p, grid_step = DEFAULT_GRID_STEP, refine_tol = DEFAULT_REFINE_TOL))]
fn s_of_r(r: f64, p: &PyDistribution, grid_step: f64, refine_tol: f64) -> PyResult<f64> {
    asymptotics::s_of_r(r, &p.inner, grid_step, refine_tol).map_err(to_py)
}

/// Smallest normalized receive count recovering fraction `z`.
#[pyfunction]
#[pyo3(signature = (z, p, grid_step = DEFAULT_GRID_STEP))]
fn r_of_z(z: f64, p: &PyDistribution, grid_step: f64) -> PyResult<f64> {
    asymptotics::r_of_z(z, &p.inner, grid_step).map_err(to_py)
}

#[pyfunction]
fn decoding_margin(r: f64, p: &PyDistribution, t: f64) -> f64 {
    asymptotics::decoding_margin(r, &p.inner, t)
}

/// `(distribution, r)` for `z <= 2/3`.
#[pyfunction]
fn optimal_distribution(z: f64) -> PyResult<(PyDistribution, f64)> {
    let d = degree_dist::optimal_distribution(z).map_err(to_py)?;
    Ok((d.distribution.into(), d.r))
}

/// `(distribution, a, m)` for `2/3 < z < 1`.
#[pyfunction]
fn truncated_soliton(z: f64) -> PyResult<(PyDistribution, f64, u32)> {
    let d = degree_dist::truncated_soliton(z).map_err(to_py)?;
    Ok((d.distribution.into(), d.a, d.m))
}

#[pyfunction]
#[pyo3(signature = (z, grid_step = DEFAULT_BOUND_GRID_STEP))]
fn dual_outer_bound(py: Python<'_>, z: f64, grid_step: f64) -> PyResult<f64> {
    py.detach(|| lp_bounds::dual_outer_bound(z, grid_step)).map_err(to_py)
}

/// `(distribution, r)` from the discretized primal.
#[pyfunction]
#[pyo3(signature = (z, grid_step = DEFAULT_BOUND_GRID_STEP))]
fn primal_min_r(py: Python<'_>, z: f64, grid_step: f64) -> PyResult<(PyDistribution, f64)> {
    let b = py.detach(|| lp_bounds::primal_min_r(z, grid_step)).map_err(to_py)?;
    Ok((b.distribution.into(), b.r))
}

/// Encoded symbols as `(neighbors, payload)` pairs.
#[pyfunction]
fn encode<'py>(
    py: Python<'py>,
    inputs: Vec<Vec<u8>>,
    p: &PyDistribution,
    n: usize,
    seed: u64,
) -> PyResult<Vec<(Vec<u32>, Bound<'py, PyBytes>)>> {
    let symbols = lt_codec::encode(&inputs, &p.inner, n, seed).map_err(to_py)?;
    Ok(symbols
        .into_iter()
        .map(|s| (s.neighbors, PyBytes::new(py, &s.payload)))
        .collect())
}

/// Peels `(neighbors, payload)` pairs; returns per-input values (None if
/// unrecovered) and the recovered count.
#[pyfunction]
fn decode<'py>(
    py: Python<'py>,
    symbols: Vec<(Vec<u32>, Vec<u8>)>,
    k: usize,
) -> PyResult<(Vec<Option<Bound<'py, PyBytes>>>, usize)> {
    let symbols = symbols
        .into_iter()
        .map(|(neighbors, payload)| CodedSymbol::new(neighbors, payload))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let out = lt_codec::decode(&symbols, k).map_err(to_py)?;
    let values = out.values.into_iter().map(|v| v.map(|v| PyBytes::new(py, &v))).collect();
    Ok((values, out.decoded_count))
}

/// Monte Carlo sweep; returns the CSV text with `#` metadata lines.
#[pyfunction]
#[pyo3(signature = (p, k, r_values, trials = 100, seed = 0, poisson = false))]
fn simulate(
    py: Python<'_>,
    p: &PyDistribution,
    k: usize,
    r_values: Vec<f64>,
    trials: usize,
    seed: u64,
    poisson: bool,
) -> PyResult<String> {
    let mut config = SimulationConfig::new(p.inner.clone(), k, r_values);
    config.trials = trials;
    config.base_seed = seed;
    if poisson {
        config.receive_model = ReceiveModel::PoissonN;
    }
    py.detach(|| sim_harness::sweep(&config)).map(|r| r.to_csv()).map_err(to_py)
}

#[pymodule]
pub fn fountain_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(s_of_r, m)?)?;
    m.add_function(wrap_pyfunction!(r_of_z, m)?)?;
    m.add_function(wrap_pyfunction!(decoding_margin, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_soliton, m)?)?;
    m.add_function(wrap_pyfunction!(dual_outer_bound, m)?)?;
    m.add_function(wrap_pyfunction!(primal_min_r, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
