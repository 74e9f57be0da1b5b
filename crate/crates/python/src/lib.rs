//! Python bindings for `occupancy-core`.
//!
//! Distributions and metric models are classes; the rest are plain
//! functions. Reports come back as dicts built from their JSON form.

use occupancy_core as core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn value_error(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A discrete law on the positive integers.
#[pyclass(name = "Distribution", module = "occupancy", frozen)]
pub struct PyDistribution {
    inner: core::Distribution,
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn dirac() -> Self {
        Self { inner: core::Distribution::dirac() }
    }

    #[staticmethod]
    fn uniform(m: u64) -> PyResult<Self> {
        Ok(Self { inner: core::Distribution::uniform(m).map_err(value_error)? })
    }

    #[staticmethod]
    fn explicit(masses: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: core::Distribution::explicit(&masses).map_err(value_error)? })
    }

    #[staticmethod]
    fn zipf(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: core::Distribution::zipf(alpha).map_err(value_error)? })
    }

    #[staticmethod]
    fn geometric(q: f64) -> PyResult<Self> {
        Ok(Self { inner: core::Distribution::geometric(q).map_err(value_error)? })
    }

    /// Build from a config-style JSON object, e.g. `{"family": "zipf", "alpha": 0.5}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: core::DistributionSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: core::Distribution::from_spec(&spec).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.spec()).expect("specs serialize")
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn p_star(&self) -> f64 {
        self.inner.p_star()
    }

    /// Mass of the `k`-th most likely letter (1-based).
    fn mass(&self, k: u64) -> f64 {
        self.inner.mass(k)
    }

    /// Counting function `ν(ε) = #{a : p_a >= ε}`.
    fn nu(&self, eps: f64) -> PyResult<f64> {
        self.inner.nu(eps).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("Distribution({})", self.inner.label())
    }
}

#[pyfunction]
fn exact_em(d: &PyDistribution, n: u64, r: u64) -> PyResult<f64> {
    core::exact_em(&d.inner, n, r).map_err(value_error)
}

#[pyfunction]
fn exact_ek(d: &PyDistribution, n: u64, r: u64) -> PyResult<f64> {
    core::exact_ek(&d.inner, n, r).map_err(value_error)
}

/// Every bound next to `E M_{n,r}`, as a dict.
#[pyfunction]
fn bound_suite<'py>(py: Python<'py>, d: &PyDistribution, n: u64, r: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep = py.detach(|| core::bounds::bound_suite(&d.inner, n, r)).map_err(value_error)?;
    to_py(py, &rep)
}

/// `(value, optimizer_eps)` of the breakpoint-optimized upper bound.
#[pyfunction]
#[pyo3(signature = (d, n, r, b = 2.0))]
fn upper_tg(d: &PyDistribution, n: u64, r: u64, b: f64) -> PyResult<(f64, Option<f64>)> {
    let res = core::bounds::upper_tg(&d.inner, n, r, b).map_err(value_error)?;
    Ok((res.value, res.optimizer_eps))
}

/// Turing's estimate of `M_{n,r}` from a list of tokens.
#[pyfunction]
fn turing(tokens: Vec<String>, r: u64) -> PyResult<f64> {
    core::estimate::turing(&core::estimate::SampleSummary::from_tokens(tokens), r).map_err(value_error)
}

fn interval_kind(kind: &str) -> PyResult<core::estimate::IntervalKind> {
    use core::estimate::IntervalKind::*;
    match kind {
        "mo03" => Ok(Mo03),
        "bbo15" => Ok(Bbo15),
        "cbmm1" => Ok(Cbmm1),
        "cbmm3" => Ok(Cbmm3),
        other => Err(PyValueError::new_err(format!("unknown interval kind {other:?}"))),
    }
}

#[pyfunction]
fn concentration_interval<'py>(py: Python<'py>, kind: &str, d: &PyDistribution, n: u64, r: u64, t: f64) -> PyResult<Bound<'py, PyAny>> {
    let iv = core::estimate::concentration_interval(interval_kind(kind)?, &d.inner, n, r, t).map_err(value_error)?;
    to_py(py, &iv)
}

#[pyfunction]
#[pyo3(signature = (d, n, r_set, replicates, seed = 0))]
fn monte_carlo<'py>(py: Python<'py>, d: &PyDistribution, n: u64, r_set: Vec<u64>, replicates: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let res = py
        .detach(|| core::simulate::monte_carlo(&d.inner, n, &r_set, replicates, core::simulate::SeedSpec::new(seed)))
        .map_err(value_error)?;
    to_py(py, &res)
}

#[pyfunction]
#[pyo3(signature = (kind, d, n, t, replicates, seed = 0))]
fn coverage_experiment<'py>(py: Python<'py>, kind: &str, d: &PyDistribution, n: u64, t: f64, replicates: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let kind = interval_kind(kind)?;
    let res = py
        .detach(|| core::simulate::coverage_experiment(&d.inner, n, t, replicates, core::simulate::SeedSpec::new(seed), kind))
        .map_err(value_error)?;
    to_py(py, &res)
}

#[pyfunction]
fn exact_em_poisson(d: &PyDistribution, lam: f64, r: u64) -> PyResult<f64> {
    core::poisson::exact_em_poisson(&d.inner, lam, r).map_err(value_error)
}

#[pyfunction]
fn poisson_suite<'py>(py: Python<'py>, d: &PyDistribution, lam: f64, r: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep = core::poisson::poisson_suite(&d.inner, lam, r).map_err(value_error)?;
    to_py(py, &rep)
}

/// A law on a segment or a finite point set, with open balls.
#[pyclass(name = "MetricModel", module = "occupancy", frozen)]
pub struct PyMetricModel {
    inner: core::metric::MetricModel,
}

#[pymethods]
impl PyMetricModel {
    #[staticmethod]
    fn uniform_segment(a: f64, b: f64) -> PyResult<Self> {
        Ok(Self { inner: core::metric::MetricModel::uniform_segment(a, b).map_err(value_error)? })
    }

    #[staticmethod]
    fn points(coords: Vec<f64>, masses: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: core::metric::MetricModel::points(&coords, &masses).map_err(value_error)? })
    }

    /// Build from a config-style JSON object, e.g. `{"space": "segment", "a": 0, "b": 1, "law": "uniform"}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: core::metric::MetricSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: core::metric::MetricModel::from_spec(&spec).map_err(value_error)? })
    }

    fn ball_mass(&self, x: f64, delta: f64) -> f64 {
        self.inner.ball_mass(x, delta)
    }

    #[pyo3(signature = (n, delta, r, lam = None))]
    fn exact_em_delta(&self, n: u64, delta: f64, r: u64, lam: Option<f64>) -> PyResult<f64> {
        core::metric::exact_em_delta(&self.inner, n, delta, r, lam).map_err(value_error)
    }

    fn nu_delta(&self, delta: f64, eps: f64) -> PyResult<f64> {
        core::metric::nu_delta(&self.inner, delta, eps).map_err(value_error)
    }

    /// Covering bound over a default grid plus `(x, t, rho)` candidates.
    #[pyo3(signature = (n, delta, candidates = Vec::new()))]
    fn bkgen_upper(&self, n: u64, delta: f64, candidates: Vec<(f64, f64, f64)>) -> PyResult<f64> {
        let cands: Vec<_> = candidates.into_iter().map(|(x, t, rho)| core::metric::BkCandidate { x, t, rho }).collect();
        Ok(core::metric::bkgen_upper(&self.inner, n, delta, &cands).map_err(value_error)?.value)
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }
}

#[pymodule]
mod occupancy {
    #[pymodule_export]
    use super::{
        bound_suite, concentration_interval, coverage_experiment, exact_ek, exact_em, exact_em_poisson, monte_carlo, poisson_suite,
        turing, upper_tg, PyDistribution, PyMetricModel,
    };
}
