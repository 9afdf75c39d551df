use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use hsharp::morrey::{self, BallGrid, MorreySpaceSpec};
use hsharp::{constants, hgroup, operators, Error, McSpec, OperatorKind, QuadratureSpec};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Domain(_) | Error::Divergence(_) | Error::Validation(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serialises through JSON so records come out as plain dicts and lists.
fn to_object<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| to_py(e.into()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn kind(s: &str) -> PyResult<OperatorKind> {
    s.parse().map_err(to_py)
}

fn mc_spec(samples: Option<usize>, seed: Option<u64>) -> McSpec {
    let d = McSpec::default();
    McSpec { samples: samples.unwrap_or(d.samples), seed: seed.unwrap_or(d.seed), ..d }
}

#[pyclass(name = "ParamSet", module = "hsharp_py", from_py_object)]
#[derive(Clone)]
struct PyParamSet {
    inner: hsharp::ParamSet,
}

#[pymethods]
impl PyParamSet {
    /// `lambda_list` defaults to the sharp choice `λ_j = qλ/q_j`.
    #[new]
    #[pyo3(signature = (n, q_list, lam, gamma_list, alpha=0.0, lambda_list=None, q=None))]
    fn new(
        n: usize,
        q_list: Vec<f64>,
        lam: f64,
        gamma_list: Vec<f64>,
        alpha: f64,
        lambda_list: Option<Vec<f64>>,
        q: Option<f64>,
    ) -> Self {
        let mut inner = hsharp::ParamSet::sharp(n, q_list, lam, gamma_list, alpha);
        if let Some(l) = lambda_list {
            inner.lambda_list = l;
        }
        if let Some(q) = q {
            inner.q = q;
        }
        Self { inner }
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }
    #[getter]
    fn q_list(&self) -> Vec<f64> {
        self.inner.q_list.clone()
    }
    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn lambda_list(&self) -> Vec<f64> {
        self.inner.lambda_list.clone()
    }
    #[getter]
    fn gamma_list(&self) -> Vec<f64> {
        self.inner.gamma_list.clone()
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn exponents(&self) -> PyExponentSet {
        PyExponentSet { inner: self.inner.derive_exponents() }
    }

    /// Human-readable descriptions of every failed condition.
    #[pyo3(signature = (strict=true))]
    fn violations(&self, strict: bool) -> Vec<String> {
        self.inner.violations(strict).iter().map(|v| v.to_string()).collect()
    }

    #[pyo3(signature = (strict=true))]
    fn validate(&self, strict: bool) -> PyResult<()> {
        self.inner.validate(strict).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| to_py(e.into()))
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(s).map_err(|e| to_py(e.into()))? })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "ExponentSet", module = "hsharp_py", from_py_object)]
#[derive(Clone)]
struct PyExponentSet {
    inner: hsharp::ExponentSet,
}

#[pymethods]
impl PyExponentSet {
    #[new]
    fn new(q_dim: usize, sigma_list: Vec<f64>) -> Self {
        Self { inner: hsharp::ExponentSet::from_sigmas(q_dim, sigma_list) }
    }

    #[getter]
    fn q_dim(&self) -> usize {
        self.inner.q_dim
    }
    #[getter]
    fn sigma_list(&self) -> Vec<f64> {
        self.inner.sigma_list.clone()
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    fn is_admissible(&self) -> bool {
        self.inner.is_admissible()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "GroupParams", module = "hsharp_py", from_py_object)]
#[derive(Clone)]
struct PyGroupParams {
    inner: hsharp::GroupParams,
}

#[pymethods]
impl PyGroupParams {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self { inner: hsharp::ball_volume_constant(n).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn q_dim(&self) -> usize {
        self.inner.q_dim
    }
    #[getter]
    fn ball_volume(&self) -> f64 {
        self.inner.ball_volume
    }
    #[getter]
    fn sphere_constant(&self) -> f64 {
        self.inner.sphere_constant
    }

    fn ball_measure(&self, r: f64) -> f64 {
        self.inner.ball_measure(r)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "RadialProfile", module = "hsharp_py", from_py_object)]
#[derive(Clone)]
struct PyRadialProfile {
    inner: hsharp::RadialProfile,
}

#[pymethods]
impl PyRadialProfile {
    #[staticmethod]
    fn power(exponent: f64) -> Self {
        Self { inner: hsharp::RadialProfile::power(exponent) }
    }

    #[staticmethod]
    fn truncated_power(exponent: f64, r_min: f64, r_max: f64) -> PyResult<Self> {
        Ok(Self { inner: hsharp::RadialProfile::truncated_power(exponent, r_min, r_max).map_err(to_py)? })
    }

    /// Log-log interpolation between `knots`, extended as powers outside.
    #[staticmethod]
    fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let t = hsharp::profile::Tabulated::new(knots, values).map_err(to_py)?;
        Ok(Self { inner: hsharp::RadialProfile::Tabulated(t) })
    }

    fn __call__(&self, r: f64) -> f64 {
        self.inner.eval(r)
    }

    fn dilated(&self, t: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.dilated(t).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            hsharp::RadialProfile::Tabulated(t) => format!("RadialProfile.tabulated({} knots)", t.knots().len()),
            other => format!("{other:?}"),
        }
    }
}

#[pyclass(name = "MorreySpace", module = "hsharp_py", from_py_object)]
#[derive(Clone)]
struct PyMorreySpace {
    inner: MorreySpaceSpec,
}

#[pymethods]
impl PyMorreySpace {
    #[new]
    #[pyo3(signature = (q, lam, alpha=0.0, gamma_w=0.0))]
    fn new(q: f64, lam: f64, alpha: f64, gamma_w: f64) -> Self {
        Self { inner: MorreySpaceSpec { q, lambda: lam, alpha, gamma_w } }
    }

    #[staticmethod]
    fn target(p: &PyParamSet) -> Self {
        Self { inner: MorreySpaceSpec::target(&p.inner) }
    }

    #[staticmethod]
    fn source(p: &PyParamSet, j: usize) -> PyResult<Self> {
        if j >= p.inner.m {
            return Err(PyValueError::new_err(format!("factor index {j} out of range for m = {}", p.inner.m)));
        }
        Ok(Self { inner: MorreySpaceSpec::source(&p.inner, j) })
    }

    fn dilation_exponent(&self, group: &PyGroupParams) -> f64 {
        self.inner.dilation_exponent(&group.inner)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyfunction]
fn hnorm(n: usize, coords: Vec<f64>) -> PyResult<f64> {
    Ok(hgroup::hnorm(&hsharp::HPoint::new(n, coords).map_err(to_py)?))
}

#[pyfunction]
fn group_mul(n: usize, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    let x = hsharp::HPoint::new(n, x).map_err(to_py)?;
    let y = hsharp::HPoint::new(n, y).map_err(to_py)?;
    Ok(hgroup::group_mul(&x, &y).map_err(to_py)?.coords().to_vec())
}

#[pyfunction]
#[pyo3(signature = (n, samples=10_000, seed=0))]
fn group_axioms(py: Python<'_>, n: usize, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let reports = py.detach(|| hgroup::axiom_reports(n, samples, seed)).map_err(to_py)?;
    to_object(py, &reports)
}

#[pyfunction]
fn closed_form(kind: &str, exponents: &PyExponentSet, group: &PyGroupParams) -> PyResult<f64> {
    Ok(constants::closed_form(self::kind(kind)?, &exponents.inner, &group.inner).map_err(to_py)?.value)
}

#[pyfunction]
#[pyo3(signature = (kind, exponents, group, rel_target=1e-12))]
fn oracle(kind: &str, exponents: &PyExponentSet, group: &PyGroupParams, rel_target: f64) -> PyResult<f64> {
    let spec = QuadratureSpec::default().with_rel_target(rel_target);
    constants::oracle(self::kind(kind)?, &exponents.inner, &group.inner, &spec).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (kind, exponents, group, tolerance=1e-8))]
fn reconcile(py: Python<'_>, kind: &str, exponents: &PyExponentSet, group: &PyGroupParams, tolerance: f64) -> PyResult<Py<PyAny>> {
    let r = constants::reconcile(self::kind(kind)?, &exponents.inner, &group.inner, &QuadratureSpec::default(), tolerance)
        .map_err(to_py)?;
    to_object(py, &r)
}

/// Value of the operator at radius `x_radius` for radial inputs.
#[pyfunction]
fn apply(py: Python<'_>, kind: &str, profiles: Vec<PyRadialProfile>, x_radius: f64, group: &PyGroupParams) -> PyResult<f64> {
    let kind = self::kind(kind)?;
    let profiles: Vec<_> = profiles.into_iter().map(|p| p.inner).collect();
    let gp = group.inner;
    py.detach(|| operators::apply(kind, &profiles, x_radius, &gp, &QuadratureSpec::default())).map_err(to_py)
}

#[pyfunction]
fn extremizer(exponents: &PyExponentSet, j: usize, r_min: f64, r_max: f64) -> PyResult<PyRadialProfile> {
    if j == 0 || j > exponents.inner.m() {
        return Err(PyValueError::new_err(format!("factor index {j} must be in 1..={}", exponents.inner.m())));
    }
    Ok(PyRadialProfile { inner: operators::extremizer_profile(&exponents.inner, j, Some((r_min, r_max))).map_err(to_py)? })
}

#[pyfunction]
#[pyo3(signature = (profile, space, group, samples=None, seed=None))]
fn morrey_norm(
    py: Python<'_>,
    profile: &PyRadialProfile,
    space: &PyMorreySpace,
    group: &PyGroupParams,
    samples: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let gp = group.inner;
    let grid = BallGrid::default_for(gp.n).map_err(to_py)?;
    let mc = mc_spec(samples, seed);
    let est = py.detach(|| morrey::morrey_norm(&profile.inner, &space.inner, &grid, &gp, &mc)).map_err(to_py)?;
    to_object(py, &est)
}

#[pyfunction]
#[pyo3(signature = (kind, params, r_min, r_max, samples=None, seed=None))]
fn sharpness_ratio(
    py: Python<'_>,
    kind: &str,
    params: &PyParamSet,
    r_min: f64,
    r_max: f64,
    samples: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let kind = self::kind(kind)?;
    let gp = hsharp::ball_volume_constant(params.inner.n).map_err(to_py)?;
    let grid = BallGrid::default_for(gp.n).map_err(to_py)?;
    let mc = mc_spec(samples, seed);
    let p = &params.inner;
    let out = py
        .detach(|| morrey::sharpness_ratio(kind, p, (r_min, r_max), &grid, &gp, &QuadratureSpec::default(), &mc))
        .map_err(to_py)?;
    to_object(py, &out)
}

#[pymodule]
fn hsharp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParamSet>()?;
    m.add_class::<PyExponentSet>()?;
    m.add_class::<PyGroupParams>()?;
    m.add_class::<PyRadialProfile>()?;
    m.add_class::<PyMorreySpace>()?;
    m.add_function(wrap_pyfunction!(hnorm, m)?)?;
    m.add_function(wrap_pyfunction!(group_mul, m)?)?;
    m.add_function(wrap_pyfunction!(group_axioms, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(reconcile, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(extremizer, m)?)?;
    m.add_function(wrap_pyfunction!(morrey_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness_ratio, m)?)?;
    Ok(())
}
