//! Python bindings: level sets, reconstructions and cubature rules.
//!
//! Callables receive one point as a tuple of floats and return a float.
//! They are evaluated on the calling thread, once per distinct sample point.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyTuple;

use sqi::analysis::{fit_rate, TestFunction};
use sqi::cubature::{assemble_weights, integrate_reconstruction, CubatureRule};
use sqi::dyadic::{DyadicPoint, SampleTable};
use sqi::grids::xi_for_budget;
use sqi::recovery::{build_from_table, required_points};
use sqi::{Error, SmoothnessSpec, SplineOrder};

fn value_error(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn order(r: u32) -> PyResult<SplineOrder> {
    SplineOrder::new(r).map_err(value_error)
}

fn sample(py: Python<'_>, f: &Bound<'_, PyAny>, points: Vec<DyadicPoint>) -> PyResult<SampleTable> {
    let mut table = SampleTable::new();
    for p in points {
        let x = PyTuple::new(py, p.to_f64())?;
        let v: f64 = f.call1((x,))?.extract()?;
        table.insert_if_absent(p, v);
    }
    Ok(table)
}

/// Smoothness class of the target function; selects the level-set rule.
#[pyclass(name = "Spec", frozen)]
struct PySpec {
    inner: SmoothnessSpec,
}

#[pymethods]
impl PySpec {
    #[new]
    #[pyo3(signature = (kind, p, theta, q, r, d=None, alpha=None, beta=None, a=None, gamma=None, tau=None, epsilon=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        p: f64,
        theta: f64,
        q: f64,
        r: u32,
        d: Option<usize>,
        alpha: Option<f64>,
        beta: Option<f64>,
        a: Option<Vec<f64>>,
        gamma: Option<f64>,
        tau: Option<f64>,
        epsilon: Option<f64>,
    ) -> PyResult<Self> {
        let r = order(r)?;
        let missing = |what: &str| PyValueError::new_err(format!("{kind} smoothness needs `{what}`"));
        let spec = match kind {
            "mixed" => SmoothnessSpec::mixed(p, theta, q, r, a.ok_or_else(|| missing("a"))?),
            "hybrid" => SmoothnessSpec::hybrid(
                p,
                theta,
                q,
                r,
                d.ok_or_else(|| missing("d"))?,
                alpha.ok_or_else(|| missing("alpha"))?,
                beta.ok_or_else(|| missing("beta"))?,
            ),
            other => return Err(PyValueError::new_err(format!("unknown kind `{other}`"))),
        };
        let mut spec = match gamma {
            Some(g) => spec.with_gamma(g, tau.unwrap_or(q)),
            None => spec,
        };
        if let Some(e) = epsilon {
            spec = spec.with_epsilon(e);
        }
        spec.validate().map_err(value_error)?;
        spec.level_rule().map_err(value_error)?;
        Ok(PySpec { inner: spec })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.r.get()
    }

    #[getter]
    fn class_(&self) -> String {
        self.inner.class().to_string()
    }

    /// Budget growth exponent: errors decay like `n^-nu`.
    fn nu(&self) -> f64 {
        self.inner.nu()
    }

    fn cubature_nu(&self) -> f64 {
        self.inner.cubature_nu()
    }

    fn level_set(&self, xi: f64) -> PyResult<PyLevelSet> {
        let rule = self.inner.level_rule().map_err(value_error)?;
        Ok(PyLevelSet {
            inner: rule.level_set(xi),
        })
    }

    /// Largest threshold whose level set fits in `n` samples.
    fn xi_for_budget(&self, n: u128) -> PyResult<f64> {
        let rule = self.inner.level_rule().map_err(value_error)?;
        xi_for_budget(n, &rule).map_err(value_error)
    }

    fn level_set_for_budget(&self, n: u128) -> PyResult<PyLevelSet> {
        let xi = self.xi_for_budget(n)?;
        self.level_set(xi)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "LevelSet", frozen)]
struct PyLevelSet {
    inner: sqi::LevelSet,
}

#[pymethods]
impl PyLevelSet {
    #[new]
    fn new(dim: usize, levels: Vec<Vec<u32>>) -> PyResult<Self> {
        let inner = sqi::LevelSet::from_levels(dim, levels).map_err(value_error)?;
        Ok(PyLevelSet { inner })
    }

    #[staticmethod]
    fn full_box(m: Vec<u32>) -> Self {
        PyLevelSet {
            inner: sqi::LevelSet::full_box(&m),
        }
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = sqi::LevelSet::from_text(text).map_err(value_error)?;
        Ok(PyLevelSet { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn levels(&self) -> Vec<Vec<u32>> {
        self.inner.levels().to_vec()
    }

    /// Declared budget `Σ_k Π_j (2^{k_j} + 1)`.
    fn budget(&self) -> u128 {
        self.inner.budget()
    }

    fn distinct_points(&self) -> u128 {
        self.inner.distinct_points()
    }

    /// Every point a reconstruction of order `r` samples.
    fn sample_points(&self, r: u32) -> PyResult<Vec<Vec<f64>>> {
        Ok(required_points(&self.inner, order(r)?)
            .iter()
            .map(DyadicPoint::to_f64)
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, k: Vec<u32>) -> bool {
        self.inner.contains(&k)
    }

    fn __repr__(&self) -> String {
        format!(
            "LevelSet(dim={}, levels={}, budget={})",
            self.inner.dim(),
            self.inner.len(),
            self.inner.budget()
        )
    }
}

#[pyclass(name = "Reconstruction", frozen)]
struct PyReconstruction {
    inner: sqi::Reconstruction,
}

#[pymethods]
impl PyReconstruction {
    /// Samples `f` on the grid of `level_set` and builds the reconstruction.
    #[staticmethod]
    fn build(py: Python<'_>, f: &Bound<'_, PyAny>, level_set: &PyLevelSet, r: u32) -> PyResult<Self> {
        let r = order(r)?;
        let delta = &level_set.inner;
        let table = sample(py, f, required_points(delta, r))?;
        let inner = py.detach(|| build_from_table(&table, delta, r)).map_err(value_error)?;
        Ok(PyReconstruction { inner })
    }

    /// Builds from precomputed values at `level_set.sample_points(r)`.
    #[staticmethod]
    fn from_samples(py: Python<'_>, level_set: &PyLevelSet, r: u32, values: Vec<f64>) -> PyResult<Self> {
        let r = order(r)?;
        let delta = &level_set.inner;
        let points = required_points(delta, r);
        if points.len() != values.len() {
            return Err(PyValueError::new_err(format!(
                "expected {} values, got {}",
                points.len(),
                values.len()
            )));
        }
        let table: SampleTable = points.into_iter().zip(values).collect();
        let inner = py.detach(|| build_from_table(&table, delta, r)).map_err(value_error)?;
        Ok(PyReconstruction { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = sqi::Reconstruction::from_json(text).map_err(value_error)?;
        Ok(PyReconstruction { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&x).map_err(value_error)
    }

    fn evaluate_batch(&self, py: Python<'_>, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        py.detach(|| self.inner.evaluate_batch(&points)).map_err(value_error)
    }

    /// `∫ R_Δ(f)` over the unit cube.
    fn integral(&self) -> f64 {
        integrate_reconstruction(&self.inner)
    }

    #[getter]
    fn sample_budget(&self) -> usize {
        self.inner.sample_budget
    }

    #[getter]
    fn declared_budget(&self) -> u128 {
        self.inner.declared_budget
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

#[pyclass(name = "CubatureRule", frozen)]
struct PyCubatureRule {
    inner: CubatureRule,
}

#[pymethods]
impl PyCubatureRule {
    #[new]
    fn new(py: Python<'_>, level_set: &PyLevelSet, r: u32) -> PyResult<Self> {
        let r = order(r)?;
        let delta = &level_set.inner;
        Ok(PyCubatureRule {
            inner: py.detach(|| assemble_weights(delta, r)),
        })
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.weights.keys().map(DyadicPoint::to_f64).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.values().copied().collect()
    }

    fn weight_sum(&self) -> f64 {
        self.inner.weight_sum()
    }

    /// `Σ w_j f(x_j)`.
    fn apply(&self, py: Python<'_>, f: &Bound<'_, PyAny>) -> PyResult<f64> {
        let table = sample(py, f, self.inner.weights.keys().cloned().collect())?;
        self.inner.apply_table(&table).map_err(value_error)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Slope and intercept of `log2 e = slope * log2 n + intercept`.
#[pyfunction]
fn rate(ns: Vec<f64>, errors: Vec<f64>) -> PyResult<(f64, f64)> {
    if ns.len() != errors.len() {
        return Err(PyValueError::new_err("ns and errors differ in length"));
    }
    let pts: Vec<(f64, f64)> = ns.into_iter().zip(errors).collect();
    let fit = fit_rate(&pts).map_err(value_error)?;
    Ok((fit.slope, fit.intercept))
}

/// Closed-form integral of a named test function: `sine`, `kink` or `lacunary`.
#[pyfunction]
#[pyo3(signature = (name, d, parameter=None))]
fn exact_integral(name: &str, d: usize, parameter: Option<f64>) -> PyResult<f64> {
    let f = match name {
        "sine" => TestFunction::sine_product(d),
        "kink" => TestFunction::kink(vec![parameter.unwrap_or(1.0); d]),
        "lacunary" => {
            let s = parameter.unwrap_or(1.5);
            if s.is_nan() || s <= 0.0 {
                return Err(PyValueError::new_err("lacunary exponent must be positive"));
            }
            TestFunction::lacunary(d, s)
        }
        other => return Err(PyRuntimeError::new_err(format!("no closed form for `{other}`"))),
    };
    Ok(f.exact_integral)
}

#[pymodule]
fn sparse_qi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyLevelSet>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_class::<PyCubatureRule>()?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_integral, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
