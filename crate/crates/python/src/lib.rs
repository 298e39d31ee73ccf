//! Python bindings: domains, method parameters, assembly, basis removal,
//! eigenvalue extremes and the experiment drivers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use cutiga::assembly::{assemble, basis_energy_norms, evaluate_solution};
use cutiga::harness::{self, FixedMethodConfig, Geometry, ManufacturedProblem};
use cutiga::linalg::{self, sym_eigen_extremes, RemovalReport};
use cutiga::{ElementKind, Error, ImmersedDomain, MethodParams, Point, TensorSplineSpace, Variant};

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Geometry(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn lin_err(e: linalg::LinalgError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_variant(name: &str) -> PyResult<Variant> {
    match name {
        "ls" => Ok(Variant::LsStabilized),
        "std" => Ok(Variant::StandardNitsche),
        other => Err(PyValueError::new_err(format!("unknown variant {other:?}, expected \"ls\" or \"std\""))),
    }
}

/// Converts any serializable value into plain Python objects.
fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

/// serde_json maps non-finite floats to null; keep them as floats instead.
fn record_dict<'py>(py: Python<'py>, r: &harness::RunRecord) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(r).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let d = to_py(py, &value)?;
    for (key, field) in [
        ("kappa", r.kappa),
        ("kappa_br", r.kappa_br),
        ("lambda_min", r.lambda_min),
        ("lambda_min_br", r.lambda_min_br),
    ] {
        if let Some(x) = field {
            d.set_item(key, x)?;
        }
    }
    Ok(d)
}

fn study_dict<'py>(py: Python<'py>, s: &harness::StudyResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("study", &s.study)?;
    d.set_item("variant", &s.variant)?;
    d.set_item("tau", s.tau)?;
    d.set_item("beta", s.beta)?;
    d.set_item("c", s.c)?;
    let records = PyList::empty(py);
    for r in &s.records {
        records.append(record_dict(py, r)?)?;
    }
    let summary = PyList::empty(py);
    for r in &s.summary {
        summary.append(record_dict(py, r)?)?;
    }
    d.set_item("records", records)?;
    d.set_item("summary", summary)?;
    let rates = serde_json::to_value(&s.rates).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    d.set_item("rates", to_py(py, &rates)?)?;
    Ok(d)
}

/// A polygonal domain immersed in a background grid.
#[pyclass(name = "Domain", frozen)]
struct PyDomain {
    geometry: Geometry,
    inner: ImmersedDomain,
}

#[pymethods]
impl PyDomain {
    /// Unit square on an `n x n` grid whose last row and column stick out by `delta_cut h`.
    #[staticmethod]
    #[pyo3(signature = (n, delta_cut = 0.0))]
    fn square(n: usize, delta_cut: f64) -> PyResult<Self> {
        let geometry = Geometry::Square { n, delta_cut };
        Ok(Self {
            inner: geometry.build().map_err(err)?,
            geometry,
        })
    }

    /// Unit circle as a regular polygon, grid shifted by `(t h, t h / 3)`.
    #[staticmethod]
    #[pyo3(signature = (h, t = 0.0, segments = harness::CIRCLE_SEGMENTS))]
    fn circle(h: f64, t: f64, segments: usize) -> PyResult<Self> {
        let geometry = Geometry::Circle { h, t, segments };
        Ok(Self {
            inner: geometry.build().map_err(err)?,
            geometry,
        })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.grid().h
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.inner.grid().n_elements()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.boundary().area()
    }

    #[getter]
    fn perimeter(&self) -> f64 {
        self.inner.boundary().perimeter()
    }

    /// Element counts by kind: `{"interior": .., "cut": .., "outside": ..}`.
    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("interior", self.inner.count(ElementKind::Interior))?;
        d.set_item("cut", self.inner.count(ElementKind::Cut))?;
        d.set_item("outside", self.inner.count(ElementKind::Outside))?;
        Ok(d)
    }

    /// Area of `Ω` inside each element.
    fn element_areas(&self) -> Vec<f64> {
        (0..self.inner.grid().n_elements()).map(|e| self.inner.element_area(e)).collect()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.inner.boundary().contains(&Point::new(x, y))
    }

    fn __repr__(&self) -> String {
        format!("Domain({:?})", self.geometry)
    }
}

/// Method parameters. `variant` is `"ls"` or `"std"`.
#[pyclass(name = "Params", frozen)]
struct PyParams {
    inner: MethodParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (tau = 0.1, variant = "ls", beta = MethodParams::DEFAULT_BETA, c = MethodParams::DEFAULT_REMOVAL_C, p = 2))]
    fn new(tau: f64, variant: &str, beta: f64, c: f64, p: usize) -> PyResult<Self> {
        let mut inner = MethodParams::new(1.0, tau, parse_variant(variant)?);
        inner.beta = beta;
        inner.removal_c = c;
        inner.p = p;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.removal_c
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant.tag()
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(tau={}, variant={:?}, beta={}, c={}, p={})",
            self.inner.tau,
            self.inner.variant.tag(),
            self.inner.beta,
            self.inner.removal_c,
            self.inner.p
        )
    }
}

impl PyParams {
    fn on(&self, dom: &ImmersedDomain) -> MethodParams {
        MethodParams {
            delta: dom.grid().h,
            ..self.inner
        }
    }
}

fn space_for(domain: &PyDomain, params: &MethodParams) -> PyResult<TensorSplineSpace> {
    TensorSplineSpace::new(&domain.inner, params.p).map_err(err)
}

fn removal_for(domain: &PyDomain, space: &TensorSplineSpace, params: &MethodParams, removal: bool) -> PyResult<RemovalReport> {
    if !removal {
        return Ok(RemovalReport::none(space.n_dofs()));
    }
    let ls = MethodParams {
        variant: Variant::LsStabilized,
        ..*params
    };
    let norms = basis_energy_norms(space, &domain.inner, &ls).map_err(err)?;
    Ok(linalg::basis_removal(&norms, params.removal_c, domain.inner.grid().h, params.p))
}

/// Solves the manufactured problem. Returns error norms, sizes and coefficients.
#[pyfunction]
#[pyo3(signature = (domain, params, removal = true))]
fn solve<'py>(py: Python<'py>, domain: &PyDomain, params: &PyParams, removal: bool) -> PyResult<Bound<'py, PyDict>> {
    let sol = py
        .detach(|| harness::solve_problem(&domain.geometry, &params.inner, removal, &ManufacturedProblem))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("l2_error", sol.errors.l2)?;
    d.set_item("h1_error", sol.errors.h1_semi)?;
    d.set_item("energy_error", sol.errors.energy)?;
    d.set_item("n_dofs", sol.space.n_dofs())?;
    d.set_item("n_removed", sol.removal.removed.len())?;
    d.set_item("coeffs", sol.coeffs.clone())?;
    Ok(d)
}

/// Evaluates the discrete solution of the manufactured problem at points.
#[pyfunction]
#[pyo3(signature = (domain, params, xs, ys, removal = true))]
fn evaluate(domain: &PyDomain, params: &PyParams, xs: Vec<f64>, ys: Vec<f64>, removal: bool) -> PyResult<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err("xs and ys differ in length"));
    }
    let sol = harness::solve_problem(&domain.geometry, &params.inner, removal, &ManufacturedProblem).map_err(err)?;
    Ok(xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| evaluate_solution(&sol.space, &sol.coeffs, &Point::new(x, y)).0)
        .collect())
}

/// `(rows, cols, values, rhs)`.
type Coo = (Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>);

/// Assembles the manufactured problem in COO form.
#[pyfunction]
fn assemble_system(domain: &PyDomain, params: &PyParams) -> PyResult<Coo> {
    let p = params.on(&domain.inner);
    let space = space_for(domain, &p)?;
    let sys = assemble(&space, &domain.inner, &p, &ManufacturedProblem).map_err(err)?;
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..sys.a.nrows() {
        let (c, v) = sys.a.row(i);
        rows.extend(std::iter::repeat_n(i, c.len()));
        cols.extend_from_slice(c);
        vals.extend_from_slice(v);
    }
    Ok((rows, cols, vals, sys.b.clone()))
}

/// Energy norm of every active basis function.
#[pyfunction]
fn energy_norms(domain: &PyDomain, params: &PyParams) -> PyResult<Vec<f64>> {
    let p = params.on(&domain.inner);
    let space = space_for(domain, &p)?;
    basis_energy_norms(&space, &domain.inner, &p).map_err(err)
}

/// Removal by the prefix rule: `(removed, kept)` DOF indices.
#[pyfunction]
#[pyo3(signature = (norms, c, h, p = 2))]
fn basis_removal(norms: Vec<f64>, c: f64, h: f64, p: usize) -> (Vec<usize>, Vec<usize>) {
    let r = linalg::basis_removal(&norms, c, h, p);
    (r.removed, r.kept)
}

/// Extreme eigenvalues and spectral condition number of the system matrix.
#[pyfunction]
#[pyo3(signature = (domain, params, removal = true))]
fn eigen_extremes<'py>(py: Python<'py>, domain: &PyDomain, params: &PyParams, removal: bool) -> PyResult<Bound<'py, PyDict>> {
    let p = params.on(&domain.inner);
    let space = space_for(domain, &p)?;
    let sys = assemble(&space, &domain.inner, &p, &ManufacturedProblem).map_err(err)?;
    let report = removal_for(domain, &space, &p, removal)?;
    let red = linalg::restrict_system(&sys, &report).map_err(lin_err)?;
    let e = sym_eigen_extremes(&red.a, linalg::DEFAULT_DENSE_THRESHOLD).map_err(lin_err)?;
    let d = PyDict::new(py);
    d.set_item("lambda_min", e.min)?;
    d.set_item("lambda_max", e.max)?;
    d.set_item("kappa", if e.min > 0.0 { e.max / e.min } else { f64::INFINITY })?;
    d.set_item("n_dofs", red.a.nrows())?;
    Ok(d)
}

#[pyfunction]
fn convergence_rates(hs: Vec<f64>, errors: Vec<f64>) -> PyResult<Vec<f64>> {
    if hs.len() != errors.len() {
        return Err(PyValueError::new_err("hs and errors differ in length"));
    }
    Ok(harness::convergence_rates(&hs, &errors))
}

/// Worst case over `shifts` grid shifts for each circle mesh size.
#[pyfunction]
#[pyo3(signature = (params, hs = harness::CIRCLE_MESH_SIZES.to_vec(), shifts = 25))]
fn circle_convergence<'py>(py: Python<'py>, params: &PyParams, hs: Vec<f64>, shifts: usize) -> PyResult<Bound<'py, PyDict>> {
    if shifts == 0 || hs.is_empty() {
        return Err(PyValueError::new_err("need at least one mesh size and one shift"));
    }
    let s = py.detach(|| harness::run_worst_case_circle(&params.inner, &hs, shifts));
    study_dict(py, &s)
}

/// Fitted (`delta_cut = 0`) or cut square convergence.
#[pyfunction]
#[pyo3(signature = (params, ns = harness::SQUARE_MESH_COUNTS.to_vec(), delta_cut = 0.0))]
fn square_convergence<'py>(py: Python<'py>, params: &PyParams, ns: Vec<usize>, delta_cut: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = py
        .detach(|| {
            if delta_cut == 0.0 {
                harness::run_convergence_fitted_square(&params.inner, &ns)
            } else {
                harness::run_convergence_cut_square(&params.inner, &ns, delta_cut)
            }
        })
        .map_err(err)?;
    study_dict(py, &s)
}

/// Condition numbers with and without removal over circle grid shifts.
#[pyfunction]
#[pyo3(signature = (params, h = 0.13, shifts = 100))]
fn condition_study<'py>(py: Python<'py>, params: &PyParams, h: f64, shifts: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = py.detach(|| harness::run_condition_study(&params.inner, h, shifts)).map_err(err)?;
    study_dict(py, &s)
}

/// Smallest eigenvalues with the method frozen on the `base_n` mesh.
#[pyfunction]
#[pyo3(signature = (base_n = 10, levels = 4, delta_cuts = vec![0.0, 0.5, 0.9], taus = vec![1.0, 0.1], beta = MethodParams::DEFAULT_BETA, variants = vec!["ls".to_string(), "std".to_string()]))]
fn eigen_study<'py>(
    py: Python<'py>,
    base_n: usize,
    levels: usize,
    delta_cuts: Vec<f64>,
    taus: Vec<f64>,
    beta: f64,
    variants: Vec<String>,
) -> PyResult<Bound<'py, PyList>> {
    let variants = variants.iter().map(|v| parse_variant(v)).collect::<PyResult<Vec<_>>>()?;
    let cfg = FixedMethodConfig {
        base_n,
        levels,
        delta_cuts,
        taus,
        beta,
        variants,
        ..Default::default()
    };
    let studies = py.detach(|| harness::run_fixed_method_eigen_study(&cfg)).map_err(err)?;
    let out = PyList::empty(py);
    for s in &studies {
        out.append(study_dict(py, s)?)?;
    }
    Ok(out)
}

#[pymodule]
fn cutiga_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_system, m)?)?;
    m.add_function(wrap_pyfunction!(energy_norms, m)?)?;
    m.add_function(wrap_pyfunction!(basis_removal, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_extremes, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_rates, m)?)?;
    m.add_function(wrap_pyfunction!(circle_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(square_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(condition_study, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_study, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
