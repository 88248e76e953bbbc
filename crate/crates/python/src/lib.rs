//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers; reports come back as plain dicts.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use qdilate::generators::{generate as gen_instance, GeneratorSpec, Instance};
use qdilate::linalg::{ComplexMatrix, RelationVariant, ToleranceConfig};
use qdilate::phase::{verify_q_pair, verify_q_tuple, PhaseMatrix, QPair, QTuple};
use qdilate::tuple;
use qdilate::DilationError;

create_exception!(qdilate_py, QDilateError, PyException);

type Rows = Vec<Vec<Complex64>>;

fn err(e: DilationError) -> PyErr {
    QDilateError::new_err(format!("{}: {e}", e.code()))
}

fn to_matrix(rows: Rows) -> PyResult<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(err(DilationError::DimensionMismatch(
            "ragged matrix rows".into(),
        )));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn config(tol: Option<f64>) -> PyResult<ToleranceConfig> {
    let mut cfg = ToleranceConfig::default();
    if let Some(t) = tol {
        cfg = cfg.with_verify_tol(t);
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn parse_variant(s: &str) -> PyResult<RelationVariant> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|_| {
        err(DilationError::InvalidInstance(format!(
            "unknown variant {s:?}"
        )))
    })
}

/// A tuple of contractions with a phase matrix `theta`.
#[pyclass(name = "QTuple", module = "qdilate_py", frozen)]
struct PyQTuple {
    inner: QTuple,
}

#[pymethods]
impl PyQTuple {
    #[new]
    fn new(ops: Vec<Rows>, theta: Vec<Vec<f64>>) -> PyResult<Self> {
        let ops = ops.into_iter().map(to_matrix).collect::<PyResult<_>>()?;
        let phases = PhaseMatrix::new(theta).map_err(err)?;
        Ok(PyQTuple {
            inner: QTuple::new(ops, phases).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let t: QTuple = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(PyQTuple {
            inner: t.revalidate().map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&Instance::Tuple(self.inner.clone())).map_err(|e| err(e.into()))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ops(&self) -> Vec<Rows> {
        self.inner.ops().iter().map(to_rows).collect()
    }

    fn theta(&self) -> Vec<Vec<f64>> {
        let n = self.inner.n();
        let p = self.inner.phases();
        (0..n)
            .map(|i| (0..n).map(|j| p.theta(i, j)).collect())
            .collect()
    }

    fn szego_defect(&self) -> Rows {
        to_rows(&tuple::szego_defect(&self.inner))
    }

    #[pyo3(signature = (tol=None))]
    fn verify_relations<'py>(
        &self,
        py: Python<'py>,
        tol: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_q_tuple(&self.inner, &config(tol)?))
    }

    #[pyo3(signature = (tol=None))]
    fn brehmer_check<'py>(&self, py: Python<'py>, tol: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &tuple::brehmer_check(&self.inner, &config(tol)?).map_err(err)?,
        )
    }

    fn __repr__(&self) -> String {
        format!("QTuple(n={}, dim={})", self.inner.n(), self.inner.dim())
    }
}

/// A pair `(T1, T2)` with a unitary twist `Q` and a relation variant.
#[pyclass(name = "QPair", module = "qdilate_py", frozen)]
struct PyQPair {
    inner: QPair,
}

#[pymethods]
impl PyQPair {
    #[new]
    #[pyo3(signature = (t1, t2, q, variant="left"))]
    fn new(t1: Rows, t2: Rows, q: Rows, variant: &str) -> PyResult<Self> {
        let inner = QPair::new(
            to_matrix(t1)?,
            to_matrix(t2)?,
            to_matrix(q)?,
            parse_variant(variant)?,
        )
        .map_err(err)?;
        Ok(PyQPair { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (t1, t2, q, variant="left"))]
    fn scalar(t1: Rows, t2: Rows, q: Complex64, variant: &str) -> PyResult<Self> {
        let inner = QPair::scalar(to_matrix(t1)?, to_matrix(t2)?, q, parse_variant(variant)?)
            .map_err(err)?;
        Ok(PyQPair { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let p: QPair = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(PyQPair {
            inner: p.revalidate().map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&Instance::Pair(self.inner.clone())).map_err(|e| err(e.into()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn variant(&self) -> String {
        format!("{:?}", self.inner.variant).to_lowercase()
    }

    fn t1(&self) -> Rows {
        to_rows(&self.inner.t1)
    }

    fn t2(&self) -> Rows {
        to_rows(&self.inner.t2)
    }

    fn q(&self) -> Rows {
        to_rows(&self.inner.q)
    }

    #[pyo3(signature = (tol=None))]
    fn verify_relations<'py>(
        &self,
        py: Python<'py>,
        tol: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_q_pair(&self.inner, &config(tol)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "QPair(dim={}, variant={})",
            self.inner.dim(),
            self.variant()
        )
    }
}

/// Generate an instance from a generator spec given as a dict or JSON text.
#[pyfunction]
#[pyo3(signature = (spec, seed=0))]
fn generate<'py>(
    py: Python<'py>,
    spec: &Bound<'py, PyAny>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let text: String = match spec.extract::<String>() {
        Ok(s) => s,
        Err(_) => py
            .import("json")?
            .call_method1("dumps", (spec,))?
            .extract()?,
    };
    let spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| err(e.into()))?;
    match gen_instance(&spec, seed).map_err(err)? {
        Instance::Tuple(t) => Ok(Bound::new(py, PyQTuple { inner: t })?.into_any()),
        Instance::Pair(p) => Ok(Bound::new(py, PyQPair { inner: p })?.into_any()),
    }
}

/// Isometric dilation of a pair. Returns a dict with `v1`, `v2`, `q_tilde`
/// and `report`.
#[pyfunction]
#[pyo3(signature = (pair, k_max=5, tol=None))]
fn dilate_pair<'py>(
    py: Python<'py>,
    pair: &PyQPair,
    k_max: usize,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let (dil, rep) = qdilate::pair::dilate_pair(&pair.inner, k_max, &config(tol)?).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("v1", to_rows(&dil.v1))?;
    out.set_item("v2", to_rows(&dil.v2))?;
    out.set_item("q_tilde", to_rows(&dil.q_tilde))?;
    out.set_item("passed", rep.passed)?;
    out.set_item("report", to_py(py, &rep)?)?;
    Ok(out)
}

/// Dilation of a pure tuple into rotational shifts. Returns a dict with
/// `pi`, `shifts` and `report`.
#[pyfunction]
#[pyo3(signature = (t, deg=None, tol=None))]
fn pure_dilation<'py>(
    py: Python<'py>,
    t: &PyQTuple,
    deg: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let dil = tuple::pure_dilation(&t.inner, deg, &config(tol)?).map_err(err)?;
    let shifts: Vec<Rows> = dil
        .rotational_shifts()
        .map_err(err)?
        .iter()
        .map(to_rows)
        .collect();
    let out = PyDict::new(py);
    out.set_item("pi", to_rows(&dil.pi))?;
    out.set_item("shifts", shifts)?;
    out.set_item("passed", dil.report.passed)?;
    out.set_item("report", to_py(py, &dil.report)?)?;
    Ok(out)
}

/// Dilation of a Brehmer-positive tuple. Returns a dict with the stacked
/// `pi`, the per-subset blocks `parts` and `report`.
#[pyfunction]
#[pyo3(signature = (t, deg=None, tol=None))]
fn brehmer_dilation<'py>(
    py: Python<'py>,
    t: &PyQTuple,
    deg: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let dil = tuple::brehmer_dilation(&t.inner, deg, &config(tol)?).map_err(err)?;
    let parts = pyo3::types::PyList::empty(py);
    for p in &dil.parts {
        let d = PyDict::new(py);
        d.set_item("subset", p.subset.clone())?;
        d.set_item("pi", to_rows(&p.pi))?;
        d.set_item("diagnostics", to_py(py, &p.diagnostics)?)?;
        parts.append(d)?;
    }
    let out = PyDict::new(py);
    out.set_item("pi", to_rows(&dil.pi))?;
    out.set_item("parts", parts)?;
    out.set_item("passed", dil.report.passed)?;
    out.set_item("report", to_py(py, &dil.report)?)?;
    Ok(out)
}

#[pymodule]
pub fn qdilate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQTuple>()?;
    m.add_class::<PyQPair>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(dilate_pair, m)?)?;
    m.add_function(wrap_pyfunction!(pure_dilation, m)?)?;
    m.add_function(wrap_pyfunction!(brehmer_dilation, m)?)?;
    m.add("QDilateError", m.py().get_type::<QDilateError>())?;
    Ok(())
}
