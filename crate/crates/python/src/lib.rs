//! Python bindings: objects, fact bases, deduction and pipelines.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use core_lib::{io, pipeline, AdjustmentSettings, AttrValue, Category, Error, Taxonomy};

extern crate spatial_reasoner as core_lib;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: AttrValue) -> PyResult<Py<PyAny>> {
    Ok(match v {
        AttrValue::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        AttrValue::Number(n) => n.into_pyobject(py)?.into_any().unbind(),
        AttrValue::Text(s) => s.into_pyobject(py)?.into_any().unbind(),
    })
}

fn from_py(v: &Bound<'_, PyAny>) -> PyResult<AttrValue> {
    if let Ok(b) = v.extract::<bool>() {
        return Ok(AttrValue::Bool(b));
    }
    if let Ok(n) = v.extract::<f64>() {
        return Ok(AttrValue::Number(n));
    }
    if let Ok(s) = v.extract::<String>() {
        return Ok(AttrValue::Text(s));
    }
    Err(PyValueError::new_err("attribute values must be bool, float or str"))
}

#[pyclass(name = "SpatialObject", from_py_object)]
#[derive(Clone)]
pub struct PySpatialObject {
    inner: core_lib::SpatialObject,
}

#[pymethods]
impl PySpatialObject {
    #[new]
    #[pyo3(signature = (id, x=0.0, y=0.0, z=0.0, w=1.0, h=1.0, d=1.0, angle=0.0, label="", r#type=""))]
    #[allow(clippy::too_many_arguments)]
    fn new(id: &str, x: f64, y: f64, z: f64, w: f64, h: f64, d: f64, angle: f64, label: &str, r#type: &str) -> PyResult<Self> {
        let inner = core_lib::SpatialObject::new(id).at(x, y, z).sized(w, h, d).rotated(angle).labeled(label).typed(r#type);
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn position(&self) -> (f64, f64, f64) {
        (self.inner.x, self.inner.y, self.inner.z)
    }

    #[getter]
    fn size(&self) -> (f64, f64, f64) {
        (self.inner.w, self.inner.h, self.inner.d)
    }

    #[getter]
    fn angle(&self) -> f64 {
        self.inner.angle
    }

    #[getter]
    fn label(&self) -> &str {
        &self.inner.label
    }

    #[getter]
    fn r#type(&self) -> &str {
        &self.inner.kind
    }

    #[getter]
    fn observer(&self) -> bool {
        self.inner.observer
    }

    #[setter]
    fn set_observer(&mut self, value: bool) {
        self.inner.observer = value;
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    /// Reads an attribute (stored or derived); `None` if undefined.
    fn get(&self, py: Python<'_>, key: &str) -> PyResult<Option<Py<PyAny>>> {
        self.inner.attribute(key, &AdjustmentSettings::default()).map(|v| to_py(py, v)).transpose()
    }

    /// Writes an attribute; `id` and derived attributes are rejected.
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.inner.set_attribute(key, from_py(value)?, false).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let o = &self.inner;
        format!("SpatialObject(id={:?}, x={}, y={}, z={}, w={}, h={}, d={}, angle={})", o.id, o.x, o.y, o.z, o.w, o.h, o.d, o.angle)
    }
}

#[pyclass(name = "Relation", frozen, get_all)]
pub struct PyRelation {
    subject: String,
    predicate: String,
    object: String,
    delta: f64,
    angle: f64,
}

#[pymethods]
impl PyRelation {
    fn __repr__(&self) -> String {
        format!("Relation({} {} {}, delta={}, angle={})", self.subject, self.predicate, self.object, self.delta, self.angle)
    }
}

#[pyclass(name = "FactBase", from_py_object)]
#[derive(Clone)]
pub struct PyFactBase {
    inner: core_lib::FactBase,
    settings: AdjustmentSettings,
}

#[pymethods]
impl PyFactBase {
    #[new]
    fn new() -> Self {
        Self { inner: core_lib::FactBase::new(), settings: AdjustmentSettings::default() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, settings) = io::load_document(text).map_err(py_err)?;
        Ok(Self { inner, settings: settings.unwrap_or_default() })
    }

    fn to_json(&self) -> PyResult<String> {
        io::dump_facts(&self.inner, Some(&self.settings)).map_err(py_err)
    }

    /// Inserts or replaces an object by id.
    fn add(&mut self, obj: PySpatialObject) -> PyResult<()> {
        self.inner.upsert(obj.inner).map_err(py_err)
    }

    fn objects(&self) -> Vec<PySpatialObject> {
        self.inner.objects().map(|o| PySpatialObject { inner: o.clone() }).collect()
    }

    fn get(&self, id: &str) -> Option<PySpatialObject> {
        self.inner.get(id).map(|o| PySpatialObject { inner: o.clone() })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Deduces the named categories (`topology` expands to its members).
    #[pyo3(signature = (categories, observer=None))]
    fn deduce(&mut self, categories: Vec<String>, observer: Option<&str>) -> PyResult<()> {
        let mut set = BTreeSet::new();
        for c in &categories {
            set.extend(Category::parse_set(c).map_err(py_err)?);
        }
        core_lib::deduce(&mut self.inner, &set, &self.settings, observer).map_err(py_err)
    }

    fn relations(&self) -> Vec<PyRelation> {
        self.inner
            .relations()
            .iter()
            .map(|r| PyRelation {
                subject: r.subject.clone(),
                predicate: r.predicate.clone(),
                object: r.object.clone(),
                delta: r.delta,
                angle: r.angle,
            })
            .collect()
    }

    /// Runs a pipeline on a copy of this fact base.
    #[pyo3(signature = (pipeline, taxonomy=None, observer=None))]
    fn run(&self, pipeline: &str, taxonomy: Option<&str>, observer: Option<String>) -> PyResult<PyPipelineResult> {
        let program = pipeline::parse_pipeline(pipeline).map_err(|e| py_err(e.into()))?;
        let mut ctx = pipeline::EvaluationContext::new(self.inner.clone(), self.settings.clone());
        if let Some(text) = taxonomy {
            ctx = ctx.with_taxonomy(Taxonomy::load(text).map_err(py_err)?);
        }
        if let Some(o) = observer {
            ctx = ctx.with_observer(o);
        }
        ctx.run(&program).map_err(py_err)?;
        Ok(PyPipelineResult {
            objects: ctx.current().to_vec(),
            chain: ctx.chain.clone(),
            logs: ctx.logs.iter().map(|l| (l.step, l.kind.name().to_string(), l.content.clone())).collect(),
            variables: ctx.variables().clone(),
            produced: ctx.produced.clone(),
            fact_base: PyFactBase { inner: ctx.fact_base, settings: ctx.settings },
        })
    }
}

#[pyclass(name = "PipelineResult", get_all)]
pub struct PyPipelineResult {
    /// Ids of the final object list.
    objects: Vec<String>,
    chain: Vec<Vec<String>>,
    /// `(step, kind, content)` per log artifact.
    logs: Vec<(usize, String, String)>,
    variables: BTreeMap<String, f64>,
    produced: Vec<String>,
    fact_base: PyFactBase,
}

/// Parses a pipeline and returns its canonical text.
#[pyfunction]
fn parse_pipeline(text: &str) -> PyResult<String> {
    pipeline::parse_pipeline(text).map(|p| p.to_string()).map_err(|e| py_err(e.into()))
}

#[pyfunction]
#[pyo3(signature = (fact_base, predicates=Vec::new()))]
fn export_mermaid(fact_base: &PyFactBase, predicates: Vec<String>) -> String {
    io::export_mermaid(&fact_base.inner, fact_base.inner.relations(), &predicates)
}

#[pyfunction]
fn export_scene(fact_base: &PyFactBase) -> String {
    io::export_scene(fact_base.inner.objects())
}

#[pymodule]
fn spatial_reasoner(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpatialObject>()?;
    m.add_class::<PyFactBase>()?;
    m.add_class::<PyRelation>()?;
    m.add_class::<PyPipelineResult>()?;
    m.add_function(wrap_pyfunction!(parse_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(export_mermaid, m)?)?;
    m.add_function(wrap_pyfunction!(export_scene, m)?)?;
    Ok(())
}
