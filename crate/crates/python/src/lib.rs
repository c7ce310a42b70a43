//! Python module `stcmc`: meshes, ambient models, induced geometry and the
//! stability, energy, inequality and foliation analyses.
//!
//! Structured results come back as plain dicts with the same field names as
//! the JSON report.

use nalgebra::Vector3;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use stcmc_core::ambient::AmbientModel;
use stcmc_core::ambient::ScalarField;
use stcmc_core::discrete_ops::SolverOptions;
use stcmc_core::pipeline::{self, defaults, AnalysisConfig, SolverConfig};
use stcmc_core::surface::{InducedGeometry, SurfaceMesh};
use stcmc_core::{checks, energies, foliation, stability, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Numerical { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn solver(seed: Option<u64>) -> SolverOptions {
    SolverConfig {
        seed: seed.unwrap_or(defaults::SEED),
        ..SolverConfig::default()
    }
    .options()
}

#[pyclass(name = "Mesh", module = "stcmc", frozen)]
struct PyMesh {
    inner: SurfaceMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        let inner = SurfaceMesh {
            vertices: vertices.into_iter().map(Vector3::from).collect(),
            faces,
            level: None,
            parametrization: None,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (level, radius = 1.0, center = [0.0; 3]))]
    fn icosphere(level: u32, radius: f64, center: [f64; 3]) -> PyResult<Self> {
        let inner = SurfaceMesh::icosphere(level, radius, Vector3::from(center)).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    /// Radial graph `x = center + ρ(u) u` over a level-`level` icosphere,
    /// with `ρ` an expression in `x, y, z` evaluated on the unit direction.
    #[staticmethod]
    #[pyo3(signature = (level, rho, center = [0.0; 3]))]
    fn radial_graph(level: u32, rho: &str, center: [f64; 3]) -> PyResult<Self> {
        let field = ScalarField::parse(rho).map_err(to_py)?;
        let inner = SurfaceMesh::icosphere(level, 1.0, Vector3::zeros())
            .and_then(|m| m.radial_graph(|u| field.value(u), Vector3::from(center)))
            .map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn read_off(path: &str) -> PyResult<Self> {
        Ok(PyMesh {
            inner: SurfaceMesh::read_off(path).map_err(to_py)?,
        })
    }

    fn write_off(&self, path: &str) -> PyResult<()> {
        self.inner.write_off(path).map_err(to_py)
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.vertices.iter().map(|v| [v.x, v.y, v.z]).collect()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces.clone()
    }

    #[getter]
    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    fn __len__(&self) -> usize {
        self.inner.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, faces={})", self.inner.vertex_count(), self.inner.faces.len())
    }
}

#[pyclass(name = "Model", module = "stcmc", frozen)]
struct PyModel {
    inner: AmbientModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn minkowski() -> Self {
        PyModel {
            inner: AmbientModel::minkowski(),
        }
    }

    #[staticmethod]
    fn schwarzschild(mass: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: AmbientModel::schwarzschild(mass).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn hyperbolic(curvature: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: AmbientModel::hyperbolic(curvature).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn spherical(curvature: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: AmbientModel::spherical(curvature).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn cosmological(lambda: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: AmbientModel::cosmological(lambda).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn cosmological_constant(&self) -> Option<f64> {
        self.inner.lambda()
    }

    fn chart_radius_for_areal(&self, areal: f64) -> PyResult<f64> {
        self.inner.chart_radius_for_areal(areal).map_err(to_py)
    }

    fn chart_radius_for_geodesic(&self, rho: f64) -> PyResult<f64> {
        self.inner.chart_radius_for_geodesic(rho).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.name())
    }
}

/// Induced geometry of a mesh in a model slice.
#[pyclass(name = "Geometry", module = "stcmc", frozen)]
struct PyGeometry {
    inner: InducedGeometry,
    model: AmbientModel,
}

#[pymethods]
impl PyGeometry {
    #[new]
    fn new(mesh: &PyMesh, model: &PyModel) -> PyResult<Self> {
        Ok(PyGeometry {
            inner: InducedGeometry::new(&mesh.inner, &model.inner).map_err(to_py)?,
            model: model.inner.clone(),
        })
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.area
    }

    #[getter]
    fn area_radius(&self) -> f64 {
        self.inner.area_radius()
    }

    #[getter]
    fn vertex_area(&self) -> Vec<f64> {
        self.inner.vertex_area.clone()
    }

    #[getter]
    fn mean_curvature(&self) -> Vec<f64> {
        self.inner.mean_curvature.clone()
    }

    #[getter]
    fn trace_k(&self) -> Vec<f64> {
        self.inner.p.clone()
    }

    #[getter]
    fn theta_l(&self) -> Vec<f64> {
        self.inner.theta_l.clone()
    }

    #[getter]
    fn theta_k(&self) -> Vec<f64> {
        self.inner.theta_k.clone()
    }

    #[getter]
    fn theta_product(&self) -> Vec<f64> {
        self.inner.theta_product()
    }

    #[getter]
    fn scalar_curvature(&self) -> Vec<f64> {
        self.inner.scalar_curvature.clone()
    }

    fn integrate(&self, field: Vec<f64>) -> PyResult<f64> {
        if field.len() != self.inner.vertex_count() {
            return Err(PyValueError::new_err("field needs one value per vertex"));
        }
        Ok(self.inner.integrate(&field))
    }

    fn hawking_energy(&self) -> f64 {
        energies::hawking_energy(&self.inner)
    }

    fn deficit(&self) -> f64 {
        energies::deficit(&self.inner)
    }

    #[pyo3(signature = (stcmc_tolerance = defaults::STCMC_TOLERANCE))]
    fn energy_report(&self, py: Python<'_>, stcmc_tolerance: f64) -> PyResult<Py<PyAny>> {
        let r = energies::energy_report(&self.inner, &self.model, stcmc_tolerance).map_err(to_py)?;
        to_dict(py, &r)
    }

    fn stcmc_potential(&self) -> PyResult<Vec<f64>> {
        stability::stcmc_potential(&self.inner, &self.model).map_err(to_py)
    }

    #[pyo3(signature = (
        stcmc_tolerance = defaults::STCMC_TOLERANCE,
        equality_tolerance = defaults::EQUALITY_TOLERANCE,
        seed = None,
    ))]
    fn stcmc_stability(
        &self,
        py: Python<'_>,
        stcmc_tolerance: f64,
        equality_tolerance: f64,
        seed: Option<u64>,
    ) -> PyResult<Py<PyAny>> {
        let v = stability::stcmc_potential(&self.inner, &self.model).map_err(to_py)?;
        let a = stability::variational_margin_stcmc(&self.inner, &v, stcmc_tolerance, equality_tolerance, &solver(seed))
            .map_err(to_py)?;
        to_dict(py, &a)
    }

    #[pyo3(signature = (lam = None, equality_tolerance = defaults::EQUALITY_TOLERANCE, seed = None))]
    fn cmc_stability(
        &self,
        py: Python<'_>,
        lam: Option<f64>,
        equality_tolerance: f64,
        seed: Option<u64>,
    ) -> PyResult<Py<PyAny>> {
        let lambda = lam.or_else(|| self.model.lambda()).unwrap_or(0.0);
        let a = stability::cmc_jacobi_margin(&self.inner, &self.model, lambda, equality_tolerance, &solver(seed))
            .map_err(to_py)?;
        to_dict(py, &a)
    }

    #[pyo3(signature = (lam = None, tolerance = defaults::EQUALITY_TOLERANCE))]
    fn inequalities(&self, py: Python<'_>, lam: Option<f64>, tolerance: f64) -> PyResult<Py<PyAny>> {
        let lambda = lam.or_else(|| self.model.lambda()).unwrap_or(0.0);
        to_dict(py, &checks::inequality_report(&self.inner, lambda, tolerance))
    }

    /// `λ₂(−Δ + q)|Σ| ≤ 8π + ∫q` with `q ≡ 0` unless given.
    #[pyo3(signature = (q = None, tolerance = defaults::EQUALITY_TOLERANCE, seed = None))]
    fn el_soufi_ilias(
        &self,
        py: Python<'_>,
        q: Option<Vec<f64>>,
        tolerance: f64,
        seed: Option<u64>,
    ) -> PyResult<Py<PyAny>> {
        let q = q.unwrap_or_else(|| vec![0.0; self.inner.vertex_count()]);
        let v = checks::el_soufi_ilias_check(&self.inner, &q, tolerance, &solver(seed)).map_err(to_py)?;
        to_dict(py, &v)
    }

    fn hersch_balance(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let h = checks::hersch_balance(&self.inner).map_err(to_py)?;
        to_dict(py, &h.certificate)
    }

    fn gauss_residual(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let r = checks::gauss_residual(&self.inner, &self.model).map_err(to_py)?;
        to_dict(
            py,
            &serde_json::json!({
                "riemannian": r.riemannian,
                "spacetime": r.spacetime,
                "riemannian_l1": r.riemannian_l1,
                "spacetime_l1": r.spacetime_l1,
                "gauss_bonnet_defect": r.gauss_bonnet_defect,
            }),
        )
    }

    fn __len__(&self) -> usize {
        self.inner.vertex_count()
    }
}

/// Areal radius of the outermost leaf with `H² − P² = 4/σ²`.
#[pyfunction]
fn solve_stcmc_radius(model: &PyModel, sigma: f64) -> PyResult<f64> {
    foliation::solve_stcmc_radius(&model.inner, sigma).map_err(to_py)
}

#[pyfunction]
fn leaf_hawking(model: &PyModel, areal_radius: f64) -> PyResult<f64> {
    foliation::leaf_hawking(&model.inner, areal_radius).map_err(to_py)
}

#[pyfunction]
fn area_radius_relation(py: Python<'_>, model: &PyModel, sigmas: Vec<f64>) -> PyResult<Py<PyAny>> {
    let r = foliation::area_radius_relation_check(&model.inner, &sigmas).map_err(to_py)?;
    to_dict(py, &r)
}

#[pyfunction]
fn null_leaf_margin(py: Python<'_>, sigma: f64, mass: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &foliation::null_leaf_margin(sigma, mass).map_err(to_py)?)
}

/// Runs a TOML config and returns the report dict.
#[pyfunction]
#[pyo3(signature = (config, base_dir = None))]
fn run_config(py: Python<'_>, config: &str, base_dir: Option<&str>) -> PyResult<Py<PyAny>> {
    let mut c = AnalysisConfig::from_toml_str(config).map_err(to_py)?;
    if let Some(dir) = base_dir {
        c.base_dir = dir.into();
    }
    let out = py.detach(|| pipeline::run(&c)).map_err(to_py)?;
    to_dict(py, &out.report)
}

#[pyfunction]
#[pyo3(signature = (name, level = defaults::LEVEL, seed = defaults::SEED))]
fn run_suite(py: Python<'_>, name: &str, level: u32, seed: u64) -> PyResult<Py<PyAny>> {
    let r = py
        .detach(|| pipeline::run_suite(name, level, seed, &solver(Some(seed))))
        .map_err(to_py)?;
    to_dict(py, &r)
}

#[pymodule]
pub fn stcmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SCHEMA_VERSION", pipeline::SCHEMA_VERSION)?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyGeometry>()?;
    m.add_function(wrap_pyfunction!(solve_stcmc_radius, m)?)?;
    m.add_function(wrap_pyfunction!(leaf_hawking, m)?)?;
    m.add_function(wrap_pyfunction!(area_radius_relation, m)?)?;
    m.add_function(wrap_pyfunction!(null_leaf_margin, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
