use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use metaimp::geometry::{make_disk, make_multi, make_sampled, make_star, ParticleBoundary};
use metaimp::green::{self, CellPoint};
use metaimp::impedance::{self, DrudeParams, MaterialState, EPS_0};
use metaimp::operators::{eigendecompose, PeriodicOperators};
use metaimp::shape_optim::{self, AscentOptions};
use metaimp::sweep::{self as sw, PreparedGeometry, WavelengthGrid};
use metaimp::verify::{self, VerifyOptions};

fn py_err(e: metaimp::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn pt(p: (f64, f64)) -> CellPoint {
    CellPoint::new(p.0, p.1)
}

/// Closed particle boundary sampled at Nyström nodes.
#[pyclass(name = "Boundary", module = "metaimp_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyBoundary {
    inner: ParticleBoundary,
}

#[pymethods]
impl PyBoundary {
    #[staticmethod]
    #[pyo3(signature = (center, radius, nodes=128))]
    fn disk(center: (f64, f64), radius: f64, nodes: usize) -> PyResult<Self> {
        make_disk(pt(center), radius, nodes).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (center, base_radius, amplitude, lobes, nodes=128))]
    fn star(center: (f64, f64), base_radius: f64, amplitude: f64, lobes: u32, nodes: usize) -> PyResult<Self> {
        make_star(pt(center), base_radius, amplitude, lobes, nodes)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Periodic interpolation of an ordered, counter-clockwise point list.
    #[staticmethod]
    #[pyo3(signature = (points, nodes=128))]
    fn sampled(points: Vec<(f64, f64)>, nodes: usize) -> PyResult<Self> {
        let pts = points.into_iter().map(|(a, b)| [a, b]).collect();
        make_sampled(pts, nodes).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn union(parts: Vec<PyBoundary>) -> PyResult<Self> {
        make_multi(parts.into_iter().map(|p| p.inner).collect())
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Boundary(components={}, nodes={}, area={:.6})",
            self.inner.n_components(),
            self.inner.len(),
            self.inner.area()
        )
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }

    #[getter]
    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().iter().map(|n| (n.point.x1, n.point.x2)).collect()
    }

    #[getter]
    fn normals(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().iter().map(|n| (n.normal[0], n.normal[1])).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights()
    }

    /// Move node `i` by `eta * h[i]` along the outward normal.
    fn perturb(&self, h: Vec<f64>, eta: f64) -> PyResult<Self> {
        self.inner
            .perturb(&metaimp::NormalPerturbation { h, eta })
            .map(|inner| Self { inner })
            .map_err(py_err)
    }
}

/// Discrete single-layer and Neumann–Poincaré operators of a boundary.
#[pyclass(name = "Operators", module = "metaimp_py", frozen)]
struct PyOperators {
    inner: PeriodicOperators,
}

#[pymethods]
impl PyOperators {
    #[new]
    fn new(boundary: &PyBoundary) -> PyResult<Self> {
        PeriodicOperators::assemble(&boundary.inner)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn single_layer(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.single_layer)
    }

    fn np(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.np)
    }

    fn calderon_residual(&self) -> f64 {
        self.inner.calderon_residual()
    }

    /// Eigenvalues of K* on zero-mean densities, largest magnitude first.
    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        eigendecompose(&self.inner).map(|s| s.eigenvalues).map_err(py_err)
    }

    /// `alpha_inf` at spectral parameter `z` by direct solve or modal series.
    #[pyo3(signature = (boundary, z, path="direct"))]
    fn alpha_inf(&self, boundary: &PyBoundary, z: Complex64, path: &str) -> PyResult<Complex64> {
        match path {
            "direct" => impedance::alpha_inf_direct(&self.inner, &boundary.inner, z)
                .map(|r| r.alpha_inf)
                .map_err(py_err),
            "spectral" => {
                let spec = eigendecompose(&self.inner).map_err(py_err)?;
                Ok(impedance::alpha_inf_spectral(&spec, &boundary.inner, z).alpha_inf)
            }
            other => Err(PyValueError::new_err(format!("unknown path {other:?}"))),
        }
    }
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[pyfunction]
fn g_periodic(x1: f64, x2: f64) -> PyResult<f64> {
    green::g_periodic(CellPoint::new(x1, x2)).map_err(py_err)
}

#[pyfunction]
fn g_halfspace(x: (f64, f64), y: (f64, f64)) -> PyResult<f64> {
    green::g_halfspace(pt(x), pt(y)).map_err(py_err)
}

/// `(spectral parameter z, permeability ratio)` of Drude gold at a wavelength in nm.
#[pyfunction]
#[pyo3(signature = (wavelength_nm, background=1.0))]
fn drude_gold(wavelength_nm: f64, background: f64) -> PyResult<(Complex64, Complex64)> {
    let params = DrudeParams {
        background,
        ..DrudeParams::default()
    };
    let m = MaterialState::drude(wavelength_nm, &params, Complex64::new(EPS_0, 0.0)).map_err(py_err)?;
    Ok((m.spectral_parameter(), m.mu_ratio()))
}

/// Rows `(wavelength_nm, alpha_inf)` of a Drude-gold sweep.
#[pyfunction]
#[pyo3(signature = (boundary, start_nm=300.0, stop_nm=1500.0, count=241, background=1.0))]
fn sweep(
    py: Python<'_>,
    boundary: &PyBoundary,
    start_nm: f64,
    stop_nm: f64,
    count: usize,
    background: f64,
) -> PyResult<Vec<(f64, Complex64)>> {
    let grid = WavelengthGrid { start_nm, stop_nm, count };
    grid.validate().map_err(py_err)?;
    let params = DrudeParams {
        background,
        ..DrudeParams::default()
    };
    let b = boundary.inner.clone();
    py.detach(|| {
        let prep = PreparedGeometry::new(b)?;
        sw::sweep(&prep, &grid.wavelengths(), &params, Complex64::new(EPS_0, 0.0))
            .into_iter()
            .map(|p| p.map(|r| (r.wavelength_nm, r.alpha_inf)).map_err(|(_, e)| e))
            .collect::<metaimp::Result<Vec<_>>>()
    })
    .map_err(py_err)
}

/// Shape derivative of `alpha_inf` at the nodes for permeability ratio `mu_ratio`.
#[pyfunction]
fn shape_gradient(boundary: &PyBoundary, mu_ratio: Complex64) -> PyResult<Vec<Complex64>> {
    shape_optim::shape_gradient(&boundary.inner, mu_ratio)
        .map(|g| g.density)
        .map_err(py_err)
}

/// Ascent of `J = |alpha_inf|^2 / 2`; returns the objective per iteration and the final boundary.
#[pyfunction]
#[pyo3(signature = (boundary, mu_ratio, steps=20))]
fn ascend(py: Python<'_>, boundary: &PyBoundary, mu_ratio: Complex64, steps: usize) -> PyResult<(Vec<f64>, PyBoundary)> {
    let opts = AscentOptions {
        steps,
        ..AscentOptions::default()
    };
    let b = boundary.inner.clone();
    let t = py.detach(|| shape_optim::ascend_j(&b, mu_ratio, &opts)).map_err(py_err)?;
    let j = t.records.iter().map(|r| r.j).collect();
    Ok((j, PyBoundary { inner: t.last().boundary.clone() }))
}

#[pyfunction]
#[pyo3(signature = (z, k, angle_deg=0.0, delta=0.05))]
fn reflection(z: Complex64, k: f64, angle_deg: f64, delta: f64) -> PyResult<Complex64> {
    impedance::reflection_coefficient(z, k, impedance::incidence_direction(angle_deg), delta).map_err(py_err)
}

/// Self-check report as `(name, tier, measured, tolerance)` tuples.
#[pyfunction]
#[pyo3(signature = (fast=true, nodes=64))]
fn run_verify(py: Python<'_>, fast: bool, nodes: usize) -> Vec<(String, String, f64, f64)> {
    let opts = VerifyOptions {
        nodes,
        fast,
        ..VerifyOptions::default()
    };
    py.detach(|| verify::run_verify(&opts))
        .checks
        .into_iter()
        .map(|c| (c.name.to_string(), c.tier.as_str().to_string(), c.measured, c.tolerance))
        .collect()
}

#[pymodule]
pub fn metaimp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBoundary>()?;
    m.add_class::<PyOperators>()?;
    m.add_function(wrap_pyfunction!(g_periodic, m)?)?;
    m.add_function(wrap_pyfunction!(g_halfspace, m)?)?;
    m.add_function(wrap_pyfunction!(drude_gold, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(shape_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(ascend, m)?)?;
    m.add_function(wrap_pyfunction!(reflection, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
