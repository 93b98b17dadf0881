use dcw_core::cli::{self, CaseConfig};
use dcw_core::homogeneous_bundle::{self as hb, EigenspaceData, Mode};
use dcw_core::linalg::CMat;
use dcw_core::moduli::{self, Membership};
use dcw_core::{endo_space, grassmann_geometry as geo, rep_su2};
use num_complex::Complex64;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(err)
}

fn rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Serialize through JSON into plain Python objects.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// The irreducible representation S^k C^2 in its weight basis.
#[pyclass(name = "Irrep", frozen)]
struct PyIrrep(rep_su2::Irrep);

#[pymethods]
impl PyIrrep {
    #[new]
    fn new(k: usize) -> Self {
        PyIrrep(rep_su2::build_irrep(k))
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn weights(&self) -> Vec<i64> {
        self.0.weights.clone()
    }

    /// `(zeta, xi1, xi2)` as nested lists of complex numbers.
    fn generators(&self) -> Vec<Vec<Vec<Complex64>>> {
        let g = self.0.generators();
        g.all().iter().map(|m| rows(m)).collect()
    }

    /// ρ(exp(a ζ + b ξ₁ + c ξ₂)).
    fn rho(&self, a: f64, b: f64, c: f64) -> Vec<Vec<Complex64>> {
        rows(&self.0.rho(&rep_su2::Su2::exp_coords(a, b, c)))
    }
}

#[pyclass(name = "Eigenspace", frozen)]
struct PyEigenspace(EigenspaceData);

#[pymethods]
impl PyEigenspace {
    #[new]
    #[pyo3(signature = (k, l=0, mode="complex"))]
    fn new(k: i64, l: usize, mode: &str) -> PyResult<Self> {
        hb::eigenspace(k, l, parse_mode(mode)?).map(PyEigenspace).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn q(&self) -> usize {
        self.0.q()
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode().to_string()
    }

    /// `(holds, defect)` for 𝔪V0 ⊂ U0.
    fn gauge_condition(&self) -> (bool, f64) {
        hb::check_gauge_condition(&self.0)
    }

    /// `(dim, multiplicity, class_one)` per isotypic component of the symmetric endomorphisms.
    fn isotypic_table(&self) -> PyResult<Vec<(usize, usize, usize)>> {
        let space = endo_space::EndoSpace::new(self.0.mode(), self.0.dim());
        let t = endo_space::isotypic_decompose(&space.basis, &self.0.generators).map_err(err)?;
        Ok(t.iter().map(|c| (c.dim, c.multiplicity, c.class_one)).collect())
    }

    fn standard_map(&self) -> PyMapSpec {
        PyMapSpec(hb::standard_map(&self.0))
    }

    fn moduli(&self) -> PyResult<PyModuliBody> {
        moduli::constraint_space(&self.0).map(PyModuliBody).map_err(err)
    }
}

#[pyclass(name = "MapSpec", frozen)]
struct PyMapSpec(hb::MapSpec);

#[pymethods]
impl PyMapSpec {
    #[getter]
    fn m(&self) -> usize {
        self.0.m
    }

    fn trace_t2(&self) -> f64 {
        self.0.trace_t2()
    }

    fn t(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0.t)
    }

    /// Pointwise geometry report as a dict.
    #[pyo3(signature = (seed=42, n_samples=16))]
    fn verify<'py>(&self, py: Python<'py>, seed: u64, n_samples: usize) -> PyResult<Bound<'py, PyAny>> {
        let rep = py.detach(|| geo::verify_spec(&self.0, seed, n_samples)).map_err(err)?;
        to_py(py, &rep)
    }

    fn gauge_equivalent(&self, other: &PyMapSpec) -> bool {
        moduli::gauge_equivalent(&self.0, &other.0)
    }
}

type BoundarySummary = (usize, (usize, usize), (usize, usize));

#[pyclass(name = "ModuliBody", frozen)]
struct PyModuliBody(moduli::ModuliBody);

#[pymethods]
impl PyModuliBody {
    #[getter]
    fn d(&self) -> usize {
        self.0.d
    }

    /// `("interior" | "boundary" | "outside", λ_min)`.
    fn membership(&self, coords: Vec<f64>) -> PyResult<(String, f64)> {
        let (class, lam) = moduli::membership(&self.0, &coords).map_err(err)?;
        let name = match class {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::Outside => "outside",
        };
        Ok((name.to_string(), lam))
    }

    fn map_from_c(&self, coords: Vec<f64>) -> PyResult<PyMapSpec> {
        moduli::map_from_c(&self.0, &coords).map(PyMapSpec).map_err(err)
    }

    fn boundary_radius(&self, direction: Vec<f64>) -> PyResult<f64> {
        self.0.boundary_radius(&direction).map_err(err)
    }

    /// `(kernel_dim, reduced_target, ambient_target)` at a boundary point.
    fn boundary_analysis(&self, coords: Vec<f64>) -> PyResult<BoundarySummary> {
        let bp = moduli::boundary_analysis(&self.0, &coords).map_err(err)?;
        Ok((bp.kernel_dim, bp.reduced_target, bp.ambient_target))
    }

    fn centralizer_action(&self, theta: f64, coords: Vec<f64>) -> PyResult<Vec<f64>> {
        moduli::centralizer_action(&self.0, theta, &coords).map_err(err)
    }

    fn image_quotient<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let q = moduli::image_quotient(&self.0).map_err(err)?;
        to_py(py, &q)
    }
}

#[pyfunction]
fn list_cases() -> Vec<(&'static str, &'static str, &'static str)> {
    cli::list_cases().iter().map(|c| (c.id, c.description, c.citation)).collect()
}

#[pyfunction]
#[pyo3(signature = (case_id, k=None, l=None, mode=None, seed=42, n_samples=64, fd_step=1e-3))]
#[allow(clippy::too_many_arguments)]
fn run_case<'py>(
    py: Python<'py>,
    case_id: &str,
    k: Option<i64>,
    l: Option<usize>,
    mode: Option<&str>,
    seed: u64,
    n_samples: usize,
    fd_step: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = CaseConfig::for_case(case_id).map_err(|e| PyKeyError::new_err(e.to_string()))?;
    cfg.k = k.unwrap_or(cfg.k);
    cfg.l = l.unwrap_or(cfg.l);
    if let Some(m) = mode {
        cfg.mode = parse_mode(m)?;
    }
    cfg.seed = seed;
    cfg.n_samples = n_samples;
    cfg.fd_step = fd_step;
    let report = py.detach(|| cli::run_case(&cfg)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (seed=42, fd_step=1e-3))]
fn run_acceptance<'py>(py: Python<'py>, seed: u64, fd_step: f64) -> PyResult<Bound<'py, PyAny>> {
    let summary = py.detach(|| cli::run_acceptance(seed, fd_step));
    to_py(py, &summary)
}

#[pymodule]
fn dcw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIrrep>()?;
    m.add_class::<PyEigenspace>()?;
    m.add_class::<PyMapSpec>()?;
    m.add_class::<PyModuliBody>()?;
    m.add_function(wrap_pyfunction!(list_cases, m)?)?;
    m.add_function(wrap_pyfunction!(run_case, m)?)?;
    m.add_function(wrap_pyfunction!(run_acceptance, m)?)?;
    Ok(())
}
