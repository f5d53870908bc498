//! Python bindings: convergence studies, single-level solves, mesh reports
//! and the closest-point geometry of the torus.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::surface_darcy as core;
use core::analysis::{self, CaseSpec, ConvergenceRecord, MeshFamily, RunOptions};
use core::geometry::ImplicitSurface;
use core::mesh::{self, DiagonalSplit};
use core::solver::{SolverConfig, SolverMethod};
use core::{Error, Vec3};

create_exception!(surface_darcy, ConfigError, PyValueError);
create_exception!(surface_darcy, DomainError, PyValueError);
create_exception!(surface_darcy, ConvergenceError, PyRuntimeError);
create_exception!(surface_darcy, SingularSystemError, PyRuntimeError);
create_exception!(surface_darcy, DegenerateMeshError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Config(_) => ConfigError::new_err(msg),
        Error::Value(_) => PyValueError::new_err(msg),
        Error::Domain(_) => DomainError::new_err(msg),
        Error::Convergence { .. } => ConvergenceError::new_err(msg),
        Error::SingularSystem(_) => SingularSystemError::new_err(msg),
        Error::DegenerateMesh(_) | Error::DegenerateElement { .. } => DegenerateMeshError::new_err(msg),
        Error::Numerical(_) | Error::Io(_) => PyRuntimeError::new_err(msg),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_family(s: &str) -> PyResult<MeshFamily> {
    match s {
        "structured" => Ok(MeshFamily::Structured),
        "unstructured" => Ok(MeshFamily::Unstructured),
        _ => Err(ConfigError::new_err(format!("unknown mesh family {s:?}"))),
    }
}

fn parse_split(s: &str) -> PyResult<DiagonalSplit> {
    match s {
        "alternating" => Ok(DiagonalSplit::Alternating),
        "uniform" => Ok(DiagonalSplit::Uniform),
        _ => Err(ConfigError::new_err(format!("unknown diagonal split {s:?}"))),
    }
}

fn parse_method(s: &str) -> PyResult<SolverMethod> {
    match s {
        "gmres" => Ok(SolverMethod::KrylovGmres),
        "dense-lu" => Ok(SolverMethod::DenseLuFallback),
        "sparse-lu" => Ok(SolverMethod::SparseLu),
        _ => Err(ConfigError::new_err(format!("unknown solver {s:?}"))),
    }
}

fn resolve_case(
    case: Option<usize>,
    ku: Option<usize>,
    kp: Option<usize>,
    kg: Option<usize>,
    family: &str,
) -> PyResult<CaseSpec> {
    match (case, ku, kp, kg) {
        (Some(id), None, None, None) => analysis::case(id).map_err(to_py),
        (None, Some(ku), Some(kp), Some(kg)) => CaseSpec::custom(ku, kp, kg, parse_family(family)?).map_err(to_py),
        _ => Err(ConfigError::new_err("give either case=1..8 or all of ku, kp, kg")),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_options(
    levels: Vec<usize>,
    c_n: f64,
    seed: u64,
    amplitude: f64,
    split: &str,
    solver: &str,
    rel_tol: f64,
    max_iters: usize,
    restart: usize,
    quad_degree: Option<usize>,
) -> PyResult<RunOptions> {
    let options = RunOptions {
        levels,
        c_n,
        seed,
        jiggle_amplitude: amplitude,
        split: parse_split(split)?,
        solver: SolverConfig {
            method: parse_method(solver)?,
            rel_tol,
            max_iters,
            restart,
        },
        quad_degree,
        ..RunOptions::default()
    };
    options.validate().map_err(to_py)?;
    Ok(options)
}

/// Experimental orders of convergence between consecutive levels.
#[pyfunction]
fn eoc(errors: Vec<f64>, hs: Vec<f64>) -> PyResult<Vec<f64>> {
    analysis::eoc(&errors, &hs).map_err(to_py)
}

/// Orders, mesh family and expected orders of a tabulated case.
#[pyfunction]
fn case_spec(py: Python<'_>, case: usize) -> PyResult<Bound<'_, PyAny>> {
    json_to_py(py, &analysis::case(case).map_err(to_py)?)
}

/// Result of a convergence study.
#[pyclass(name = "ConvergenceRecord", module = "surface_darcy", frozen)]
struct PyConvergenceRecord {
    inner: ConvergenceRecord,
}

#[pymethods]
impl PyConvergenceRecord {
    #[getter]
    fn case_id(&self) -> Option<usize> {
        self.inner.case_id
    }

    #[getter]
    fn orders(&self) -> (usize, usize, usize) {
        (self.inner.k_u, self.inner.k_p, self.inner.k_g)
    }

    #[getter]
    fn mesh_family(&self) -> String {
        self.inner.mesh_family.to_string()
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.inner.failure.clone()
    }

    /// Per-level rows as a list of dicts.
    #[getter]
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.rows)
    }

    /// EOC columns as a dict of lists.
    #[getter]
    fn eoc<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.eoc)
    }

    /// Last-pair EOCs `(e_u, e_p, e_u_tan, e_u_norm, energy)`, or None with
    /// fewer than two levels.
    fn last_eoc(&self) -> Option<(f64, f64, f64, f64, f64)> {
        self.inner.last_eoc().map(|e| (e[0], e[1], e[2], e[3], e[4]))
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "ConvergenceRecord(case_id={:?}, k=({}, {}, {}), family={}, levels={})",
            self.inner.case_id,
            self.inner.k_u,
            self.inner.k_p,
            self.inner.k_g,
            self.inner.mesh_family,
            self.inner.rows.len()
        )
    }
}

/// Runs a convergence study for a tabulated case or explicit orders.
#[pyfunction]
#[pyo3(signature = (
    case=None, *, ku=None, kp=None, kg=None, family="structured",
    levels=vec![16, 32, 64, 128], c_n=0.0, seed=42, amplitude=0.25, split="alternating",
    solver="gmres", rel_tol=1e-10, max_iters=10_000, restart=200, quad_degree=None
))]
#[allow(clippy::too_many_arguments)]
fn run_case(
    py: Python<'_>,
    case: Option<usize>,
    ku: Option<usize>,
    kp: Option<usize>,
    kg: Option<usize>,
    family: &str,
    levels: Vec<usize>,
    c_n: f64,
    seed: u64,
    amplitude: f64,
    split: &str,
    solver: &str,
    rel_tol: f64,
    max_iters: usize,
    restart: usize,
    quad_degree: Option<usize>,
) -> PyResult<PyConvergenceRecord> {
    let spec = resolve_case(case, ku, kp, kg, family)?;
    let options = run_options(levels, c_n, seed, amplitude, split, solver, rel_tol, max_iters, restart, quad_degree)?;
    let record = py
        .detach(|| analysis::run_case(&spec, &options))
        .map_err(to_py)?;
    Ok(PyConvergenceRecord { inner: record })
}

/// Solves one level and returns its error norms and solver statistics.
#[pyfunction]
#[pyo3(signature = (
    n_major, case=None, *, ku=None, kp=None, kg=None, family="structured",
    c_n=0.0, seed=42, amplitude=0.25, split="alternating",
    solver="gmres", rel_tol=1e-10, max_iters=10_000, restart=200, quad_degree=None
))]
#[allow(clippy::too_many_arguments)]
fn solve_level<'py>(
    py: Python<'py>,
    n_major: usize,
    case: Option<usize>,
    ku: Option<usize>,
    kp: Option<usize>,
    kg: Option<usize>,
    family: &str,
    c_n: f64,
    seed: u64,
    amplitude: f64,
    split: &str,
    solver: &str,
    rel_tol: f64,
    max_iters: usize,
    restart: usize,
    quad_degree: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = resolve_case(case, ku, kp, kg, family)?;
    let options = run_options(
        vec![n_major],
        c_n,
        seed,
        amplitude,
        split,
        solver,
        rel_tol,
        max_iters,
        restart,
        quad_degree,
    )?;
    let level = py.detach(|| analysis::solve_level(&spec, n_major, &options)).map_err(to_py)?;
    #[derive(serde::Serialize)]
    struct Summary<'a> {
        n_major: usize,
        h: f64,
        n_dofs: usize,
        nnz: usize,
        norms: &'a core::assembly::ErrorNorms,
        stats: &'a core::solver::SolveStats,
        residual: f64,
    }
    json_to_py(
        py,
        &Summary {
            n_major,
            h: level.space_u.mesh().h(),
            n_dofs: level.system.layout.size(),
            nnz: level.system.matrix.nnz(),
            norms: &level.norms,
            stats: &level.stats,
            residual: level.residual,
        },
    )
}

/// Geometry diagnostics of a structured or jiggled torus mesh.
#[pyfunction]
#[pyo3(signature = (n, kg=1, family="structured", seed=42, amplitude=0.25, split="alternating"))]
fn mesh_report<'py>(
    py: Python<'py>,
    n: usize,
    kg: usize,
    family: &str,
    seed: u64,
    amplitude: f64,
    split: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let surface = ImplicitSurface::torus(1.0, 0.5).map_err(to_py)?;
    let structured = mesh::build_structured_torus(surface, n, kg, parse_split(split)?).map_err(to_py)?;
    let m = match parse_family(family)? {
        MeshFamily::Structured => structured,
        MeshFamily::Unstructured => {
            mesh::jiggle_to_unstructured(&structured, amplitude, analysis::level_seed(seed, n)).map_err(to_py)?
        }
    };
    json_to_py(py, &mesh::mesh_quality_report(&m).map_err(to_py)?)
}

/// Torus of major radius `R` and minor radius `r` centred at the origin
/// with the z-axis as axis of symmetry.
#[pyclass(name = "Torus", module = "surface_darcy", frozen)]
struct PyTorus {
    surface: ImplicitSurface,
}

fn vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

fn arr(v: Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[pymethods]
impl PyTorus {
    #[new]
    #[pyo3(signature = (major_radius=1.0, minor_radius=0.5))]
    fn new(major_radius: f64, minor_radius: f64) -> PyResult<Self> {
        Ok(Self {
            surface: ImplicitSurface::torus(major_radius, minor_radius).map_err(to_py)?,
        })
    }

    fn signed_distance(&self, x: [f64; 3]) -> PyResult<f64> {
        self.surface.signed_distance(&vec3(x)).map_err(to_py)
    }

    fn closest_point(&self, x: [f64; 3]) -> PyResult<[f64; 3]> {
        self.surface.closest_point(&vec3(x)).map(arr).map_err(to_py)
    }

    fn normal(&self, x: [f64; 3]) -> PyResult<[f64; 3]> {
        self.surface.normal(&vec3(x)).map(arr).map_err(to_py)
    }

    fn tangent_projector(&self, x: [f64; 3]) -> PyResult<[[f64; 3]; 3]> {
        let p = self.surface.tangent_projector(&vec3(x)).map_err(to_py)?;
        Ok([0, 1, 2].map(|i| [p[(i, 0)], p[(i, 1)], p[(i, 2)]]))
    }

    #[getter]
    fn area(&self) -> f64 {
        self.surface.area()
    }

    #[getter]
    fn reach(&self) -> f64 {
        self.surface.reach()
    }

    /// Exact velocity of the benchmark flow at a surface point.
    fn benchmark_velocity(&self, y: [f64; 3]) -> PyResult<[f64; 3]> {
        use core::analysis::ExactSolution;
        let exact = analysis::TorusBenchmark::for_surface(self.surface).map_err(to_py)?;
        exact.velocity(&vec3(y)).map(arr).map_err(to_py)
    }
}

#[pymodule]
#[pyo3(name = "surface_darcy")]
fn surface_darcy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_function(wrap_pyfunction!(eoc, m)?)?;
    m.add_function(wrap_pyfunction!(case_spec, m)?)?;
    m.add_function(wrap_pyfunction!(run_case, m)?)?;
    m.add_function(wrap_pyfunction!(solve_level, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_report, m)?)?;
    m.add_class::<PyConvergenceRecord>()?;
    m.add_class::<PyTorus>()?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DomainError", py.get_type::<DomainError>())?;
    m.add("ConvergenceError", py.get_type::<ConvergenceError>())?;
    m.add("SingularSystemError", py.get_type::<SingularSystemError>())?;
    m.add("DegenerateMeshError", py.get_type::<DegenerateMeshError>())?;
    m.add("N_CASES", analysis::N_CASES)?;
    Ok(())
}
