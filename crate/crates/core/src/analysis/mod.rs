//! Convergence studies on the torus benchmark.
//!
//! A case fixes the velocity, pressure and geometry orders and the mesh
//! family. [`run_case`] solves it on a sequence of refinements and collects
//! error norms and experimental orders of convergence (EOC).

pub mod exact;

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, assemble_error_norms, default_quad_degree, AssemblyOptions, ErrorNorms, LinearSystem};
use crate::error::{Error, Result};
use crate::fespace::FeSpace;
use crate::geometry::ImplicitSurface;
use crate::mesh::vtk::{sample_mesh, write_legacy_vtk, PointData};
use crate::mesh::{build_structured_torus, jiggle_to_unstructured, DiagonalSplit, ParametricMesh};
use crate::solver::{relative_residual, solve, SolveStats, SolverConfig};
use crate::Vec3;

pub use exact::{problem_data, torus_exact_solution, ExactSolution, SphereRotation, TorusBenchmark};

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive pairs.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::Value(format!(
            "eoc needs two equally long lists of length >= 2, got {} and {}",
            errors.len(),
            hs.len()
        )));
    }
    if let Some(i) = errors.iter().position(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::Value(format!("error at level {i} is not positive: {}", errors[i])));
    }
    if let Some(i) = hs.iter().position(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::Value(format!("mesh size at level {i} is not positive: {}", hs[i])));
    }
    let mut out = Vec::with_capacity(errors.len() - 1);
    for i in 0..errors.len() - 1 {
        let dh = (hs[i] / hs[i + 1]).ln();
        if dh == 0.0 {
            return Err(Error::Value(format!("mesh sizes at levels {i} and {} coincide", i + 1)));
        }
        out.push((errors[i] / errors[i + 1]).ln() / dh);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MeshFamily {
    Structured,
    Unstructured,
}

impl std::fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeshFamily::Structured => "structured",
            MeshFamily::Unstructured => "unstructured",
        })
    }
}

/// Orders and mesh family of a convergence case, with the expected
/// asymptotic orders of `e_u` and `e_p` when they are tabulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub case_id: Option<usize>,
    pub k_u: usize,
    pub k_p: usize,
    pub k_g: usize,
    pub family: MeshFamily,
    pub expected_order_u: Option<f64>,
    pub expected_order_p: Option<f64>,
}

impl CaseSpec {
    pub fn custom(k_u: usize, k_p: usize, k_g: usize, family: MeshFamily) -> Result<Self> {
        let spec = Self {
            case_id: None,
            k_u,
            k_p,
            k_g,
            family,
            expected_order_u: None,
            expected_order_p: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.k_u) || !(1..=3).contains(&self.k_p) {
            return Err(Error::Config(format!(
                "velocity and pressure orders must be 1..=3, got k_u={} k_p={}",
                self.k_u, self.k_p
            )));
        }
        if !(1..=2).contains(&self.k_g) {
            return Err(Error::Config(format!("geometry order must be 1 or 2, got {}", self.k_g)));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.case_id {
            Some(id) => format!("case{id}"),
            None => format!("ku{}_kp{}_kg{}_{}", self.k_u, self.k_p, self.k_g, self.family),
        }
    }
}

/// The eight torus cases: `(k_u, k_p, k_g, family, order e_u, order e_p)`.
const CASE_TABLE: [(usize, usize, usize, MeshFamily, f64, f64); 8] = [
    (1, 1, 1, MeshFamily::Structured, 2.0, 2.0),
    (1, 2, 1, MeshFamily::Structured, 2.0, 2.0),
    (1, 1, 1, MeshFamily::Unstructured, 1.0, 2.0),
    (1, 2, 1, MeshFamily::Unstructured, 2.0, 2.0),
    (1, 1, 2, MeshFamily::Structured, 2.0, 2.0),
    (1, 2, 2, MeshFamily::Structured, 2.0, 3.0),
    (1, 1, 2, MeshFamily::Unstructured, 1.0, 2.0),
    (1, 2, 2, MeshFamily::Unstructured, 2.0, 3.0),
];

pub const N_CASES: usize = CASE_TABLE.len();

pub fn case(id: usize) -> Result<CaseSpec> {
    if !(1..=N_CASES).contains(&id) {
        return Err(Error::Config(format!("case id must be 1..={N_CASES}, got {id}")));
    }
    let (k_u, k_p, k_g, family, eu, ep) = CASE_TABLE[id - 1];
    Ok(CaseSpec {
        case_id: Some(id),
        k_u,
        k_p,
        k_g,
        family,
        expected_order_u: Some(eu),
        expected_order_p: Some(ep),
    })
}

pub fn all_cases() -> Vec<CaseSpec> {
    (1..=N_CASES).map(|id| case(id).expect("case table")).collect()
}

pub const DEFAULT_LEVELS: [usize; 4] = [16, 32, 64, 128];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub levels: Vec<usize>,
    pub major_radius: f64,
    pub minor_radius: f64,
    pub c_n: f64,
    pub seed: u64,
    /// Vertex perturbation of unstructured meshes, as a fraction of the
    /// local parameter spacing.
    pub jiggle_amplitude: f64,
    pub split: DiagonalSplit,
    pub solver: SolverConfig,
    pub quad_degree: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS.to_vec(),
            major_radius: 1.0,
            minor_radius: 0.5,
            c_n: 0.0,
            seed: 42,
            jiggle_amplitude: 0.25,
            split: DiagonalSplit::Alternating,
            solver: SolverConfig::default(),
            quad_degree: None,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("at least one level is required".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("levels must be strictly ascending, got {:?}", self.levels)));
        }
        if let Some(n) = self.levels.iter().find(|n| **n < 8 || **n % 2 != 0) {
            return Err(Error::Config(format!("levels must be even and at least 8, got {n}")));
        }
        if !(self.c_n >= 0.0 && self.c_n.is_finite()) {
            return Err(Error::Config(format!("c_N must be finite and non-negative, got {}", self.c_n)));
        }
        if !(0.0..=0.4).contains(&self.jiggle_amplitude) {
            return Err(Error::Config(format!(
                "jiggle amplitude must lie in [0, 0.4], got {}",
                self.jiggle_amplitude
            )));
        }
        ImplicitSurface::torus(self.major_radius, self.minor_radius)?;
        self.solver.validate()
    }
}

/// Seed of the perturbation at one level; levels are jiggled independently.
pub fn level_seed(seed: u64, n_major: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ n_major as u64
}

pub fn build_level_mesh(spec: &CaseSpec, n_major: usize, options: &RunOptions) -> Result<ParametricMesh> {
    let surface = ImplicitSurface::torus(options.major_radius, options.minor_radius)?;
    let structured = build_structured_torus(surface, n_major, spec.k_g, options.split)?;
    match spec.family {
        MeshFamily::Structured => Ok(structured),
        MeshFamily::Unstructured => {
            jiggle_to_unstructured(&structured, options.jiggle_amplitude, level_seed(options.seed, n_major))
        }
    }
}

/// Everything computed on one refinement level.
pub struct LevelSolution {
    pub space_u: FeSpace,
    pub space_p: FeSpace,
    pub system: LinearSystem,
    pub solution: Vec<f64>,
    pub stats: SolveStats,
    pub norms: ErrorNorms,
    /// `||b - Ax|| / ||b||`, recomputed independently of the solver.
    pub residual: f64,
}

pub fn solve_level(spec: &CaseSpec, n_major: usize, options: &RunOptions) -> Result<LevelSolution> {
    spec.validate()?;
    let mesh = Arc::new(build_level_mesh(spec, n_major, options)?);
    let space_u = FeSpace::new(mesh.clone(), spec.k_u)?;
    let space_p = FeSpace::new(mesh, spec.k_p)?;
    let exact = Arc::new(torus_exact_solution(options.major_radius, options.minor_radius)?);
    let assembly = AssemblyOptions {
        c_n: options.c_n,
        quad_degree: options.quad_degree,
    };
    let system = assemble(&space_u, &space_p, &problem_data(exact.clone()), &assembly)?;
    let (solution, stats) = solve(&system, &options.solver)?;
    let residual = relative_residual(&system.matrix, &solution, &system.rhs);
    let degree = options
        .quad_degree
        .unwrap_or_else(|| default_quad_degree(spec.k_u, spec.k_p, spec.k_g));
    let norms = assemble_error_norms(&space_u, &space_p, &solution, exact.as_ref(), degree)?;
    Ok(LevelSolution {
        space_u,
        space_p,
        system,
        solution,
        stats,
        norms,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n_major: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub e_u: f64,
    pub e_p: f64,
    pub e_u_tan: f64,
    pub e_u_norm: f64,
    pub energy: f64,
    pub e_u_norm_h: f64,
    pub pressure_integral: f64,
    pub area: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// EOCs between consecutive rows; entry `i` compares rows `i` and `i + 1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EocColumns {
    pub e_u: Vec<f64>,
    pub e_p: Vec<f64>,
    pub e_u_tan: Vec<f64>,
    pub e_u_norm: Vec<f64>,
    pub energy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub case_id: Option<usize>,
    pub k_u: usize,
    pub k_p: usize,
    pub k_g: usize,
    pub mesh_family: MeshFamily,
    pub rows: Vec<LevelRow>,
    pub eoc: EocColumns,
    /// Set when a level failed; `rows` then holds the completed levels.
    pub failure: Option<String>,
}

impl ConvergenceRecord {
    pub fn is_partial(&self) -> bool {
        self.failure.is_some()
    }

    fn compute_eocs(&mut self) -> Result<()> {
        if self.rows.len() < 2 {
            self.eoc = EocColumns::default();
            return Ok(());
        }
        let hs: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        let col = |f: fn(&LevelRow) -> f64| -> Result<Vec<f64>> {
            eoc(&self.rows.iter().map(f).collect::<Vec<_>>(), &hs)
        };
        self.eoc = EocColumns {
            e_u: col(|r| r.e_u)?,
            e_p: col(|r| r.e_p)?,
            e_u_tan: col(|r| r.e_u_tan)?,
            e_u_norm: col(|r| r.e_u_norm)?,
            energy: col(|r| r.energy)?,
        };
        Ok(())
    }

    /// EOCs of the last two levels, `(e_u, e_p, e_u_tan, e_u_norm, energy)`.
    pub fn last_eoc(&self) -> Option<[f64; 5]> {
        let e = &self.eoc;
        Some([
            *e.e_u.last()?,
            *e.e_p.last()?,
            *e.e_u_tan.last()?,
            *e.e_u_norm.last()?,
            *e.energy.last()?,
        ])
    }

    pub const CSV_HEADER: &'static str =
        "level,n_major,h,n_dofs,e_u,eoc_u,e_p,eoc_p,e_u_tan,eoc_u_tan,e_u_norm,eoc_u_norm,energy,eoc_energy";

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        let cell = |v: &[f64], i: usize| -> String {
            if i == 0 {
                String::new()
            } else {
                v.get(i - 1).map(|x| format!("{x:.6}")).unwrap_or_default()
            }
        };
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{:.10e},{},{:.10e},{},{:.10e},{},{:.10e},{},{:.10e},{},{:.10e},{}",
                i,
                r.n_major,
                r.h,
                r.n_dofs,
                r.e_u,
                cell(&self.eoc.e_u, i),
                r.e_p,
                cell(&self.eoc.e_p, i),
                r.e_u_tan,
                cell(&self.eoc.e_u_tan, i),
                r.e_u_norm,
                cell(&self.eoc.e_u_norm, i),
                r.energy,
                cell(&self.eoc.energy, i),
            );
        }
        s
    }
}

/// Runs a case on every level. Configuration errors are returned directly;
/// a failure while computing a level stops the study and is reported in the
/// returned record.
pub fn run_case(spec: &CaseSpec, options: &RunOptions) -> Result<ConvergenceRecord> {
    run_case_with(spec, options, |_, _| Ok(()))
}

/// [`run_case`] with a callback receiving each solved level, e.g. to write
/// fields to disk.
pub fn run_case_with(
    spec: &CaseSpec,
    options: &RunOptions,
    mut on_level: impl FnMut(usize, &LevelSolution) -> Result<()>,
) -> Result<ConvergenceRecord> {
    spec.validate()?;
    options.validate()?;
    let mut record = ConvergenceRecord {
        case_id: spec.case_id,
        k_u: spec.k_u,
        k_p: spec.k_p,
        k_g: spec.k_g,
        mesh_family: spec.family,
        rows: Vec::with_capacity(options.levels.len()),
        eoc: EocColumns::default(),
        failure: None,
    };
    for &n in &options.levels {
        let level = match solve_level(spec, n, options).and_then(|l| on_level(n, &l).map(|_| l)) {
            Ok(l) => l,
            Err(e) => {
                record.failure = Some(format!("level n_major={n}: {e}"));
                break;
            }
        };
        record.rows.push(LevelRow {
            n_major: n,
            h: level.space_u.mesh().h(),
            n_dofs: level.system.layout.size(),
            e_u: level.norms.e_u,
            e_p: level.norms.e_p,
            e_u_tan: level.norms.e_u_tan,
            e_u_norm: level.norms.e_u_norm,
            energy: level.norms.energy,
            e_u_norm_h: level.norms.e_u_norm_h,
            pressure_integral: level.norms.pressure_integral,
            area: level.norms.area,
            residual: level.residual,
            iterations: level.stats.iterations,
        });
    }
    if let Err(e) = record.compute_eocs() {
        record.failure.get_or_insert(format!("eoc: {e}"));
    }
    Ok(record)
}

/// Writes `u_h` (components and vector), `p_h` and `n_h . u_h` at the
/// visualization points of the mesh.
pub fn write_level_vtk<W: Write>(out: &mut W, title: &str, level: &LevelSolution) -> Result<()> {
    let mesh = level.space_u.mesh();
    let samples = sample_mesh(mesh);
    let layout = level.system.layout;
    let n = samples.locations.len();
    let (mut u, mut p, mut un) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &(cell, r) in &samples.locations {
        let bu = level.space_u.eval_basis(cell, r)?;
        let mut v = Vec3::zeros();
        for (i, &d) in level.space_u.cell_dofs(cell).iter().enumerate() {
            for c in 0..3 {
                v[c] += bu.values[i] * layout.velocity_component(&level.solution, c)[d];
            }
        }
        let (ph, _) = level.space_p.evaluate(layout.pressure_part(&level.solution), cell, r)?;
        u.push(v);
        p.push(ph);
        un.push(bu.normal.dot(&v));
    }
    let comp: Vec<Vec<f64>> = (0..3).map(|c| u.iter().map(|v| v[c]).collect()).collect();
    write_legacy_vtk(
        out,
        title,
        &samples,
        &[
            ("u_h", PointData::Vector(&u)),
            ("u_h_x", PointData::Scalar(&comp[0])),
            ("u_h_y", PointData::Scalar(&comp[1])),
            ("u_h_z", PointData::Scalar(&comp[2])),
            ("p_h", PointData::Scalar(&p)),
            ("n_h_dot_u_h", PointData::Scalar(&un)),
        ],
    )?;
    Ok(())
}
