//! The stabilized Darcy system on the discrete surface.
//!
//! Unknowns are laid out as `[u_x | u_y | u_z | p | mu]`: three Cartesian
//! velocity components in the velocity space, the pressure, and one
//! multiplier enforcing zero mean pressure on the discrete surface. The
//! bilinear form is
//!
//! ```text
//! A((u,p),(v,q)) = 1/2 (u,v) + 1/2 (grad p, grad q) + 1/2 (grad p, v)
//!                - 1/2 (u, grad q) + c_N (n_h.u, n_h.v)
//! L((v,q))       = (f, q) + 1/2 (g, v + grad q)
//! ```
//!
//! with all integrals over the discrete surface and surface gradients taken
//! on it. Data `f`, `g` are evaluated at closest points of quadrature points.

pub mod norms;
pub mod sparse;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::{discrete_normal_and_measure, quadrature_for, FeSpace, ReferenceTables, TangentialMap};
use crate::Vec3;

pub use norms::{assemble_error_norms, ErrorNorms};
pub use sparse::{CsrMatrix, TripletList};

pub type ScalarFn = Arc<dyn Fn(&Vec3) -> Result<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Vec3) -> Result<Vec3> + Send + Sync>;

/// Source `f` and tangential forcing `g`, both as functions on the exact surface.
#[derive(Clone)]
pub struct ProblemData {
    pub f: ScalarFn,
    pub g: VectorFn,
}

impl ProblemData {
    pub fn new(f: ScalarFn, g: VectorFn) -> Self {
        Self { f, g }
    }

    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_| Ok(0.0)),
            g: Arc::new(|_| Ok(Vec3::zeros())),
        }
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ProblemData { .. }")
    }
}

/// Index layout of the coupled system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofLayout {
    pub n_u: usize,
    pub n_p: usize,
}

impl DofLayout {
    pub fn size(&self) -> usize {
        3 * self.n_u + self.n_p + 1
    }

    #[inline]
    pub fn velocity(&self, component: usize, dof: usize) -> usize {
        component * self.n_u + dof
    }

    #[inline]
    pub fn pressure(&self, dof: usize) -> usize {
        3 * self.n_u + dof
    }

    pub fn multiplier(&self) -> usize {
        3 * self.n_u + self.n_p
    }

    pub fn velocity_component<'a>(&self, x: &'a [f64], component: usize) -> &'a [f64] {
        &x[component * self.n_u..(component + 1) * self.n_u]
    }

    pub fn pressure_part<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[3 * self.n_u..3 * self.n_u + self.n_p]
    }
}

#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    /// Weight of the normal penalty `c_N (n_h.u, n_h.v)`.
    pub c_n: f64,
    /// Quadrature degree; defaults to `2 max(k_u, k_p) + k_g + 1`.
    pub quad_degree: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            c_n: 0.0,
            quad_degree: None,
        }
    }
}

pub fn default_quad_degree(k_u: usize, k_p: usize, k_g: usize) -> usize {
    2 * k_u.max(k_p) + k_g + 1
}

pub(crate) fn check_same_mesh(space_u: &FeSpace, space_p: &FeSpace) -> Result<()> {
    if !Arc::ptr_eq(space_u.mesh(), space_p.mesh()) {
        return Err(Error::Config("velocity and pressure spaces must share one mesh".into()));
    }
    Ok(())
}

const CELLS_PER_TASK: usize = 256;

struct LocalContribution {
    triplets: TripletList,
    rhs: Vec<(usize, f64)>,
}

pub fn assemble(
    space_u: &FeSpace,
    space_p: &FeSpace,
    data: &ProblemData,
    options: &AssemblyOptions,
) -> Result<LinearSystem> {
    check_same_mesh(space_u, space_p)?;
    if !(options.c_n >= 0.0) || !options.c_n.is_finite() {
        return Err(Error::Config(format!("c_N must be finite and non-negative, got {}", options.c_n)));
    }
    let mesh = space_u.mesh();
    let degree = options
        .quad_degree
        .unwrap_or_else(|| default_quad_degree(space_u.order(), space_p.order(), mesh.geometry_order()));
    let rule = quadrature_for(degree)?;
    let tables = ReferenceTables::new(mesh, &rule);
    let u_tab = tables.space(space_u.reference());
    let p_tab = tables.space(space_p.reference());
    let layout = DofLayout {
        n_u: space_u.n_dofs(),
        n_p: space_p.n_dofs(),
    };
    let surface = *mesh.surface();
    let c_n = options.c_n;
    let (nlu, nlp) = (space_u.n_local(), space_p.n_local());

    let cells: Vec<usize> = (0..mesh.n_cells()).collect();
    let chunks: Vec<Result<LocalContribution>> = cells
        .par_chunks(CELLS_PER_TASK)
        .map(|chunk| {
            let per_cell = 9 * nlu * nlu + 6 * nlu * nlp + nlp * nlp + 2 * nlp;
            let mut triplets = TripletList::with_capacity(chunk.len() * per_cell);
            let mut rhs = Vec::with_capacity(chunk.len() * (3 * nlu + nlp));
            let mut mass = vec![0.0; nlu * nlu];
            let mut penalty = vec![0.0; 9 * nlu * nlu];
            let mut stiff = vec![0.0; nlp * nlp];
            let mut coupling = vec![0.0; 3 * nlu * nlp];
            let mut mean = vec![0.0; nlp];
            let mut rhs_u = vec![0.0; 3 * nlu];
            let mut rhs_p = vec![0.0; nlp];
            let mut grads = vec![Vec3::zeros(); nlp];
            for &cell in chunk {
                mass.fill(0.0);
                penalty.fill(0.0);
                stiff.fill(0.0);
                coupling.fill(0.0);
                mean.fill(0.0);
                rhs_u.fill(0.0);
                rhs_p.fill(0.0);
                for (q, w) in tables.weights.iter().enumerate() {
                    let (gv, gg) = &tables.geometry[q];
                    let (x, jac) = mesh.combine(cell, gv, gg);
                    let (n_h, area) = discrete_normal_and_measure(&jac, cell)?;
                    let map = TangentialMap::new(&jac, cell)?;
                    let da = w * area;
                    let phi = &u_tab[q].0;
                    let (psi, psi_ref) = (&p_tab[q].0, &p_tab[q].1);
                    for (g, rg) in grads.iter_mut().zip(psi_ref) {
                        *g = map.apply(*rg);
                    }
                    let y = surface.closest_point(&x)?;
                    let f = (data.f)(&y)?;
                    let g = (data.g)(&y)?;

                    for i in 0..nlu {
                        for j in 0..nlu {
                            mass[i * nlu + j] += 0.5 * phi[i] * phi[j] * da;
                        }
                        for c in 0..3 {
                            rhs_u[c * nlu + i] += 0.5 * g[c] * phi[i] * da;
                        }
                    }
                    if c_n > 0.0 {
                        for c in 0..3 {
                            for d in 0..3 {
                                let nn = c_n * n_h[c] * n_h[d] * da;
                                let block = &mut penalty[(c * 3 + d) * nlu * nlu..(c * 3 + d + 1) * nlu * nlu];
                                for i in 0..nlu {
                                    for j in 0..nlu {
                                        block[i * nlu + j] += nn * phi[i] * phi[j];
                                    }
                                }
                            }
                        }
                    }
                    for a in 0..nlp {
                        for b in 0..nlp {
                            stiff[a * nlp + b] += 0.5 * grads[a].dot(&grads[b]) * da;
                        }
                        mean[a] += psi[a] * da;
                        rhs_p[a] += (f * psi[a] + 0.5 * g.dot(&grads[a])) * da;
                    }
                    for c in 0..3 {
                        for i in 0..nlu {
                            for b in 0..nlp {
                                coupling[(c * nlu + i) * nlp + b] += 0.5 * phi[i] * grads[b][c] * da;
                            }
                        }
                    }
                }

                let udofs = space_u.cell_dofs(cell);
                let pdofs = space_p.cell_dofs(cell);
                for c in 0..3 {
                    for (i, &gi) in udofs.iter().enumerate() {
                        let row = layout.velocity(c, gi);
                        for (j, &gj) in udofs.iter().enumerate() {
                            triplets.push(row, layout.velocity(c, gj), mass[i * nlu + j]);
                        }
                        if c_n > 0.0 {
                            for d in 0..3 {
                                let block = &penalty[(c * 3 + d) * nlu * nlu..];
                                for (j, &gj) in udofs.iter().enumerate() {
                                    triplets.push(row, layout.velocity(d, gj), block[i * nlu + j]);
                                }
                            }
                        }
                        for (b, &gb) in pdofs.iter().enumerate() {
                            let v = coupling[(c * nlu + i) * nlp + b];
                            triplets.push(row, layout.pressure(gb), v);
                            triplets.push(layout.pressure(gb), row, -v);
                        }
                        rhs.push((row, rhs_u[c * nlu + i]));
                    }
                }
                for (a, &ga) in pdofs.iter().enumerate() {
                    let row = layout.pressure(ga);
                    for (b, &gb) in pdofs.iter().enumerate() {
                        triplets.push(row, layout.pressure(gb), stiff[a * nlp + b]);
                    }
                    triplets.push(row, layout.multiplier(), mean[a]);
                    triplets.push(layout.multiplier(), row, mean[a]);
                    rhs.push((row, rhs_p[a]));
                }
            }
            Ok(LocalContribution { triplets, rhs })
        })
        .collect();

    let n = layout.size();
    let mut triplets = TripletList::default();
    let mut rhs = vec![0.0; n];
    for chunk in chunks {
        let chunk = chunk?;
        triplets.extend(chunk.triplets);
        for (i, v) in chunk.rhs {
            rhs[i] += v;
        }
    }
    Ok(LinearSystem {
        matrix: CsrMatrix::from_triplets(n, n, triplets),
        rhs,
        layout,
    })
}
