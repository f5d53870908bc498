//! Parametric triangulations of the exact surface.
//!
//! A linear triangulation with vertices on the surface is lifted to order
//! `k_g` by placing the Lagrange points of each affine cell and projecting
//! them with the closest-point map. The resulting per-cell node lists are the
//! coefficients of the element maps.

pub mod quality;
pub mod reference;
pub mod vtk;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImplicitSurface, SurfaceKind};
use crate::{Mat3x2, Vec3};

pub use quality::{mesh_quality_report, QualityReport};
pub use reference::{ReferenceTriangle, EDGE_VERTICES};

/// How each quad of the structured (theta, phi) grid is cut into triangles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum DiagonalSplit {
    /// Diagonal direction alternates with the parity of `i + j`.
    #[default]
    Alternating,
    /// Every quad cut along the same diagonal.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub n_major: usize,
    pub n_minor: usize,
}

#[derive(Clone, Debug)]
pub struct ParametricMesh {
    surface: ImplicitSurface,
    geometry_order: usize,
    reference: ReferenceTriangle,
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 3]>,
    /// `cells.len() * reference.n_nodes()` points, cell-major.
    geometry_nodes: Vec<Vec3>,
    /// Sorted unique edges `(a, b)` with `a < b`.
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    edge_cells: Vec<[usize; 2]>,
    h: f64,
    /// Parameter coordinates (theta, phi) of each vertex on structured tori.
    parameters: Option<Vec<[f64; 2]>>,
    grid: Option<TorusGrid>,
}

impl ParametricMesh {
    /// Assembles a mesh from a linear triangulation whose vertices lie on the
    /// surface. Checks closedness and orientation.
    pub fn from_linear(
        surface: ImplicitSurface,
        vertices: Vec<Vec3>,
        cells: Vec<[usize; 3]>,
        geometry_order: usize,
    ) -> Result<Self> {
        if geometry_order == 0 {
            return Err(Error::Config("geometry order must be at least 1".into()));
        }
        let (edges, cell_edges, edge_cells) = build_edges(vertices.len(), &cells)?;
        let mut mesh = Self {
            surface,
            geometry_order,
            reference: ReferenceTriangle::new(geometry_order),
            vertices,
            cells,
            geometry_nodes: Vec::new(),
            edges,
            cell_edges,
            edge_cells,
            h: 0.0,
            parameters: None,
            grid: None,
        };
        mesh.rebuild_geometry()?;
        Ok(mesh)
    }

    /// Recomputes the projected geometry nodes and `h` from the vertices.
    fn rebuild_geometry(&mut self) -> Result<()> {
        let n_loc = self.reference.n_nodes();
        let mut nodes = Vec::with_capacity(self.cells.len() * n_loc);
        for cell in &self.cells {
            let [a, b, c] = cell.map(|v| self.vertices[v]);
            for (i, xi) in self.reference.nodes().iter().enumerate() {
                if i < 3 {
                    nodes.push(self.vertices[cell[i]]);
                    continue;
                }
                let affine = a + (b - a) * xi[0] + (c - a) * xi[1];
                nodes.push(self.surface.closest_point(&affine)?);
            }
        }
        self.geometry_nodes = nodes;
        self.h = self
            .edges
            .iter()
            .map(|[a, b]| (self.vertices[*a] - self.vertices[*b]).norm())
            .fold(0.0, f64::max);
        self.check_orientation()?;
        self.check_distance()?;
        Ok(())
    }

    fn check_orientation(&self) -> Result<()> {
        for cell in 0..self.cells.len() {
            let (x, jac) = self.element_map(cell, [1.0 / 3.0, 1.0 / 3.0]);
            let n_h = jac.column(0).cross(&jac.column(1));
            let n = self.surface.normal(&self.surface.closest_point(&x)?)?;
            if n_h.dot(&n) <= 0.0 {
                return Err(Error::DegenerateMesh(format!("cell {cell} is inverted")));
            }
        }
        Ok(())
    }

    /// Guards the tubular-neighborhood assumption: every geometry node and
    /// cell centroid must stay within half the reach of the surface.
    fn check_distance(&self) -> Result<()> {
        let limit = 0.5 * self.surface.reach();
        for cell in 0..self.cells.len() {
            let (x, _) = self.element_map(cell, [1.0 / 3.0, 1.0 / 3.0]);
            let rho = self.surface.signed_distance(&x)?;
            if rho.abs() >= limit {
                return Err(Error::DegenerateMesh(format!(
                    "cell {cell} leaves the tubular neighborhood (|rho| = {:.3e})",
                    rho.abs()
                )));
            }
        }
        Ok(())
    }

    pub fn surface(&self) -> &ImplicitSurface {
        &self.surface
    }

    pub fn geometry_order(&self) -> usize {
        self.geometry_order
    }

    pub fn reference(&self) -> &ReferenceTriangle {
        &self.reference
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge index of each local edge (see [`EDGE_VERTICES`]).
    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    pub fn edge_cells(&self) -> &[[usize; 2]] {
        &self.edge_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> Option<TorusGrid> {
        self.grid
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_cells() as i64
    }

    pub fn cell_geometry_nodes(&self, cell: usize) -> &[Vec3] {
        let n = self.reference.n_nodes();
        &self.geometry_nodes[cell * n..(cell + 1) * n]
    }

    pub fn geometry_nodes(&self) -> &[Vec3] {
        &self.geometry_nodes
    }

    /// Physical point and Jacobian `[dx/dxi, dx/deta]` of the element map.
    pub fn element_map(&self, cell: usize, ref_point: [f64; 2]) -> (Vec3, Mat3x2) {
        let (values, grads) = self.reference.eval_with_gradients(ref_point);
        self.combine(cell, &values, &grads)
    }

    /// Element map from precomputed geometry basis values and gradients.
    pub fn combine(&self, cell: usize, values: &[f64], grads: &[[f64; 2]]) -> (Vec3, Mat3x2) {
        let mut x = Vec3::zeros();
        let mut jac = Mat3x2::zeros();
        for ((node, v), g) in self.cell_geometry_nodes(cell).iter().zip(values).zip(grads) {
            x += node * *v;
            for d in 0..2 {
                let mut col = jac.column_mut(d);
                col += node * g[d];
            }
        }
        (x, jac)
    }

    /// Longest edge of the affine cell.
    pub fn cell_diameter(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cells[cell].map(|v| self.vertices[v]);
        (a - b).norm().max((b - c).norm()).max((c - a).norm())
    }

    /// Smallest interior angle of the affine cell, in degrees.
    pub fn cell_min_angle(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cells[cell].map(|v| self.vertices[v]);
        min_angle_deg(&a, &b, &c)
    }
}

pub(crate) fn min_angle_deg(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let angle = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        let cos = u.dot(&v) / (u.norm() * v.norm());
        cos.clamp(-1.0, 1.0).acos().to_degrees()
    };
    angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b))
}

type EdgeTables = (Vec<[usize; 2]>, Vec<[usize; 3]>, Vec<[usize; 2]>);

fn build_edges(n_vertices: usize, cells: &[[usize; 3]]) -> Result<EdgeTables> {
    let mut incidence: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
    for (c, cell) in cells.iter().enumerate() {
        if cell.iter().any(|&v| v >= n_vertices) {
            return Err(Error::DegenerateMesh(format!("cell {c} references a missing vertex")));
        }
        if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
            return Err(Error::DegenerateMesh(format!("cell {c} repeats a vertex")));
        }
        for [a, b] in EDGE_VERTICES {
            let (u, v) = (cell[a], cell[b]);
            incidence.entry([u.min(v), u.max(v)]).or_default().push(c);
        }
    }
    let mut edges = Vec::with_capacity(incidence.len());
    let mut edge_cells = Vec::with_capacity(incidence.len());
    let mut index = BTreeMap::new();
    for (e, (key, cs)) in incidence.into_iter().enumerate() {
        if cs.len() != 2 {
            return Err(Error::DegenerateMesh(format!(
                "edge {key:?} is shared by {} cells; the surface must be closed",
                cs.len()
            )));
        }
        index.insert(key, e);
        edges.push(key);
        edge_cells.push([cs[0], cs[1]]);
    }
    let cell_edges = cells
        .iter()
        .map(|cell| {
            EDGE_VERTICES.map(|[a, b]| {
                let (u, v) = (cell[a], cell[b]);
                index[&[u.min(v), u.max(v)]]
            })
        })
        .collect();
    Ok((edges, cell_edges, edge_cells))
}

/// Structured (theta, phi) triangulation of a torus with
/// `n_minor = n_major / 2`.
pub fn build_structured_torus(
    surface: ImplicitSurface,
    n_major: usize,
    geometry_order: usize,
    split: DiagonalSplit,
) -> Result<ParametricMesh> {
    if !matches!(surface.kind, SurfaceKind::Torus { .. }) {
        return Err(Error::Config("structured torus mesh requires a torus surface".into()));
    }
    if n_major < 8 || n_major % 2 != 0 {
        return Err(Error::Config(format!("n_major must be even and at least 8, got {n_major}")));
    }
    if !(1..=3).contains(&geometry_order) {
        return Err(Error::Config(format!("geometry order must be 1, 2 or 3, got {geometry_order}")));
    }
    let n_minor = n_major / 2;
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut parameters = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            parameters.push([TAU * i as f64 / n_major as f64, TAU * j as f64 / n_minor as f64]);
        }
    }
    let vertices = parameters
        .iter()
        .map(|[t, p]| surface.torus_point(*t, *p).expect("torus"))
        .collect();
    let mut cells = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let main_diagonal = match split {
                DiagonalSplit::Uniform => true,
                DiagonalSplit::Alternating => (i + j) % 2 == 0,
            };
            if main_diagonal {
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            } else {
                cells.push([v00, v10, v01]);
                cells.push([v10, v11, v01]);
            }
        }
    }
    let mut mesh = ParametricMesh::from_linear(surface, vertices, cells, geometry_order)?;
    mesh.parameters = Some(parameters);
    mesh.grid = Some(TorusGrid { n_major, n_minor });
    Ok(mesh)
}

/// Randomly displaces the vertices of a structured torus mesh in the
/// parameter plane by up to `amplitude` grid spacings per direction.
///
/// Vertices are processed in index order; a draw that would push an incident
/// cell below a 5 degree minimum angle is redrawn (at most 100 times).
pub fn jiggle_to_unstructured(mesh: &ParametricMesh, amplitude: f64, seed: u64) -> Result<ParametricMesh> {
    const MIN_ANGLE_DEG: f64 = 5.0;
    const MAX_REDRAWS: usize = 100;

    let (Some(grid), Some(parameters)) = (mesh.grid, mesh.parameters.as_ref()) else {
        return Err(Error::Config("jiggling requires a structured torus mesh".into()));
    };
    if !(0.0..=0.4).contains(&amplitude) {
        return Err(Error::Config(format!("jiggle amplitude must lie in [0, 0.4], got {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(mesh.clone());
    }
    let surface = mesh.surface;
    let d_theta = TAU / grid.n_major as f64;
    let d_phi = TAU / grid.n_minor as f64;

    let mut vertex_cells = vec![Vec::new(); mesh.n_vertices()];
    for (c, cell) in mesh.cells.iter().enumerate() {
        for &v in cell {
            vertex_cells[v].push(c);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = parameters.clone();
    let mut vertices = mesh.vertices.clone();
    for v in 0..vertices.len() {
        let base = parameters[v];
        let mut accepted = false;
        for _ in 0..MAX_REDRAWS {
            let dt = rng.random_range(-amplitude..=amplitude) * d_theta;
            let dp = rng.random_range(-amplitude..=amplitude) * d_phi;
            let candidate = [base[0] + dt, base[1] + dp];
            let x = surface.torus_point(candidate[0], candidate[1]).expect("torus");
            let ok = vertex_cells[v].iter().all(|&c| {
                let [a, b, cc] = mesh.cells[c].map(|u| if u == v { x } else { vertices[u] });
                min_angle_deg(&a, &b, &cc) > MIN_ANGLE_DEG
            });
            if ok {
                params[v] = candidate;
                vertices[v] = x;
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::DegenerateMesh(format!(
                "vertex {v}: no admissible displacement after {MAX_REDRAWS} draws"
            )));
        }
    }

    let mut out = mesh.clone();
    out.vertices = vertices;
    out.parameters = Some(params);
    out.rebuild_geometry()?;
    Ok(out)
}

/// Icosahedron refined `refinements` times and projected onto the sphere.
pub fn build_icosphere(surface: ImplicitSurface, refinements: usize, geometry_order: usize) -> Result<ParametricMesh> {
    let SurfaceKind::Sphere { radius } = surface.kind else {
        return Err(Error::Config("icosphere requires a sphere surface".into()));
    };
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::from(*p).normalize() * radius)
    .collect();
    let mut cells: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..refinements {
        let mut midpoints: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(cells.len() * 4);
        for [a, b, c] in cells {
            let mut mid = |u: usize, v: usize| {
                *midpoints.entry([u.min(v), u.max(v)]).or_insert_with(|| {
                    vertices.push(((vertices[u] + vertices[v]) * 0.5).normalize() * radius);
                    vertices.len() - 1
                })
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        cells = next;
    }
    ParametricMesh::from_linear(surface, vertices, cells, geometry_order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> ImplicitSurface {
        ImplicitSurface::torus(1.0, 0.5).unwrap()
    }

    #[test]
    fn structured_counts() {
        let m = build_structured_torus(torus(), 8, 1, DiagonalSplit::Alternating).unwrap();
        assert_eq!(m.n_vertices(), 32);
        assert_eq!(m.n_cells(), 64);
        assert_eq!(m.n_edges(), 96);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn quadratic_geometry_nodes_on_surface() {
        let s = torus();
        for split in [DiagonalSplit::Alternating, DiagonalSplit::Uniform] {
            let m = build_structured_torus(s, 8, 2, split).unwrap();
            assert_eq!(m.n_cells(), 64);
            assert_eq!(m.geometry_nodes().len(), 64 * 6);
            for x in m.geometry_nodes() {
                assert!(s.signed_distance(x).unwrap().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn invalid_grid_sizes() {
        assert!(matches!(
            build_structured_torus(torus(), 6, 1, DiagonalSplit::Alternating),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_structured_torus(torus(), 9, 1, DiagonalSplit::Alternating),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn h_halves_under_refinement() {
        let h16 = build_structured_torus(torus(), 16, 1, DiagonalSplit::Alternating).unwrap().h();
        let h32 = build_structured_torus(torus(), 32, 1, DiagonalSplit::Alternating).unwrap().h();
        // Brute-force max edge length over the grid as the oracle.
        let brute = |n: usize| {
            let m = build_structured_torus(torus(), n, 1, DiagonalSplit::Alternating).unwrap();
            let mut h: f64 = 0.0;
            for c in 0..m.n_cells() {
                h = h.max(m.cell_diameter(c));
            }
            h
        };
        assert_eq!(h16, brute(16));
        assert!((h16 / h32 - 2.0).abs() < 0.1, "ratio {}", h16 / h32);
    }

    #[test]
    fn closed_and_consistently_oriented() {
        let s = torus();
        for kg in 1..=2 {
            let m = build_structured_torus(s, 12, kg, DiagonalSplit::Uniform).unwrap();
            assert!(m.edge_cells().iter().all(|c| c[0] != c[1]));
            for c in 0..m.n_cells() {
                let (x, j) = m.element_map(c, [1.0 / 3.0, 1.0 / 3.0]);
                let nh = j.column(0).cross(&j.column(1));
                assert!(nh.dot(&s.normal(&s.closest_point(&x).unwrap()).unwrap()) > 0.0);
            }
        }
    }

    #[test]
    fn element_map_reproduces_vertices_and_centroid() {
        let m = build_structured_torus(torus(), 8, 2, DiagonalSplit::Alternating).unwrap();
        let refs = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for c in [0, 17, 63] {
            for (i, r) in refs.iter().enumerate() {
                let (x, _) = m.element_map(c, *r);
                assert_eq!(x, m.vertices()[m.cells()[c][i]]);
            }
        }
        let m1 = build_structured_torus(torus(), 8, 1, DiagonalSplit::Alternating).unwrap();
        let [a, b, c] = m1.cells()[5].map(|v| m1.vertices()[v]);
        let (x, j) = m1.element_map(5, [1.0 / 3.0, 1.0 / 3.0]);
        assert!((x - (a + b + c) / 3.0).norm() < 1e-15);
        let (_, j2) = m1.element_map(5, [0.1, 0.7]);
        assert!((j - j2).abs().max() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = build_structured_torus(torus(), 8, 2, DiagonalSplit::Alternating).unwrap();
        let h = 1e-6;
        for (c, p) in [(3, [0.2, 0.3]), (40, [0.61, 0.12]), (11, [0.05, 0.9])] {
            let (_, j) = m.element_map(c, p);
            let dxi = (m.element_map(c, [p[0] + h, p[1]]).0 - m.element_map(c, [p[0] - h, p[1]]).0) / (2.0 * h);
            let deta = (m.element_map(c, [p[0], p[1] + h]).0 - m.element_map(c, [p[0], p[1] - h]).0) / (2.0 * h);
            assert!((dxi - j.column(0)).norm() < 1e-7);
            assert!((deta - j.column(1)).norm() < 1e-7);
        }
    }

    #[test]
    fn jiggle_zero_amplitude_is_identity() {
        let m = build_structured_torus(torus(), 16, 2, DiagonalSplit::Alternating).unwrap();
        let j = jiggle_to_unstructured(&m, 0.0, 7).unwrap();
        assert_eq!(m.vertices(), j.vertices());
        assert_eq!(m.geometry_nodes(), j.geometry_nodes());
    }

    #[test]
    fn jiggle_is_deterministic_and_stays_on_surface() {
        let s = torus();
        let m = build_structured_torus(s, 16, 2, DiagonalSplit::Alternating).unwrap();
        let a = jiggle_to_unstructured(&m, 0.25, 42).unwrap();
        let b = jiggle_to_unstructured(&m, 0.25, 42).unwrap();
        let bits = |m: &ParametricMesh| {
            m.geometry_nodes()
                .iter()
                .flat_map(|x| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a.vertices(), m.vertices());
        let c = jiggle_to_unstructured(&m, 0.25, 43).unwrap();
        assert_ne!(a.vertices(), c.vertices());
        assert_eq!(a.euler_characteristic(), 0);
        for x in a.geometry_nodes() {
            assert!(s.signed_distance(x).unwrap().abs() <= 1e-12);
        }
        for cell in 0..a.n_cells() {
            assert!(a.cell_min_angle(cell) > 5.0);
        }
    }

    #[test]
    fn jiggle_rejects_bad_input() {
        let m = build_structured_torus(torus(), 8, 1, DiagonalSplit::Alternating).unwrap();
        assert!(matches!(jiggle_to_unstructured(&m, 0.5, 1), Err(Error::Config(_))));
        let sphere = build_icosphere(ImplicitSurface::sphere(1.0).unwrap(), 1, 1).unwrap();
        assert!(matches!(jiggle_to_unstructured(&sphere, 0.1, 1), Err(Error::Config(_))));
    }

    #[test]
    fn icosphere_topology() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        let m = build_icosphere(s, 2, 2).unwrap();
        assert_eq!(m.n_cells(), 20 * 16);
        assert_eq!(m.euler_characteristic(), 2);
        for x in m.geometry_nodes() {
            assert!(s.signed_distance(x).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn open_mesh_is_rejected() {
        let s = ImplicitSurface::sphere(1.0).unwrap();
        let v = vec![Vec3::x(), Vec3::y(), Vec3::z()];
        assert!(matches!(
            ParametricMesh::from_linear(s, v, vec![[0, 1, 2]], 1),
            Err(Error::DegenerateMesh(_))
        ));
    }
}
