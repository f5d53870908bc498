//! Continuous parametric Lagrange spaces on a [`ParametricMesh`].
//!
//! DOFs are numbered vertices first, then edges in sorted vertex-pair order
//! (nodes running from the lower to the higher vertex index), then cell
//! interiors. Surface gradients are `J (J^T J)^{-1} grad_ref`, which are
//! tangent to the discrete element.

pub mod quadrature;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{ParametricMesh, ReferenceTriangle, EDGE_VERTICES};
use crate::{Mat3x2, Vec3};

pub use quadrature::{quadrature_for, QuadratureRule};

const MIN_AREA_SCALE: f64 = 1e-14;
const MIN_METRIC_DET: f64 = 1e-24;

/// Unit normal `col0 x col1 / |col0 x col1|` and the area factor
/// `|col0 x col1| = sqrt(det(J^T J))`.
pub fn discrete_normal_and_measure(jacobian: &Mat3x2, cell: usize) -> Result<(Vec3, f64)> {
    let cross = jacobian.column(0).cross(&jacobian.column(1));
    let area_scale = cross.norm();
    if area_scale < MIN_AREA_SCALE {
        return Err(Error::DegenerateElement {
            cell,
            reason: format!("area scale {area_scale:.3e}"),
        });
    }
    Ok((cross / area_scale, area_scale))
}

/// Maps reference gradients to surface gradients on the element with
/// Jacobian `jacobian`.
pub struct TangentialMap {
    jacobian: Mat3x2,
    inv_metric: [[f64; 2]; 2],
}

impl TangentialMap {
    pub fn new(jacobian: &Mat3x2, cell: usize) -> Result<Self> {
        let c0 = jacobian.column(0);
        let c1 = jacobian.column(1);
        let (g00, g01, g11) = (c0.dot(&c0), c0.dot(&c1), c1.dot(&c1));
        let det = g00 * g11 - g01 * g01;
        if det < MIN_METRIC_DET {
            return Err(Error::DegenerateElement {
                cell,
                reason: format!("first fundamental form determinant {det:.3e}"),
            });
        }
        Ok(Self {
            jacobian: *jacobian,
            inv_metric: [[g11 / det, -g01 / det], [-g01 / det, g00 / det]],
        })
    }

    pub fn apply(&self, ref_grad: [f64; 2]) -> Vec3 {
        let a = self.inv_metric[0][0] * ref_grad[0] + self.inv_metric[0][1] * ref_grad[1];
        let b = self.inv_metric[1][0] * ref_grad[0] + self.inv_metric[1][1] * ref_grad[1];
        self.jacobian.column(0) * a + self.jacobian.column(1) * b
    }
}

/// Basis data at one point of a physical element.
#[derive(Clone, Debug)]
pub struct BasisEval {
    pub x: Vec3,
    pub jacobian: Mat3x2,
    pub normal: Vec3,
    pub area_scale: f64,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec3>,
}

#[derive(Clone, Debug)]
pub struct FeSpace {
    mesh: Arc<ParametricMesh>,
    reference: ReferenceTriangle,
    dof_map: Vec<usize>,
    n_dofs: usize,
    node_coords: Vec<Vec3>,
}

impl FeSpace {
    pub fn new(mesh: Arc<ParametricMesh>, order: usize) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::Config(format!("Lagrange order must be 1, 2 or 3, got {order}")));
        }
        let reference = ReferenceTriangle::new(order);
        let k = order;
        let n_loc = reference.n_nodes();
        let (nv, ne, nc) = (mesh.n_vertices(), mesh.n_edges(), mesh.n_cells());
        let n_int = reference.n_interior();
        let edge_base = nv;
        let interior_base = nv + ne * (k - 1);
        let n_dofs = interior_base + nc * n_int;

        let mut dof_map = Vec::with_capacity(nc * n_loc);
        for (c, cell) in mesh.cells().iter().enumerate() {
            dof_map.extend_from_slice(cell);
            for (e, [a, b]) in EDGE_VERTICES.iter().enumerate() {
                let g = mesh.cell_edges()[c][e];
                let forward = cell[*a] < cell[*b];
                for m in 1..k {
                    let pos = if forward { m } else { k - m };
                    dof_map.push(edge_base + g * (k - 1) + pos - 1);
                }
            }
            for i in 0..n_int {
                dof_map.push(interior_base + c * n_int + i);
            }
        }

        let mut node_coords = vec![Vec3::zeros(); n_dofs];
        let geometry = mesh.reference();
        for c in 0..nc {
            for (i, xi) in reference.nodes().iter().enumerate() {
                let (values, grads) = geometry.eval_with_gradients(*xi);
                node_coords[dof_map[c * n_loc + i]] = mesh.combine(c, &values, &grads).0;
            }
        }
        Ok(Self {
            mesh,
            reference,
            dof_map,
            n_dofs,
            node_coords,
        })
    }

    pub fn mesh(&self) -> &Arc<ParametricMesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.reference.order()
    }

    pub fn reference(&self) -> &ReferenceTriangle {
        &self.reference
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.reference.n_nodes()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let n = self.n_local();
        &self.dof_map[cell * n..(cell + 1) * n]
    }

    /// Physical location (on the discrete surface) of each DOF.
    pub fn node_coords(&self) -> &[Vec3] {
        &self.node_coords
    }

    pub fn eval_basis(&self, cell: usize, ref_point: [f64; 2]) -> Result<BasisEval> {
        let (x, jacobian) = self.mesh.element_map(cell, ref_point);
        let (normal, area_scale) = discrete_normal_and_measure(&jacobian, cell)?;
        let map = TangentialMap::new(&jacobian, cell)?;
        let (values, ref_grads) = self.reference.eval_with_gradients(ref_point);
        let gradients = ref_grads.into_iter().map(|g| map.apply(g)).collect();
        Ok(BasisEval {
            x,
            jacobian,
            normal,
            area_scale,
            values,
            gradients,
        })
    }

    /// Value and surface gradient of the finite element function with
    /// coefficients `coeffs` at a point of `cell`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, ref_point: [f64; 2]) -> Result<(f64, Vec3)> {
        let b = self.eval_basis(cell, ref_point)?;
        let mut value = 0.0;
        let mut grad = Vec3::zeros();
        for (i, &dof) in self.cell_dofs(cell).iter().enumerate() {
            value += coeffs[dof] * b.values[i];
            grad += b.gradients[i] * coeffs[dof];
        }
        Ok((value, grad))
    }

    /// Nodal interpolant of `f` evaluated at the DOF locations.
    pub fn interpolate(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        self.node_coords.iter().map(f).collect()
    }
}

/// Geometry and space basis tables for a quadrature rule, shared by all cells.
pub struct ReferenceTables {
    pub weights: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub geometry: Vec<(Vec<f64>, Vec<[f64; 2]>)>,
}

impl ReferenceTables {
    pub fn new(mesh: &ParametricMesh, rule: &QuadratureRule) -> Self {
        Self {
            weights: rule.weights.clone(),
            points: rule.points.clone(),
            geometry: rule.points.iter().map(|p| mesh.reference().eval_with_gradients(*p)).collect(),
        }
    }

    pub fn space(&self, reference: &ReferenceTriangle) -> Vec<(Vec<f64>, Vec<[f64; 2]>)> {
        self.points.iter().map(|p| reference.eval_with_gradients(*p)).collect()
    }
}
