//! Error norms on the discrete surface.

use serde::{Deserialize, Serialize};

use super::{check_same_mesh, DofLayout};
use crate::analysis::ExactSolution;
use crate::error::{Error, Result};
use crate::fespace::{discrete_normal_and_measure, quadrature_for, FeSpace, ReferenceTables, TangentialMap};
use crate::Vec3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `||u^e - u_h||`.
    pub e_u: f64,
    /// `||p^e - p_h||` with both shifted to zero mean on the discrete surface.
    pub e_p: f64,
    /// `||P (u^e - u_h)||` with the exact tangent projector at closest points.
    pub e_u_tan: f64,
    /// `||n . u_h||` with the exact normal.
    pub e_u_norm: f64,
    /// `||n_h . u_h||` with the discrete normal.
    pub e_u_norm_h: f64,
    /// `(||u^e - u_h||^2 + ||grad (p^e - p_h)||^2)^(1/2)`.
    pub energy: f64,
    /// Area of the discrete surface.
    pub area: f64,
    /// `int p_h` over the discrete surface.
    pub pressure_integral: f64,
}

struct PointValues {
    da: f64,
    y: Vec3,
    n_h: Vec3,
    u_h: Vec3,
    p_h: f64,
    grad_p_h: Vec3,
    /// Tangential gradient of the extended exact pressure on the element.
    grad_p_e: Vec3,
}

fn for_each_point(
    space_u: &FeSpace,
    space_p: &FeSpace,
    solution: &[f64],
    exact: &dyn ExactSolution,
    quad_degree: usize,
    mut visit: impl FnMut(&PointValues) -> Result<()>,
) -> Result<()> {
    let mesh = space_u.mesh();
    let rule = quadrature_for(quad_degree)?;
    let tables = ReferenceTables::new(mesh, &rule);
    let u_tab = tables.space(space_u.reference());
    let p_tab = tables.space(space_p.reference());
    let layout = DofLayout {
        n_u: space_u.n_dofs(),
        n_p: space_p.n_dofs(),
    };
    let surface = mesh.surface();
    let pressure = layout.pressure_part(solution);
    for cell in 0..mesh.n_cells() {
        let udofs = space_u.cell_dofs(cell);
        let pdofs = space_p.cell_dofs(cell);
        for (q, w) in tables.weights.iter().enumerate() {
            let (gv, gg) = &tables.geometry[q];
            let (x, jac) = mesh.combine(cell, gv, gg);
            let (n_h, area) = discrete_normal_and_measure(&jac, cell)?;
            let map = TangentialMap::new(&jac, cell)?;
            let mut u_h = Vec3::zeros();
            for (i, &d) in udofs.iter().enumerate() {
                let phi = u_tab[q].0[i];
                for c in 0..3 {
                    u_h[c] += phi * layout.velocity_component(solution, c)[d];
                }
            }
            let (mut p_h, mut grad_p_h) = (0.0, Vec3::zeros());
            for (a, &d) in pdofs.iter().enumerate() {
                p_h += p_tab[q].0[a] * pressure[d];
                grad_p_h += map.apply(p_tab[q].1[a]) * pressure[d];
            }
            let y = surface.closest_point(&x)?;
            // grad(p o cp)(x) = Dp(x)^T grad p(y); Dp is symmetric.
            let ambient = surface.closest_point_jacobian(&x)? * exact.pressure_gradient(&y)?;
            let grad_p_e = ambient - n_h * n_h.dot(&ambient);
            visit(&PointValues {
                da: w * area,
                y,
                n_h,
                u_h,
                p_h,
                grad_p_h,
                grad_p_e,
            })?;
        }
    }
    Ok(())
}

/// Error norms of a solved coefficient vector (layout `[u_x|u_y|u_z|p|mu]`).
pub fn assemble_error_norms(
    space_u: &FeSpace,
    space_p: &FeSpace,
    solution: &[f64],
    exact: &dyn ExactSolution,
    quad_degree: usize,
) -> Result<ErrorNorms> {
    check_same_mesh(space_u, space_p)?;
    let layout = DofLayout {
        n_u: space_u.n_dofs(),
        n_p: space_p.n_dofs(),
    };
    if solution.len() != layout.size() && solution.len() != layout.size() - 1 {
        return Err(Error::Value(format!(
            "solution vector has length {}, expected {}",
            solution.len(),
            layout.size()
        )));
    }
    let surface = *space_u.mesh().surface();

    let (mut area, mut int_p_h, mut int_p_e) = (0.0, 0.0, 0.0);
    for_each_point(space_u, space_p, solution, exact, quad_degree, |pv| {
        area += pv.da;
        int_p_h += pv.p_h * pv.da;
        int_p_e += exact.pressure(&pv.y)? * pv.da;
        Ok(())
    })?;
    let (mean_h, mean_e) = (int_p_h / area, int_p_e / area);

    let mut acc = ErrorNorms::default();
    let mut grad_err = 0.0;
    for_each_point(space_u, space_p, solution, exact, quad_degree, |pv| {
        let du = exact.velocity(&pv.y)? - pv.u_h;
        let n = surface.normal(&pv.y)?;
        let dp = (exact.pressure(&pv.y)? - mean_e) - (pv.p_h - mean_h);
        let tan = du - n * n.dot(&du);
        acc.e_u += du.norm_squared() * pv.da;
        acc.e_u_tan += tan.norm_squared() * pv.da;
        acc.e_u_norm += n.dot(&pv.u_h).powi(2) * pv.da;
        acc.e_u_norm_h += pv.n_h.dot(&pv.u_h).powi(2) * pv.da;
        acc.e_p += dp * dp * pv.da;
        grad_err += (pv.grad_p_e - pv.grad_p_h).norm_squared() * pv.da;
        Ok(())
    })?;
    Ok(ErrorNorms {
        e_u: acc.e_u.sqrt(),
        e_p: acc.e_p.sqrt(),
        e_u_tan: acc.e_u_tan.sqrt(),
        e_u_norm: acc.e_u_norm.sqrt(),
        e_u_norm_h: acc.e_u_norm_h.sqrt(),
        energy: (acc.e_u + grad_err).sqrt(),
        area,
        pressure_integral: int_p_h,
    })
}
