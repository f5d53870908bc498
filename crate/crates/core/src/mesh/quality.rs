use serde::{Deserialize, Serialize};

use super::ParametricMesh;
use crate::error::Result;
use crate::fespace::quadrature::quadrature_for;
use crate::fespace::discrete_normal_and_measure;

/// Quadrature degree of the sample points used by the report.
const SAMPLE_DEGREE: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n_vertices: usize,
    pub n_cells: usize,
    pub geometry_order: usize,
    pub h: f64,
    /// max |rho| over the sample points of every cell.
    pub max_distance: f64,
    /// max |n(p(x)) - n_h(x)| over the same points.
    pub max_normal_deviation: f64,
    pub min_diameter: f64,
    pub max_diameter: f64,
    /// Smallest interior angle of the affine cells, in degrees.
    pub min_angle_deg: f64,
    pub euler_characteristic: i64,
}

pub fn mesh_quality_report(mesh: &ParametricMesh) -> Result<QualityReport> {
    let rule = quadrature_for(SAMPLE_DEGREE)?;
    let surface = mesh.surface();
    let reference = mesh.reference();
    let tables: Vec<_> = rule.points.iter().map(|p| reference.eval_with_gradients(*p)).collect();

    let mut max_distance: f64 = 0.0;
    let mut max_normal_deviation: f64 = 0.0;
    let mut min_diameter = f64::INFINITY;
    let mut max_diameter: f64 = 0.0;
    let mut min_angle_deg = f64::INFINITY;
    for cell in 0..mesh.n_cells() {
        for (values, grads) in &tables {
            let (x, jac) = mesh.combine(cell, values, grads);
            let (n_h, _) = discrete_normal_and_measure(&jac, cell)?;
            max_distance = max_distance.max(surface.signed_distance(&x)?.abs());
            let n = surface.normal(&x)?;
            max_normal_deviation = max_normal_deviation.max((n - n_h).norm());
        }
        let d = mesh.cell_diameter(cell);
        min_diameter = min_diameter.min(d);
        max_diameter = max_diameter.max(d);
        min_angle_deg = min_angle_deg.min(mesh.cell_min_angle(cell));
    }
    Ok(QualityReport {
        n_vertices: mesh.n_vertices(),
        n_cells: mesh.n_cells(),
        geometry_order: mesh.geometry_order(),
        h: mesh.h(),
        max_distance,
        max_normal_deviation,
        min_diameter,
        max_diameter,
        min_angle_deg,
        euler_characteristic: mesh.euler_characteristic(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImplicitSurface;
    use crate::mesh::{build_structured_torus, jiggle_to_unstructured, DiagonalSplit};

    fn eoc(e: &[f64], h: &[f64]) -> f64 {
        let n = e.len();
        (e[n - 2] / e[n - 1]).ln() / (h[n - 2] / h[n - 1]).ln()
    }

    fn reports(kg: usize) -> Vec<QualityReport> {
        let s = ImplicitSurface::torus(1.0, 0.5).unwrap();
        [16, 32, 64]
            .iter()
            .map(|&n| mesh_quality_report(&build_structured_torus(s, n, kg, DiagonalSplit::Alternating).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn geometry_error_rates() {
        for kg in [1, 2] {
            let r = reports(kg);
            let h: Vec<f64> = r.iter().map(|q| q.h).collect();
            let dist: Vec<f64> = r.iter().map(|q| q.max_distance).collect();
            let normal: Vec<f64> = r.iter().map(|q| q.max_normal_deviation).collect();
            let rate_d = eoc(&dist, &h);
            let rate_n = eoc(&normal, &h);
            assert!(rate_d >= kg as f64 + 0.8, "k_g={kg}: distance rate {rate_d}");
            assert!(rate_n >= kg as f64 - 0.2, "k_g={kg}: normal rate {rate_n}");
        }
    }

    #[test]
    fn quasi_uniformity() {
        let s = ImplicitSurface::torus(1.0, 0.5).unwrap();
        for n in [16, 32] {
            let m = build_structured_torus(s, n, 1, DiagonalSplit::Alternating).unwrap();
            let r = mesh_quality_report(&m).unwrap();
            assert!(r.max_diameter / r.min_diameter <= 4.0);
            let j = mesh_quality_report(&jiggle_to_unstructured(&m, 0.25, 42).unwrap()).unwrap();
            assert!(j.max_diameter / j.min_diameter <= 8.0);
        }
    }

    #[test]
    fn zero_jiggle_reports_match() {
        let s = ImplicitSurface::torus(1.0, 0.5).unwrap();
        let m = build_structured_torus(s, 16, 2, DiagonalSplit::Alternating).unwrap();
        let a = mesh_quality_report(&m).unwrap();
        let b = mesh_quality_report(&jiggle_to_unstructured(&m, 0.0, 42).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
