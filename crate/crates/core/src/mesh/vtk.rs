//! Legacy ASCII VTK output of parametric meshes.
//!
//! Curved cells (`k_g >= 2`) are subdivided into four linear triangles for
//! visualization. Points are not shared between cells, so discontinuous
//! per-cell data can be written without averaging.

use std::io::{self, Write};

use super::ParametricMesh;
use crate::Vec3;

/// Sample points of a mesh and their linear sub-triangles.
#[derive(Clone, Debug)]
pub struct VtkSamples {
    /// `(cell, reference point)` of each output point.
    pub locations: Vec<(usize, [f64; 2])>,
    pub points: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

pub enum PointData<'a> {
    Scalar(&'a [f64]),
    Vector(&'a [Vec3]),
}

pub fn sample_mesh(mesh: &ParametricMesh) -> VtkSamples {
    let s = if mesh.geometry_order() == 1 { 1 } else { 2 };
    let mut lattice = Vec::new();
    let mut index = vec![vec![0usize; s + 1]; s + 1];
    for j in 0..=s {
        for i in 0..=s - j {
            index[i][j] = lattice.len();
            lattice.push([i as f64 / s as f64, j as f64 / s as f64]);
        }
    }
    let mut local_tris = Vec::new();
    for j in 0..s {
        for i in 0..s - j {
            local_tris.push([index[i][j], index[i + 1][j], index[i][j + 1]]);
            if i + j + 1 < s {
                local_tris.push([index[i + 1][j], index[i + 1][j + 1], index[i][j + 1]]);
            }
        }
    }
    let mut samples = VtkSamples {
        locations: Vec::with_capacity(mesh.n_cells() * lattice.len()),
        points: Vec::with_capacity(mesh.n_cells() * lattice.len()),
        triangles: Vec::with_capacity(mesh.n_cells() * local_tris.len()),
    };
    for cell in 0..mesh.n_cells() {
        let base = samples.points.len();
        for r in &lattice {
            samples.locations.push((cell, *r));
            samples.points.push(mesh.element_map(cell, *r).0);
        }
        for t in &local_tris {
            samples.triangles.push(t.map(|i| base + i));
        }
    }
    samples
}

pub fn write_legacy_vtk<W: Write>(
    out: &mut W,
    title: &str,
    samples: &VtkSamples,
    fields: &[(&str, PointData<'_>)],
) -> io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", samples.points.len())?;
    for p in &samples.points {
        writeln!(out, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
    }
    writeln!(out, "CELLS {} {}", samples.triangles.len(), 4 * samples.triangles.len())?;
    for t in &samples.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {}", samples.triangles.len())?;
    for _ in &samples.triangles {
        writeln!(out, "5")?;
    }
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "POINT_DATA {}", samples.points.len())?;
    for (name, data) in fields {
        let name = name.replace(char::is_whitespace, "_");
        match data {
            PointData::Scalar(values) => {
                assert_eq!(values.len(), samples.points.len(), "field {name} has the wrong length");
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for v in values.iter() {
                    writeln!(out, "{v:.17e}")?;
                }
            }
            PointData::Vector(values) => {
                assert_eq!(values.len(), samples.points.len(), "field {name} has the wrong length");
                writeln!(out, "VECTORS {name} double")?;
                for v in values.iter() {
                    writeln!(out, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
                }
            }
        }
    }
    Ok(())
}
