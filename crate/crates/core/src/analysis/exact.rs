//! Manufactured solutions with closed-form velocity and pressure.

use std::sync::Arc;

use crate::assembly::ProblemData;
use crate::error::{Error, Result};
use crate::geometry::{Coordinate, ImplicitSurface, SurfaceKind};
use crate::Vec3;

/// A solution `(u, p)` of the surface Darcy problem, with the data `f`, `g`
/// that produce it. All methods take points on the exact surface.
pub trait ExactSolution: Send + Sync {
    fn surface(&self) -> &ImplicitSurface;
    fn velocity(&self, y: &Vec3) -> Result<Vec3>;
    fn pressure(&self, y: &Vec3) -> Result<f64>;
    /// Ambient gradient of a smooth extension of the pressure; only its
    /// tangential part is used.
    fn pressure_gradient(&self, y: &Vec3) -> Result<Vec3>;
    fn source(&self, y: &Vec3) -> Result<f64>;
    /// `g = u + grad_Gamma p`.
    fn forcing(&self, y: &Vec3) -> Result<Vec3>;
}

pub fn problem_data(exact: Arc<dyn ExactSolution>) -> ProblemData {
    let e = exact.clone();
    ProblemData::new(Arc::new(move |y| exact.source(y)), Arc::new(move |y| e.forcing(y)))
}

/// Divergence-free tangential flow on a torus with pressure `p = z`:
/// `u = (2xz, -2yz, 2(x^2 - y^2)(R - d)/d)`, `d = sqrt(x^2 + y^2)`, `f = 0`.
#[derive(Clone, Copy, Debug)]
pub struct TorusBenchmark {
    surface: ImplicitSurface,
    major_radius: f64,
}

pub fn torus_exact_solution(major_radius: f64, minor_radius: f64) -> Result<TorusBenchmark> {
    Ok(TorusBenchmark {
        surface: ImplicitSurface::torus(major_radius, minor_radius)?,
        major_radius,
    })
}

impl TorusBenchmark {
    pub fn for_surface(surface: ImplicitSurface) -> Result<Self> {
        match surface.kind {
            SurfaceKind::Torus { major_radius, .. } => Ok(Self { surface, major_radius }),
            SurfaceKind::Sphere { .. } => Err(Error::Config("torus benchmark needs a torus surface".into())),
        }
    }
}

impl ExactSolution for TorusBenchmark {
    fn surface(&self) -> &ImplicitSurface {
        &self.surface
    }

    fn velocity(&self, y: &Vec3) -> Result<Vec3> {
        let d = (y.x * y.x + y.y * y.y).sqrt();
        if d < self.surface.tolerance {
            return Err(Error::Domain("torus velocity is undefined on the z-axis".into()));
        }
        Ok(Vec3::new(
            2.0 * y.x * y.z,
            -2.0 * y.y * y.z,
            2.0 * (y.x * y.x - y.y * y.y) * (self.major_radius - d) / d,
        ))
    }

    fn pressure(&self, y: &Vec3) -> Result<f64> {
        Ok(y.z)
    }

    fn pressure_gradient(&self, _y: &Vec3) -> Result<Vec3> {
        Ok(Vec3::z())
    }

    fn source(&self, _y: &Vec3) -> Result<f64> {
        Ok(0.0)
    }

    fn forcing(&self, y: &Vec3) -> Result<Vec3> {
        Ok(self.velocity(y)? + self.surface.surface_gradient_of_scalar(&Coordinate(2), y)?)
    }
}

/// Rigid rotation about the z-axis on a sphere with `p = z`; used for smoke
/// tests on a second topology.
#[derive(Clone, Copy, Debug)]
pub struct SphereRotation {
    surface: ImplicitSurface,
}

impl SphereRotation {
    pub fn new(radius: f64) -> Result<Self> {
        Ok(Self {
            surface: ImplicitSurface::sphere(radius)?,
        })
    }
}

impl ExactSolution for SphereRotation {
    fn surface(&self) -> &ImplicitSurface {
        &self.surface
    }

    fn velocity(&self, y: &Vec3) -> Result<Vec3> {
        Ok(Vec3::new(-y.y, y.x, 0.0))
    }

    fn pressure(&self, y: &Vec3) -> Result<f64> {
        Ok(y.z)
    }

    fn pressure_gradient(&self, _y: &Vec3) -> Result<Vec3> {
        Ok(Vec3::z())
    }

    fn source(&self, _y: &Vec3) -> Result<f64> {
        Ok(0.0)
    }

    fn forcing(&self, y: &Vec3) -> Result<Vec3> {
        Ok(self.velocity(y)? + self.surface.surface_gradient_of_scalar(&Coordinate(2), y)?)
    }
}
