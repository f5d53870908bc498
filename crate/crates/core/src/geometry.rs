//! Exact surface descriptions: signed distance, closest-point map, normal,
//! tangent projector and curvature tensor for the torus and the sphere.
//!
//! All maps use closed forms. The torus is
//! `(R - sqrt(x^2 + y^2))^2 + z^2 = r^2` with the exterior normal pointing
//! away from the core circle, so the signed distance is positive outside the
//! tube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SurfaceKind {
    Torus { major_radius: f64, minor_radius: f64 },
    Sphere { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSurface {
    pub kind: SurfaceKind,
    /// Projection threshold used for on-surface checks and degeneracy guards.
    pub tolerance: f64,
}

/// A scalar function on R^3 with its ambient gradient.
pub trait ScalarField: Sync {
    fn value(&self, x: &Vec3) -> f64;
    fn gradient(&self, x: &Vec3) -> Vec3;
}

/// The coordinate function `x -> x[axis]`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl ScalarField for Coordinate {
    fn value(&self, x: &Vec3) -> f64 {
        x[self.0]
    }

    fn gradient(&self, _x: &Vec3) -> Vec3 {
        let mut g = Vec3::zeros();
        g[self.0] = 1.0;
        g
    }
}

impl ImplicitSurface {
    pub fn torus(major_radius: f64, minor_radius: f64) -> Result<Self> {
        if !(minor_radius > 0.0 && minor_radius < major_radius) {
            return Err(Error::Config(format!(
                "torus radii must satisfy 0 < r < R, got R={major_radius}, r={minor_radius}"
            )));
        }
        Ok(Self {
            kind: SurfaceKind::Torus {
                major_radius,
                minor_radius,
            },
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self {
            kind: SurfaceKind::Sphere { radius },
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Width of the tubular neighborhood on which the closest-point map is
    /// single valued.
    pub fn reach(&self) -> f64 {
        match self.kind {
            SurfaceKind::Torus { minor_radius, .. } => minor_radius,
            SurfaceKind::Sphere { radius } => radius,
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match self.kind {
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => 4.0 * PI * PI * major_radius * minor_radius,
            SurfaceKind::Sphere { radius } => 4.0 * PI * radius * radius,
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        match self.kind {
            SurfaceKind::Torus { .. } => 0,
            SurfaceKind::Sphere { .. } => 2,
        }
    }

    /// Radial decomposition shared by the torus formulas: the nearest point
    /// `c` on the core circle, the in-plane unit direction `e`, the distance
    /// `d` to the z-axis and the offset `w = x - c`.
    fn torus_frame(&self, x: &Vec3, major_radius: f64) -> Result<(Vec3, Vec3, f64, Vec3)> {
        let d = (x.x * x.x + x.y * x.y).sqrt();
        if d < self.tolerance {
            return Err(Error::Domain(format!(
                "point ({}, {}, {}) lies on the torus axis",
                x.x, x.y, x.z
            )));
        }
        let e = Vec3::new(x.x / d, x.y / d, 0.0);
        let c = e * major_radius;
        Ok((c, e, d, x - c))
    }

    fn sphere_radius_vector(&self, x: &Vec3) -> Result<f64> {
        let len = x.norm();
        if len < self.tolerance {
            return Err(Error::Domain("point lies at the sphere center".into()));
        }
        Ok(len)
    }

    pub fn signed_distance(&self, x: &Vec3) -> Result<f64> {
        match self.kind {
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let (_, _, _, w) = self.torus_frame(x, major_radius)?;
                Ok(w.norm() - minor_radius)
            }
            SurfaceKind::Sphere { radius } => Ok(self.sphere_radius_vector(x)? - radius),
        }
    }

    pub fn closest_point(&self, x: &Vec3) -> Result<Vec3> {
        match self.kind {
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let (c, _, _, w) = self.torus_frame(x, major_radius)?;
                let len = w.norm();
                if len < self.tolerance {
                    return Err(Error::Numerical("point lies on the torus core circle".into()));
                }
                Ok(c + w * (minor_radius / len))
            }
            SurfaceKind::Sphere { radius } => {
                let len = self.sphere_radius_vector(x)?;
                Ok(x * (radius / len))
            }
        }
    }

    /// Exterior unit normal `n = grad rho`. Valid anywhere in the tubular
    /// neighborhood, where it equals the normal at the closest point.
    pub fn normal(&self, x: &Vec3) -> Result<Vec3> {
        let w = match self.kind {
            SurfaceKind::Torus { major_radius, .. } => self.torus_frame(x, major_radius)?.3,
            SurfaceKind::Sphere { .. } => {
                self.sphere_radius_vector(x)?;
                *x
            }
        };
        let len = w.norm();
        if len < self.tolerance {
            return Err(Error::Numerical("normal is undefined on the core set".into()));
        }
        Ok(w / len)
    }

    /// `P = I - n n^T`.
    pub fn tangent_projector(&self, x: &Vec3) -> Result<Mat3> {
        let n = self.normal(x)?;
        Ok(Mat3::identity() - n * n.transpose())
    }

    /// Hessian of the signed distance. Diagnostics only.
    pub fn curvature_tensor(&self, x: &Vec3) -> Result<Mat3> {
        let n = self.normal(x)?;
        let proj = Mat3::identity() - n * n.transpose();
        match self.kind {
            SurfaceKind::Torus { major_radius, .. } => {
                let (_, e, d, w) = self.torus_frame(x, major_radius)?;
                // The toroidal direction; the derivative of the core-circle
                // point is (R/d) t t^T, and t is orthogonal to n.
                let t = Vec3::new(-e.y, e.x, 0.0);
                Ok((proj - t * t.transpose() * (major_radius / d)) / w.norm())
            }
            SurfaceKind::Sphere { .. } => Ok(proj / x.norm()),
        }
    }

    /// Mean curvature (trace of the curvature tensor).
    pub fn mean_curvature(&self, x: &Vec3) -> Result<f64> {
        Ok(self.curvature_tensor(x)?.trace())
    }

    /// Derivative of the closest-point map, `Dp = P - rho * kappa` (symmetric).
    pub fn closest_point_jacobian(&self, x: &Vec3) -> Result<Mat3> {
        let rho = self.signed_distance(x)?;
        Ok(self.tangent_projector(x)? - self.curvature_tensor(x)? * rho)
    }

    /// Tangential gradient of the extension `field o p` at `x`:
    /// `P(x) * Dp(x)^T * grad field(p(x))`. On the surface this reduces to
    /// `P grad field`.
    pub fn surface_gradient_of_scalar(&self, field: &dyn ScalarField, x: &Vec3) -> Result<Vec3> {
        let p = self.closest_point(x)?;
        let dp = self.closest_point_jacobian(x)?;
        let proj = self.tangent_projector(x)?;
        Ok(proj * (dp.transpose() * field.gradient(&p)))
    }

    /// Point on the torus for parameter angles (theta around the z-axis, phi
    /// around the core circle). `None` for the sphere.
    pub fn torus_point(&self, theta: f64, phi: f64) -> Option<Vec3> {
        match self.kind {
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let ring = major_radius + minor_radius * phi.cos();
                Some(Vec3::new(ring * theta.cos(), ring * theta.sin(), minor_radius * phi.sin()))
            }
            SurfaceKind::Sphere { .. } => None,
        }
    }
}
