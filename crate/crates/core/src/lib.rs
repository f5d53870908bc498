//! Stabilized mixed finite elements for the Darcy problem on closed smooth
//! surfaces, with parametric Lagrange geometry of arbitrary order.
//!
//! The pipeline is: exact surface ([`geometry`]) → parametric triangulation
//! ([`mesh`]) → Lagrange spaces ([`fespace`]) → coupled system
//! ([`assembly`]) → linear solve ([`solver`]) → error norms and convergence
//! studies ([`analysis`]).

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod fespace;
pub mod geometry;
pub mod mesh;
pub mod solver;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat3x2 = nalgebra::Matrix3x2<f64>;
