//! Quadrature on the reference triangle (area 1/2).
//!
//! Rule selection by requested degree:
//!
//! | degree | rule                                   | points |
//! |--------|----------------------------------------|--------|
//! | 0, 1   | centroid                               | 1      |
//! | 2      | symmetric interior 3-point             | 3      |
//! | 3, 4   | symmetric 6-point (Strang-Fix)         | 6      |
//! | 5      | symmetric 7-point (Radon)              | 7      |
//! | 6..=14 | collapsed Gauss-Legendre product       | n^2, n = ceil((d+2)/2) |
//!
//! All weights are positive and all points are interior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Appends the three points of the orbit `(a, a, 1 - 2a)` with weight `w`.
fn push_orbit(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    points.extend([[a, a], [b, a], [a, b]]);
    weights.extend([w; 3]);
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess for the i-th root on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn collapsed_rule(degree: usize) -> QuadratureRule {
    let n = (degree + 3) / 2;
    let (x, w) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            points.push([*u, (1.0 - u) * v]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadratureRule {
        degree,
        points,
        weights,
    }
}

/// A rule exact for all polynomials of total degree `degree` on the reference triangle.
pub fn quadrature_for(degree: usize) -> Result<QuadratureRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match degree {
        0 | 1 => {
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(0.5);
        }
        2 => push_orbit(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 6.0),
        3 | 4 => {
            push_orbit(
                &mut points,
                &mut weights,
                0.445_948_490_915_964_886_318_329_253_883,
                0.5 * 0.223_381_589_678_011_465_695_007_008_433,
            );
            push_orbit(
                &mut points,
                &mut weights,
                0.091_576_213_509_770_743_459_571_463_402_2,
                0.5 * 0.109_951_743_655_321_867_638_326_324_900,
            );
        }
        5 => {
            let s15 = 15f64.sqrt();
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(9.0 / 80.0);
            push_orbit(&mut points, &mut weights, (6.0 - s15) / 21.0, (155.0 - s15) / 2400.0);
            push_orbit(&mut points, &mut weights, (6.0 + s15) / 21.0, (155.0 + s15) / 2400.0);
        }
        6..=MAX_DEGREE => return Ok(collapsed_rule(degree)),
        _ => {
            return Err(Error::Config(format!(
                "no triangle quadrature rule for degree {degree} (max {MAX_DEGREE})"
            )))
        }
    }
    Ok(QuadratureRule {
        degree: degree.max(1),
        points,
        weights,
    })
}
