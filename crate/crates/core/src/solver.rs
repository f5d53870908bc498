//! Linear solvers for the assembled system.
//!
//! The default is restarted GMRES with right Jacobi preconditioning on the
//! velocity/pressure unknowns (rows with a zero diagonal, i.e. the mean
//! multiplier, are left unscaled). Two direct methods serve as oracles: a
//! dense partial-pivoting LU for small systems and a sparse LU for larger ones.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{CsrMatrix, LinearSystem};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    #[value(name = "gmres")]
    KrylovGmres,
    #[value(name = "dense-lu")]
    DenseLuFallback,
    #[value(name = "sparse-lu")]
    SparseLu,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::KrylovGmres,
            rel_tol: 1e-10,
            max_iters: 10_000,
            restart: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::Config(format!("rel_tol must lie in (0, 1e-4], got {}", self.rel_tol)));
        }
        if self.restart < 10 {
            return Err(Error::Config(format!("restart must be at least 10, got {}", self.restart)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Largest system the dense LU will factor.
pub const DENSE_LIMIT: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: SolverMethod,
    pub iterations: usize,
    /// `||b - Ax|| / ||b||` recomputed from the returned solution.
    pub relative_residual: f64,
    pub seconds: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(matrix: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = matrix.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

pub fn solve(system: &LinearSystem, config: &SolverConfig) -> Result<(Vec<f64>, SolveStats)> {
    solve_matrix(&system.matrix, &system.rhs, config)
}

pub fn solve_matrix(matrix: &CsrMatrix, rhs: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveStats)> {
    config.validate()?;
    if matrix.nrows() != matrix.ncols() || matrix.nrows() != rhs.len() {
        return Err(Error::Value("system must be square and match the right-hand side".into()));
    }
    let start = Instant::now();
    let (x, iterations) = match config.method {
        SolverMethod::KrylovGmres => gmres(matrix, rhs, config)?,
        SolverMethod::DenseLuFallback => (dense_lu_solve(matrix, rhs)?, 1),
        SolverMethod::SparseLu => (sparse_lu_solve(matrix, rhs)?, 1),
    };
    let stats = SolveStats {
        method: config.method,
        iterations,
        relative_residual: relative_residual(matrix, &x, rhs),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((x, stats))
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations, right
/// preconditioned by the inverse diagonal. Initial guess zero.
fn gmres(a: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let scale: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let m = config.restart.min(n).max(1);
    let tol = config.rel_tol * b_norm;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut hess = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let mut residual = vec![0.0; n];

    loop {
        a.matvec_into(&x, &mut residual);
        for (r, bi) in residual.iter_mut().zip(b) {
            *r = bi - *r;
        }
        let beta = norm(&residual);
        if beta <= tol {
            return Ok((x, total));
        }
        if total >= config.max_iters {
            return Err(Error::Convergence {
                iterations: total,
                residual: beta / b_norm,
            });
        }
        basis.clear();
        basis.push(residual.iter().map(|r| r / beta).collect());
        g.fill(0.0);
        g[0] = beta;

        let mut k_used = 0;
        for k in 0..m {
            for ((zi, vi), si) in z.iter_mut().zip(&basis[k]).zip(&scale) {
                *zi = vi * si;
            }
            a.matvec_into(&z, &mut w);
            for (j, v) in basis.iter().enumerate() {
                let h = dot(&w, v);
                hess[j][k] = h;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
            let h_next = norm(&w);
            hess[k + 1][k] = h_next;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                return Err(Error::Numerical("GMRES breakdown: zero Hessenberg column".into()));
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= tol || total >= config.max_iters || h_next == 0.0 {
                break;
            }
            basis.push(w.iter().map(|wi| wi / h_next).collect());
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        z.fill(0.0);
        for (yj, v) in y.iter().zip(&basis) {
            for (zi, vi) in z.iter_mut().zip(v) {
                *zi += yj * vi;
            }
        }
        for ((xi, zi), si) in x.iter_mut().zip(&z).zip(&scale) {
            *xi += zi * si;
        }
    }
}

/// Dense LU with partial pivoting.
pub fn dense_lu_solve(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if n > DENSE_LIMIT {
        return Err(Error::Config(format!("dense LU is limited to {DENSE_LIMIT} unknowns, got {n}")));
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        let (cols, vals) = matrix.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            a[i * n + j] = *v;
        }
    }
    let mut x = rhs.to_vec();
    let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = max_abs * n as f64 * f64::EPSILON;
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot <= threshold {
            return Err(Error::SingularSystem(format!("zero pivot in column {k}")));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let (head, tail) = a.split_at_mut((k + 1) * n);
        let row_k = &head[k * n..];
        let akk = row_k[k];
        for (ri, row) in tail.chunks_mut(n).enumerate() {
            let l = row[k] / akk;
            if l != 0.0 {
                row[k] = l;
                for j in k + 1..n {
                    row[j] -= l * row_k[j];
                }
                x[k + 1 + ri] -= l * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (x[k] - s) / a[k * n + k];
    }
    Ok(x)
}

/// Sparse LU (fill-reducing ordering, partial pivoting).
pub fn sparse_lu_solve(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    use faer::sparse::{SparseColMat, Triplet};

    let n = rhs.len();
    let mut triplets = Vec::with_capacity(matrix.nnz());
    for i in 0..n {
        let (cols, vals) = matrix.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            triplets.push(Triplet::new(i, j, *v));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Numerical(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?;
    let b = faer::Col::<f64>::from_fn(n, |i| rhs[i]);
    let x = lu.solve(&b);
    let out: Vec<f64> = (0..n).map(|i| x[i]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("sparse LU produced non-finite values".into()));
    }
    Ok(out)
}
