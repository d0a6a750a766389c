//! Jacobi-preconditioned conjugate gradients for symmetric positive
//! (semi-)definite operators, with optional restriction to a node subset and
//! in-iteration projection onto mass-weighted zero-mean vectors.

use super::{Field, SparseOperator};
use crate::error::SolveError;

/// Options for [`solve_spsd`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveOptions {
    /// Relative residual target `||A x - b|| / ||b||`. Defaults to `1e-10`.
    pub tol: Option<f64>,
    /// Defaults to `20 sqrt(n) + 1000` with `n` the number of active unknowns.
    pub max_iter: Option<usize>,
    /// Quadrature weights defining the mean; when set, constants on the active
    /// set are treated as the kernel and removed from every iterate.
    pub mean_zero: Option<Vec<f64>>,
    /// Active unknowns; entries outside stay zero.
    pub subspace: Option<Vec<bool>>,
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol: Some(tol), ..Self::default() }
    }
}

/// Iteration count and achieved relative residual of a successful solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

pub const DEFAULT_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_mean(x: &mut [f64], weights: &[f64], active: &[bool], total: f64) {
    let mean = x.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    for (v, &on) in x.iter_mut().zip(active) {
        if on {
            *v -= mean;
        }
    }
}

/// Solves `A x = b` on the active subspace.
pub fn solve_spsd(a: &SparseOperator, b: &Field, opts: &SolveOptions) -> Result<(Field, SolveStats), SolveError> {
    let n = a.dim();
    if b.len() != n {
        return Err(SolveError::Dimension { operator: n, vector: b.len() });
    }
    let active: Vec<bool> = opts.subspace.clone().unwrap_or_else(|| vec![true; n]);
    let n_active = active.iter().filter(|&&on| on).count();
    let tol = opts.tol.unwrap_or(DEFAULT_TOL);
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| (20.0 * (n_active as f64).sqrt()) as usize + 1000);

    let rhs: Vec<f64> = b.values.iter().zip(&active).map(|(v, &on)| if on { *v } else { 0.0 }).collect();

    let weights = opts.mean_zero.as_ref().map(|w| {
        let w: Vec<f64> = w.iter().zip(&active).map(|(v, &on)| if on { *v } else { 0.0 }).collect();
        let total: f64 = w.iter().sum();
        (w, total)
    });
    if weights.is_some() {
        let sum: f64 = rhs.iter().sum();
        let scale: f64 = rhs.iter().map(|v| v.abs()).sum();
        if scale > 0.0 && sum.abs() > tol * scale {
            return Err(SolveError::Incompatible { defect: sum.abs() / scale });
        }
    }

    let b_norm = norm(&rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((Field::from(x), SolveStats { iterations: 0, residual: 0.0 }));
    }

    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .zip(&active)
        .map(|(&d, &on)| if on && d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let precondition = |r: &[f64], z: &mut [f64]| {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&inv_diag) {
            *zi = ri * di;
        }
    };

    let mut r = rhs.clone();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = 1.0;

    for it in 0..max_iter {
        a.apply_into(&p, &mut ap);
        for (v, &on) in ap.iter_mut().zip(&active) {
            if !on {
                *v = 0.0;
            }
        }
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(SolveError::Breakdown { iteration: it, curvature });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some((w, total)) = &weights {
            project_mean(&mut x, w, &active, *total);
        }
        residual = norm(&r) / b_norm;
        if !residual.is_finite() {
            return Err(SolveError::NotConverged { iterations: it + 1, residual });
        }
        if residual <= tol {
            // confirm against the true residual
            let mut true_r = a.apply(&x);
            for i in 0..n {
                true_r[i] = if active[i] { rhs[i] - true_r[i] } else { 0.0 };
            }
            let true_res = norm(&true_r) / b_norm;
            if true_res <= tol {
                return Ok((Field::from(x), SolveStats { iterations: it + 1, residual: true_res }));
            }
            r = true_r;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NotConverged { iterations: max_iter, residual })
}
