//! Jacobi-preconditioned conjugate gradients and a small dense symmetric
//! factorization used as an oracle.

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest system accepted by [`dense_solve`].
pub const DENSE_LIMIT: usize = 2000;

/// Relative pivot threshold of [`dense_solve`].
pub const SINGULAR_PIVOT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Inverse diagonal; non-positive diagonal entries fall back to one.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPreconditioner {
    inverse_diagonal: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(matrix: &SparseSymMatrix) -> Self {
        let inverse_diagonal = matrix
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Self { inverse_diagonal }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inverse_diagonal) {
            *z = r * d;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` to `|A x - b| <= tol |b|`; `max_iter` defaults to
/// `10 * dim`.
pub fn cg_solve(
    matrix: &SparseSymMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(Vec<f64>, SolveReport)> {
    let precond = JacobiPreconditioner::new(matrix);
    cg_solve_preconditioned(matrix, &precond, rhs, tol, max_iter)
}

pub fn cg_solve_preconditioned(
    matrix: &SparseSymMatrix,
    precond: &JacobiPreconditioner,
    rhs: &[f64],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = matrix.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let max_iter = max_iter.unwrap_or(10 * n.max(1));
    let rhs_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if rhs_norm == 0.0 {
        let report = SolveReport {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
        return Ok((x, report));
    }

    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut relative = 1.0;

    while iterations < max_iter {
        matrix.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        relative = norm(&r) / rhs_norm;
        if relative <= tol {
            // Confirm against the true residual; restart from it if the
            // recurrence has drifted.
            matrix.mul_vec_into(&x, &mut ap);
            for i in 0..n {
                r[i] = rhs[i] - ap[i];
            }
            relative = norm(&r) / rhs_norm;
            if relative <= tol {
                break;
            }
            precond.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precond.apply(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let report = SolveReport {
        iterations,
        relative_residual: relative,
        converged: relative <= tol,
    };
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::NoConvergence(report))
    }
}

/// Solves the three component systems sharing one matrix and preconditioner,
/// concurrently. Results do not depend on scheduling.
pub fn solve_components(
    matrix: &SparseSymMatrix,
    rhs: &[Vec<f64>; 3],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<([Vec<f64>; 3], [SolveReport; 3])> {
    let precond = JacobiPreconditioner::new(matrix);
    let results: Vec<Result<(Vec<f64>, SolveReport)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = rhs
            .iter()
            .map(|b| scope.spawn(|| cg_solve_preconditioned(matrix, &precond, b, tol, max_iter)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut solutions = Vec::with_capacity(3);
    let mut reports = Vec::with_capacity(3);
    for result in results {
        let (x, report) = result?;
        solutions.push(x);
        reports.push(report);
    }
    let reports = [reports[0], reports[1], reports[2]];
    let solutions: [Vec<f64>; 3] = solutions.try_into().expect("three components");
    Ok((solutions, reports))
}

/// Dense `L D L^T` solve for small systems.
///
/// Fails with [`Error::SingularMatrix`] when a pivot falls below
/// `1e-14 * max|diag|`.
pub fn dense_solve(matrix: &SparseSymMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    if n > DENSE_LIMIT {
        return Err(Error::NotApplicable("dense solve is limited to 2000 unknowns"));
    }
    let max_diag = matrix.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let threshold = SINGULAR_PIVOT * max_diag;

    // Row-major lower triangle of the unit factor.
    let mut l = vec![0.0; n * n];
    for (i, j, v) in matrix.iter_lower() {
        l[i * n + j] = v;
    }
    let mut d = vec![0.0; n];
    let mut scaled = vec![0.0; n];
    for j in 0..n {
        let (row_j, rest) = l.split_at_mut((j + 1) * n);
        let row_j = &row_j[j * n..];
        for k in 0..j {
            scaled[k] = row_j[k] * d[k];
        }
        let pivot = row_j[j] - dot(&row_j[..j], &scaled[..j]);
        if pivot.abs() <= threshold {
            return Err(Error::SingularMatrix { row: j, pivot });
        }
        d[j] = pivot;
        for i in j + 1..n {
            let row_i = &mut rest[(i - j - 1) * n..(i - j) * n];
            row_i[j] = (row_i[j] - dot(&row_i[..j], &scaled[..j])) / pivot;
        }
    }

    let mut x = rhs.to_vec();
    for i in 0..n {
        x[i] -= dot(&l[i * n..i * n + i], &x[..i]);
    }
    for i in 0..n {
        x[i] /= d[i];
    }
    for i in (0..n).rev() {
        let xi = x[i];
        for k in 0..i {
            x[k] -= l[i * n + k] * xi;
        }
    }
    Ok(x)
}
