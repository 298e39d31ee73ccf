//! Linear algebra for the assembled systems: sparse storage, the direct solver,
//! basis function removal and eigenvalue diagnostics.

mod cholesky;
mod eigen;
mod removal;
mod sparse;

use thiserror::Error;

pub use cholesky::EnvelopeCholesky;
pub use eigen::{
    condition_number, condition_number_with, dense_extremes, sym_eigen_extremes, EigenExtremes,
    DEFAULT_DENSE_THRESHOLD, LANCZOS_TOL,
};
pub use removal::{basis_removal, restrict_system, ReducedSystem, RemovalReport};
pub use sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Cholesky breakdown at pivot {pivot} (value {value:e})")]
    FactorizationBreakdown { pivot: usize, value: f64 },
    #[error("matrix is not positive definite (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})")]
    NotPositiveDefinite { lambda_min: f64, lambda_max: f64 },
    #[error("eigenvalue iteration did not converge (best estimates {lambda_min:e}, {lambda_max:e})")]
    NoConvergence { lambda_min: f64, lambda_max: f64 },
    #[error("empty system")]
    Empty,
}

/// Direct solve of a symmetric positive definite system, with one step of
/// iterative refinement.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let chol = EnvelopeCholesky::factor(a)?;
    let mut x = chol.solve(b);
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    chol.solve_in_place(&mut r);
    x.iter_mut().zip(&r).for_each(|(xi, ri)| *xi += ri);
    Ok(x)
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
