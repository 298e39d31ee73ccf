//! Extreme eigenvalues of sparse symmetric matrices.
//!
//! Small matrices are densified and solved completely (Householder
//! tridiagonalization followed by implicit QR, via nalgebra). Larger ones use
//! Lanczos with full reorthogonalization: directly on `A` for the largest
//! eigenvalue and on `(A + sI)^{-1}` for the smallest, with the shift `s >= 0`
//! raised until the envelope Cholesky factorization succeeds.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CsrMatrix, EnvelopeCholesky, LinalgError};

pub const DEFAULT_DENSE_THRESHOLD: usize = 4000;
pub const LANCZOS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenExtremes {
    pub min: f64,
    pub max: f64,
}

pub fn sym_eigen_extremes(a: &CsrMatrix, dense_threshold: usize) -> Result<EigenExtremes, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    if n <= dense_threshold {
        Ok(dense_extremes(&a.to_dense()))
    } else {
        lanczos_extremes(a)
    }
}

pub fn dense_extremes(a: &DMatrix<f64>) -> EigenExtremes {
    let ev = a.clone().symmetric_eigenvalues();
    EigenExtremes {
        min: ev.iter().copied().fold(f64::INFINITY, f64::min),
        max: ev.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Spectral condition number `lambda_max / lambda_min`.
pub fn condition_number(a: &CsrMatrix) -> Result<f64, LinalgError> {
    condition_number_with(a, DEFAULT_DENSE_THRESHOLD)
}

pub fn condition_number_with(a: &CsrMatrix, dense_threshold: usize) -> Result<f64, LinalgError> {
    let e = sym_eigen_extremes(a, dense_threshold)?;
    if e.min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite {
            lambda_min: e.min,
            lambda_max: e.max,
        });
    }
    Ok(e.max / e.min)
}

struct LanczosOutcome {
    theta: f64,
    converged: bool,
}

/// Largest eigenvalue of the symmetric operator `apply`.
fn lanczos_largest(n: usize, mut apply: impl FnMut(&[f64], &mut [f64]), tol: f64) -> LanczosOutcome {
    let max_iter = n.min(600);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nrm = norm(&v);
    v.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut theta = f64::NAN;

    for k in 0..max_iter {
        apply(&basis[k], &mut w);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);

        let m = alpha.len();
        let check = m == max_iter || m.is_multiple_of(8) || b <= f64::EPSILON * a.abs().max(1e-300);
        if check {
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imax, &th) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .expect("non-empty tridiagonal");
            theta = th;
            let resid = (b * eig.eigenvectors[(m - 1, imax)]).abs();
            if resid <= tol * th.abs() || b <= f64::EPSILON * a.abs().max(1e-300) {
                return LanczosOutcome { theta, converged: true };
            }
        }
        if k + 1 == max_iter {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    LanczosOutcome {
        theta,
        converged: max_iter == n,
    }
}

fn lanczos_extremes(a: &CsrMatrix) -> Result<EigenExtremes, LinalgError> {
    let n = a.nrows();
    let top = lanczos_largest(n, |x, y| a.mul_vec_into(x, y), LANCZOS_TOL);
    let lambda_max = top.theta;

    let mut shift = 0.0;
    let chol = loop {
        match EnvelopeCholesky::factor_shifted(a, shift) {
            Ok(c) => break c,
            Err(LinalgError::FactorizationBreakdown { .. }) => {
                shift = if shift == 0.0 {
                    1e-12 * lambda_max.abs()
                } else {
                    shift * 10.0
                };
                if shift > 10.0 * lambda_max.abs() {
                    return Err(LinalgError::NoConvergence {
                        lambda_min: f64::NAN,
                        lambda_max,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    };
    let bottom = lanczos_largest(
        n,
        |x, y| {
            y.copy_from_slice(x);
            chol.solve_in_place(y);
        },
        LANCZOS_TOL,
    );
    let lambda_min = 1.0 / bottom.theta - shift;
    if top.converged && bottom.converged {
        Ok(EigenExtremes {
            min: lambda_min,
            max: lambda_max,
        })
    } else {
        Err(LinalgError::NoConvergence { lambda_min, lambda_max })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let e = sym_eigen_extremes(&CsrMatrix::identity(10), 4000).unwrap();
        assert_eq!((e.min, e.max), (1.0, 1.0));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]));
        let e = sym_eigen_extremes(&CsrMatrix::from_dense(&d), 4000).unwrap();
        assert!((e.min - 1.0).abs() < 1e-14 && (e.max - 5.0).abs() < 1e-14);
    }

    #[test]
    fn condition_numbers() {
        assert!((condition_number(&CsrMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e6]));
        assert!((condition_number(&CsrMatrix::from_dense(&d)).unwrap() - 1e6).abs() < 1e-6);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 2.0]));
        assert!(matches!(
            condition_number(&CsrMatrix::from_dense(&d)),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = 2.0 + shift;
            if i + 1 < n {
                d[(i, i + 1)] = -1.0;
                d[(i + 1, i)] = -1.0;
            }
        }
        CsrMatrix::from_dense(&d)
    }

    #[test]
    fn lanczos_matches_closed_form() {
        let n = 200;
        let a = laplacian_1d(n, 0.0);
        let e = sym_eigen_extremes(&a, 10).unwrap();
        let lam = |k: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((e.min - lam(1)).abs() < 1e-8 * lam(1));
        assert!((e.max - lam(n)).abs() < 1e-8 * lam(n));
    }

    #[test]
    fn lanczos_handles_indefinite() {
        let n = 150;
        let a = laplacian_1d(n, -0.01);
        let dense = dense_extremes(&a.to_dense());
        let e = sym_eigen_extremes(&a, 10).unwrap();
        assert!(dense.min < 0.0);
        assert!((e.min - dense.min).abs() < 1e-8 * dense.max);
        assert!((e.max - dense.max).abs() < 1e-8 * dense.max);
    }
}
