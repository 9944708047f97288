//! Small dense helpers: rank-checked least squares and matrix diagnostics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this are treated as rank loss.
pub const RANK_TOL: f64 = 1e-9;

/// Solves `min |A x − b|` for a full-column-rank `A` via SVD.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let svd = a.clone().svd(true, true);
    let sigma_min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(sigma_min > RANK_TOL) || a.ncols() > a.nrows() {
        return Err(Error::RankDeficient { sigma_min });
    }
    svd.solve(b, 0.0)
        .map_err(|_| Error::RankDeficient { sigma_min })
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    a.singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Inverse of a square matrix, rejecting near-singular input.
pub fn checked_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sigma_min = smallest_singular_value(a);
    if !(sigma_min > RANK_TOL) {
        return Err(Error::Singular { sigma_min });
    }
    a.clone().try_inverse().ok_or(Error::Singular { sigma_min })
}

/// 2-norm condition number.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Max-entry norm of `QᵀQ − I`.
pub fn orthogonality_residual(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_overdetermined_consistent_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = DVector::from_column_slice(&[2.0, -1.0]);
        let b = &a * &x;
        let got = least_squares(&a, &b).unwrap();
        assert!((got - x).amax() < 1e-14);
    }

    #[test]
    fn rejects_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            least_squares(&a, &b),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn inverse_and_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let inv = checked_inverse(&a).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((condition_number(&a) - 4.0).abs() < 1e-12);
        assert!(checked_inverse(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn orthogonality() {
        let (s, c) = 0.3f64.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!(orthogonality_residual(&r) < 1e-15);
        assert!(orthogonality_residual(&(r * 2.0)) > 1.0);
    }
}
