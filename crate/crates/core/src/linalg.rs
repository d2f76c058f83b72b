use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative singular-value threshold below which a design is treated as rank deficient.
const RANK_RTOL: f64 = 1e-10;

/// Least squares `min ‖y - Xb‖` via SVD, refusing rank-deficient designs.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, response has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::Collinearity(format!(
            "{} observations for {} regressors",
            x.nrows(),
            x.ncols()
        )));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_RTOL * smax {
        return Err(Error::Collinearity(format!(
            "regressor matrix is singular (condition {:.3e})",
            smax / smin
        )));
    }
    svd.solve(y, 0.0).map_err(|e| Error::Collinearity(e.to_string()))
}

pub(crate) fn least_squares_vec(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let sol = least_squares(x, &DMatrix::from_column_slice(y.len(), 1, y.as_slice()))?;
    Ok(sol.column(0).into_owned())
}

/// Numerical rank using singular values above `tol` (relative to the largest).
pub(crate) fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * smax).count()
}

/// Natural log of the determinant of a symmetric positive definite matrix.
pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Collinearity("covariance matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let b = least_squares_vec(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_design_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        assert!(matches!(least_squares_vec(&x, &y), Err(Error::Collinearity(_))));
    }

    #[test]
    fn rank_and_logdet() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert_eq!(numerical_rank(&m, 1e-8), 2);
        assert!((log_det_spd(&m).unwrap() - 6f64.ln()).abs() < 1e-12);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 2), 1e-8), 0);
    }
}
