//! Singular value decompositions of `nalgebra` matrices, computed with `faer`.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Singular values in non-increasing order.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    to_faer(a)
        .singular_values()
        .map_err(|e| Error::InternalInvariant(format!("SVD did not converge: {e:?}")))
}

pub(crate) struct TruncatedSolve {
    pub x: DVector<f64>,
    pub max_singular: f64,
    /// Smallest singular value above the cutoff.
    pub min_kept: f64,
}

/// Least-squares solution of `a x = y` dropping singular values at or below
/// `relative_cutoff` times the largest.
pub(crate) fn truncated_solve(a: &DMatrix<f64>, y: &DVector<f64>, relative_cutoff: f64) -> Result<TruncatedSolve> {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return Ok(TruncatedSolve {
            x: DVector::zeros(cols),
            max_singular: 0.0,
            min_kept: f64::INFINITY,
        });
    }
    let svd = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::InternalInvariant(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let max_singular = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max);
    let cutoff = relative_cutoff * max_singular;
    let mut x = DVector::zeros(cols);
    let mut min_kept = f64::INFINITY;
    for k in 0..s.nrows() {
        let sigma = s[k];
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        min_kept = min_kept.min(sigma);
        let coeff = (0..a.nrows()).map(|r| u[(r, k)] * y[r]).sum::<f64>() / sigma;
        for c in 0..cols {
            x[c] += coeff * v[(c, k)];
        }
    }
    Ok(TruncatedSolve {
        x,
        max_singular,
        min_kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_overdetermined_consistent_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, 3.0, 5.0]);
        let s = truncated_solve(&a, &y, 1e-9).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-14 && (s.x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn drops_null_directions() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        let s = truncated_solve(&a, &y, 1e-9).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 1.0).abs() < 1e-14);
        assert_eq!(singular_values(&a).unwrap().iter().filter(|&&v| v > 1e-12).count(), 1);
    }
}
