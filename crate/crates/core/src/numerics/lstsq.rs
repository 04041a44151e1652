use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub condition: f64,
}

/// Solves `min ‖X β − y‖` for a row-major design matrix by SVD.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquaresFit> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 || y.len() != m {
        return Err(Error::InsufficientData("fewer samples than fit parameters"));
    }
    let x = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let rhs = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::IllConditioned("design matrix is rank deficient"));
    }
    let beta = svd.solve(&rhs, 0.0).map_err(|_| Error::IllConditioned("SVD solve failed"))?;
    let residual = &x * &beta - rhs;
    let residual_norm = residual.norm();
    Ok(LeastSquaresFit {
        coefficients: beta.iter().copied().collect(),
        residual_norm,
        rms: residual_norm / (m as f64).sqrt(),
        condition: smax / smin,
    })
}
