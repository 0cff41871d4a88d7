//! Dense linear algebra and randomness kernel.
//!
//! All reals are `f64`. Matrices are row-major. Decompositions are delegated
//! to `nalgebra`; the [`Matrix`] type here is the crate's exchange format.

mod decomp;
mod matrix;
mod rng;

pub use decomp::{
    least_squares_residual, orthonormal_basis, solve_symmetric, symmetric_eigen, top_k_svd, TruncatedSvd,
};
pub(crate) use matrix::axpy;
pub use matrix::{dot, norm, Matrix};
pub use rng::{stream_id, RngStream, StreamRng};

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Matrix of i.i.d. standard normal entries, drawn row by row.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec_unchecked(rows, cols, data)
}

/// Vector of i.i.d. standard normal entries.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> alloc::vec::Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Rescales every column to unit Euclidean norm.
pub fn normalize_columns(m: &Matrix) -> Result<Matrix> {
    let norms = m.column_norms();
    if let Some(column) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::ZeroColumn { column });
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        for (x, n) in out.row_mut(i).iter_mut().zip(&norms) {
            *x /= n;
        }
    }
    Ok(out)
}
