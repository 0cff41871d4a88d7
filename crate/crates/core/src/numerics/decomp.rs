use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen, QR};
#[allow(unused_imports)] // shadowed when std is linked
use num_traits::Float;
use rand::Rng;

use super::matrix::axpy;
use super::{dot, gaussian_matrix, norm, Matrix};
use crate::error::{Error, Result};

/// Leading singular triplets of a matrix (left vectors only).
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// `rows x k`, orthonormal columns ordered by descending singular value.
    pub left: Matrix,
    /// Non-negative, non-increasing.
    pub singular_values: Vec<f64>,
}

/// Top-`k` left singular vectors and singular values.
///
/// Computed from the eigendecomposition of the smaller Gram matrix (`MᵀM` or
/// `MMᵀ`), which suits the tall-thin trajectory matrices this crate handles.
/// Singular values below `sqrt(n·eps)·σ_max` are reported as exactly zero and
/// their left vectors are completed to an orthonormal set. Signs are fixed so
/// the largest-magnitude entry of each vector is positive; the columns for
/// `k` are therefore a prefix of the columns for `k + 1`.
pub fn top_k_svd(m: &Matrix, k: usize) -> Result<TruncatedSvd> {
    let max = m.rows().min(m.cols());
    if k > max {
        return Err(Error::RankTooLarge { requested: k, max });
    }
    let (rows, cols) = (m.rows(), m.cols());
    if k == 0 {
        return Ok(TruncatedSvd { left: Matrix::zeros(rows, 0), singular_values: Vec::new() });
    }

    let tall = rows >= cols;
    let gram = if tall { gram_columns(m) } else { gram_rows(m) };
    let n = gram.rows();
    let (values, vectors) = symmetric_eigen(&gram)?;
    let lmax = values.iter().fold(0.0f64, |a, &l| a.max(l));
    let smax = lmax.max(0.0).sqrt();
    let cutoff = ((n as f64) * f64::EPSILON).sqrt() * smax;

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut sigmas = Vec::with_capacity(k);
    for idx in (0..n).rev().take(k) {
        let sigma = values[idx].max(0.0).sqrt();
        if sigma <= cutoff || sigma == 0.0 {
            sigmas.push(0.0);
            columns.push(vec![0.0; rows]);
            continue;
        }
        let v = vectors.column(idx);
        let u = if tall {
            let mut u = m.mul_vec(&v);
            u.iter_mut().for_each(|x| *x /= sigma);
            u
        } else {
            v
        };
        sigmas.push(sigma);
        columns.push(u);
    }

    orthonormalize_in_order(&mut columns, rows)?;
    for c in columns.iter_mut() {
        let pivot = c.iter().fold(0.0f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(TruncatedSvd { left: Matrix::from_columns(rows, &columns)?, singular_values: sigmas })
}

/// `MᵀM`
fn gram_columns(m: &Matrix) -> Matrix {
    let c = m.cols();
    let mut g = Matrix::zeros(c, c);
    for i in 0..m.rows() {
        let r = m.row(i);
        for (a, &ra) in r.iter().enumerate() {
            if ra != 0.0 {
                axpy(ra, &r[a..], &mut g.row_mut(a)[a..]);
            }
        }
    }
    for a in 0..c {
        for b in 0..a {
            let x = g.get(b, a);
            g.set(a, b, x);
        }
    }
    g
}

/// `MMᵀ`
fn gram_rows(m: &Matrix) -> Matrix {
    let r = m.rows();
    let mut g = Matrix::zeros(r, r);
    for a in 0..r {
        for b in a..r {
            let x = dot(m.row(a), m.row(b));
            g.set(a, b, x);
            g.set(b, a, x);
        }
    }
    g
}

/// Modified Gram-Schmidt with reorthogonalization. Zero columns are replaced
/// by the first standard basis vector that is not already spanned.
fn orthonormalize_in_order(columns: &mut [Vec<f64>], rows: usize) -> Result<()> {
    let mut next_fill = 0usize;
    for j in 0..columns.len() {
        let (done, rest) = columns.split_at_mut(j);
        let col = &mut rest[0];
        let mut filled = norm(col) == 0.0;
        loop {
            if filled {
                if next_fill >= rows {
                    return Err(Error::Decomposition("cannot complete orthonormal basis".into()));
                }
                col.iter_mut().for_each(|x| *x = 0.0);
                col[next_fill] = 1.0;
                next_fill += 1;
            }
            let before = norm(col);
            for _ in 0..2 {
                for q in done.iter() {
                    let c = dot(q, col);
                    axpy(-c, q, col);
                }
            }
            let after = norm(col);
            if after > 0.5 * before && after > 0.0 {
                col.iter_mut().for_each(|x| *x /= after);
                break;
            }
            if !filled && after > 1e-8 * before {
                // numerically dependent but salvageable
                col.iter_mut().for_each(|x| *x /= after);
                break;
            }
            filled = true;
        }
    }
    Ok(())
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if s.rows() != s.cols() {
        return Err(Error::NotSquare { rows: s.rows(), cols: s.cols() });
    }
    let n = s.rows();
    let scale = s.as_slice().iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            asymmetry = asymmetry.max((s.get(i, j) - s.get(j, i)).abs());
        }
    }
    if asymmetry > 1e-10 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
pub fn symmetric_eigen(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_symmetric(s)?;
    let eig = SymmetricEigen::try_new(s.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(core::cmp::Ordering::Equal)
    });
    let n = s.rows();
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (c, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        for i in 0..n {
            vectors.set(i, c, eig.eigenvectors[(i, src)]);
        }
    }
    Ok((values, vectors))
}

/// Minimum-norm least-squares solution of `s x = b` for symmetric `s`.
///
/// Eigenvalues below `n * eps * max|lambda|` are treated as zero, so singular
/// (positive semi-definite) systems return the pseudo-inverse solution.
pub fn solve_symmetric(s: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_symmetric(s)?;
    let n = s.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::try_new(s.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let cutoff = (n as f64) * f64::EPSILON * lmax;
    let rhs = DVector::from_column_slice(b);
    let coeffs = eig.eigenvectors.tr_mul(&rhs);
    let mut x = DVector::<f64>::zeros(n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff {
            x.axpy(coeffs[k] / lambda, &eig.eigenvectors.column(k), 1.0);
        }
    }
    Ok(x.iter().copied().collect())
}

/// `‖b − M M⁺ b‖`: distance from `b` to the column space of `m`.
pub fn least_squares_residual(m: &Matrix, b: &[f64]) -> Result<f64> {
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch { expected: m.rows(), found: b.len() });
    }
    let mut residual = b.to_vec();
    if m.cols() == 0 {
        return Ok(norm(&residual));
    }
    let max = m.rows().min(m.cols());
    let svd = top_k_svd(m, max)?;
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s > 0.0 {
            let q = svd.left.column(j);
            let c = dot(&q, &residual);
            axpy(-c, &q, &mut residual);
        }
    }
    Ok(norm(&residual))
}

/// `rows x cols` matrix with orthonormal columns spanning a uniformly random
/// subspace (QR of a Gaussian matrix with the sign convention `diag(R) > 0`).
pub fn orthonormal_basis<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<Matrix> {
    if cols > rows {
        return Err(Error::RankTooLarge { requested: cols, max: rows });
    }
    if cols == 0 {
        return Ok(Matrix::zeros(rows, 0));
    }
    let g: DMatrix<f64> = gaussian_matrix(rng, rows, cols).to_nalgebra();
    let qr = QR::new(g);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(Matrix::from_nalgebra(&q))
}
