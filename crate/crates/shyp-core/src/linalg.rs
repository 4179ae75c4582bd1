//! Dense linear-algebra helpers built on LAPACK via `ndarray-linalg`.
//!
//! Everything here works with the relative rank cutoff used throughout the
//! crate: a singular value counts as nonzero iff `sigma > tol * sigma_max`.
//! All kernel/basis routines return matrices with orthonormal columns and
//! handle empty shapes explicitly, since LAPACK rejects 0-sized inputs.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::error::Result;

pub type Mat = Array2<f64>;
pub type CMat = Array2<Complex64>;

/// Default relative tolerance for rank decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

pub fn fro_norm(m: &Mat) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fro_norm_c(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Full SVD `m = U diag(s) Vt` with square `U` (r x r) and `Vt` (c x c).
pub fn svd_full(m: &Mat) -> Result<(Mat, Array1<f64>, Mat)> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok((Mat::eye(rows), Array1::zeros(0), Mat::eye(cols)));
    }
    let (u, sv, vt) = m.svd(true, true)?;
    Ok((u.expect("svd requested U"), sv, vt.expect("svd requested Vt")))
}

pub fn singular_values(m: &Mat) -> Result<Array1<f64>> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Array1::zeros(0));
    }
    let (_, sv, _) = m.svd(false, false)?;
    Ok(sv)
}

pub fn rank_from_svals(svals: &Array1<f64>, tol: f64) -> usize {
    match svals.iter().cloned().fold(None::<f64>, |a, b| {
        Some(a.map_or(b, |x| x.max(b)))
    }) {
        Some(smax) if smax > 0.0 => svals.iter().filter(|&&s| s > tol * smax).count(),
        _ => 0,
    }
}

pub fn rank(m: &Mat, tol: f64) -> Result<usize> {
    Ok(rank_from_svals(&singular_values(m)?, tol))
}

/// Orthonormal basis (columns) of the right kernel `{ v : m v = 0 }`.
pub fn right_kernel(m: &Mat, tol: f64) -> Result<Mat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Mat::eye(cols));
    }
    let (_, sv, vt) = svd_full(m)?;
    let r = rank_from_svals(&sv, tol);
    Ok(vt.slice(s![r.., ..]).t().to_owned())
}

/// Right kernel with an absolute singular-value cutoff, for matrices
/// whose own norm can degenerate below the scale of the surrounding
/// problem.
pub fn right_kernel_abs(m: &Mat, cutoff: f64) -> Result<Mat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Mat::eye(cols));
    }
    let (_, sv, vt) = svd_full(m)?;
    let r = sv.iter().filter(|&&s| s > cutoff).count();
    Ok(vt.slice(s![r.., ..]).t().to_owned())
}

/// Left kernel with an absolute singular-value cutoff.
pub fn left_kernel_abs(m: &Mat, cutoff: f64) -> Result<Mat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Mat::eye(rows));
    }
    let (u, sv, _) = svd_full(m)?;
    let r = sv.iter().filter(|&&s| s > cutoff).count();
    Ok(u.slice(s![.., r..]).to_owned())
}

/// Orthonormal basis (columns) of the left kernel `{ x : x^T m = 0 }`.
pub fn left_kernel(m: &Mat, tol: f64) -> Result<Mat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Mat::eye(rows));
    }
    let (u, sv, _) = svd_full(m)?;
    let r = rank_from_svals(&sv, tol);
    Ok(u.slice(s![.., r..]).to_owned())
}

/// Orthonormal basis (columns) of the column space of `m`.
pub fn column_space(m: &Mat, tol: f64) -> Result<Mat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Mat::zeros((rows, 0)));
    }
    let (u, sv, _) = svd_full(m)?;
    let r = rank_from_svals(&sv, tol);
    Ok(u.slice(s![.., ..r]).to_owned())
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(m: &Mat, tol: f64) -> Result<Mat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(Mat::zeros((cols, rows)));
    }
    let (u, sv, vt) = svd_full(m)?;
    let r = rank_from_svals(&sv, tol);
    let mut out = Mat::zeros((cols, rows));
    for i in 0..r {
        let ui = u.column(i);
        let vi = vt.row(i);
        let inv = 1.0 / sv[i];
        for (a, &va) in vi.iter().enumerate() {
            for (b, &ub) in ui.iter().enumerate() {
                out[(a, b)] += va * inv * ub;
            }
        }
    }
    Ok(out)
}

/// Eigenvalues and right eigenvectors of a general real square matrix.
pub fn eig(m: &Mat) -> Result<(Array1<Complex64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Array1::zeros(0), CMat::zeros((0, 0))));
    }
    let (vals, vecs) = m.eig()?;
    Ok((vals, vecs))
}

/// Cosines of the principal angles between the column spaces of two
/// matrices with orthonormal columns, sorted descending.
pub fn principal_cosines(qa: &Mat, qb: &Mat) -> Result<Vec<f64>> {
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Ok(Vec::new());
    }
    let prod = qa.t().dot(qb);
    let sv = singular_values(&prod)?;
    Ok(sv.iter().map(|&c| c.clamp(-1.0, 1.0)).collect())
}

/// Orthonormal basis (columns) of the right kernel of a complex matrix,
/// with an absolute singular-value cutoff. Useful when the meaningful
/// scale is that of a surrounding problem rather than of `m` itself
/// (e.g. kernels of `B - lambda I` for a nearly zero `B`).
pub fn right_kernel_c_abs(m: &CMat, cutoff: f64) -> Result<CMat> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(CMat::eye(cols));
    }
    let (_, sv, vt) = m.svd(true, true)?;
    let vt = vt.expect("svd requested Vt");
    let r = sv.iter().filter(|&&s| s > cutoff).count();
    let mut out = CMat::zeros((cols, cols - r));
    for (j, i) in (r..cols).enumerate() {
        for col in 0..cols {
            out[(col, j)] = vt[(i, col)].conj();
        }
    }
    Ok(out)
}

/// 2-norm condition number of a complex matrix (for eigenvector bases).
pub fn cond2_c(m: &CMat) -> Result<f64> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(1.0);
    }
    let (_, sv, _) = m.svd(false, false)?;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

/// Component of the columns of `v` orthogonal to the column space of `q`
/// (`q` orthonormal), re-orthonormalized. Returns an orthonormal basis of
/// the difference space.
pub fn orth_complement_within(v: &Mat, q: &Mat, tol: f64) -> Result<Mat> {
    if v.ncols() == 0 {
        return Ok(v.clone());
    }
    let resid = if q.ncols() == 0 {
        v.clone()
    } else {
        v - &q.dot(&q.t().dot(v))
    };
    column_space(&resid, tol)
}
