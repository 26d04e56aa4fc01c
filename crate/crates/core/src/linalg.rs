//! Dense kernels with a fixed, left-to-right summation order.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, which is column-major; the block
//! kernels below read contiguous column slices directly.

use nalgebra::{DMatrix, DVector};
use std::ops::Range;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm2(a: &[f64]) -> f64 {
    norm2_sq(a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `||a - b||_2^2`.
pub fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    dist2_sq(a, b).sqrt()
}

#[inline]
pub fn column(a: &DMatrix<f64>, j: usize) -> &[f64] {
    let m = a.nrows();
    &a.as_slice()[j * m..(j + 1) * m]
}

/// `A x - b`.
pub fn residual(a: &DMatrix<f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(xj, column(a, j), &mut r);
        }
    }
    r
}

/// `A x`.
pub fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(xj, column(a, j), &mut out);
        }
    }
    out
}

/// `A[:, cols]^T r`.
pub fn block_tmat_vec(a: &DMatrix<f64>, cols: Range<usize>, r: &[f64]) -> Vec<f64> {
    cols.map(|j| dot(column(a, j), r)).collect()
}

/// `A^T r`.
pub fn tmat_vec(a: &DMatrix<f64>, r: &[f64]) -> Vec<f64> {
    block_tmat_vec(a, 0..a.ncols(), r)
}

/// `out += A[:, cols] delta`.
pub fn block_mat_vec_acc(a: &DMatrix<f64>, cols: Range<usize>, delta: &[f64], out: &mut [f64]) {
    debug_assert_eq!(cols.len(), delta.len());
    for (j, &d) in cols.zip(delta) {
        if d != 0.0 {
            axpy(d, column(a, j), out);
        }
    }
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Largest singular value of `a` by power iteration on the smaller of the
/// Gram matrices `A A^T` and `A^T A`.
///
/// Stops when the relative change of the estimate drops below `rel_tol`.
pub fn spectral_norm(a: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let gram = if a.nrows() <= a.ncols() { a * a.transpose() } else { a.tr_mul(a) };
    let k = gram.nrows();
    // Deterministic, non-degenerate start vector.
    let mut v = DVector::from_fn(k, |j, _| 1.0 + (j as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..max_iter {
        let w = &gram * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        v = w / nw;
        if (next - est).abs() <= rel_tol * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}
