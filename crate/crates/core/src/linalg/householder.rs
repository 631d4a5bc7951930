//! Householder reflectors shared by the SVD, tridiagonal and Hessenberg reductions.

use rayon::prelude::*;

use super::{axpy, dot, DenseMatrix};

const PAR_THRESHOLD: usize = 1 << 16;

/// Reflector `I - 2 v vᵀ / vᵀv` mapping `x` to `alpha e₁`. `None` when `x = 0`.
pub(crate) fn householder(x: &[f64]) -> (Option<Vec<f64>>, f64) {
    let norm = x.iter().fold(0.0f64, |acc, &v| acc.hypot(v));
    if norm == 0.0 {
        return (None, 0.0);
    }
    let alpha = if x[0] > 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    if v.iter().all(|&c| c == 0.0) {
        return (None, alpha);
    }
    (Some(v), alpha)
}

/// Applies the reflector built from `v` to rows `r0..r0+len(v)` of `a`,
/// touching columns `c0..`.
pub(crate) fn apply_left(a: &mut DenseMatrix, v: &[f64], r0: usize, c0: usize) {
    let cols = a.cols();
    if c0 >= cols {
        return;
    }
    let vv = dot(v, v);
    let width = cols - c0;
    let mut w = vec![0.0; width];
    for (off, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            axpy(vi, &a.row(r0 + off)[c0..], &mut w);
        }
    }
    let tau = 2.0 / vv;
    let data = &mut a.as_mut_slice()[r0 * cols..(r0 + v.len()) * cols];
    let update = |(off, row): (usize, &mut [f64])| {
        let c = tau * v[off];
        if c != 0.0 {
            axpy(-c, &w, &mut row[c0..]);
        }
    };
    if v.len() * width > PAR_THRESHOLD {
        data.par_chunks_mut(cols).enumerate().for_each(update);
    } else {
        data.chunks_mut(cols).enumerate().for_each(update);
    }
}

/// Applies the reflector built from `u` from the right to rows `r0..` of `a`,
/// acting on columns `c0..c0+len(u)`.
pub(crate) fn apply_right(a: &mut DenseMatrix, u: &[f64], r0: usize, c0: usize) {
    let cols = a.cols();
    let rows = a.rows();
    if r0 >= rows {
        return;
    }
    let tau = 2.0 / dot(u, u);
    let data = &mut a.as_mut_slice()[r0 * cols..];
    let update = |row: &mut [f64]| {
        let seg = &mut row[c0..c0 + u.len()];
        let s = tau * dot(seg, u);
        if s != 0.0 {
            axpy(-s, u, seg);
        }
    };
    if (rows - r0) * u.len() > PAR_THRESHOLD {
        data.par_chunks_mut(cols).for_each(update);
    } else {
        data.chunks_mut(cols).for_each(update);
    }
}
