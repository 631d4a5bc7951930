//! Dense linear algebra: factorizations, spectra, singular values and the
//! Moore-Penrose inverse, sized for matrices up to a few thousand rows.

mod cholesky;
mod csr;
mod dense;
mod eigen;
mod householder;
mod lu;
pub mod mm;
mod svd;
mod symeig;

pub use cholesky::{cholesky, tri_solve, tri_solve_t, Cholesky, Side};
pub use csr::{CsrMatrix, SparseTriangular};
pub use dense::DenseMatrix;
pub use eigen::{eigenvalues, pseudospectral_radius, DEFAULT_ONE_TOL};
pub use lu::{lu, Lu};
pub use svd::{
    numerical_rank, pinv, pinv_truncated, singular_values, spectral_norm, svd, SvdFactors,
    DEFAULT_RANK_TOL,
};
pub use symeig::{sym_eigen, sym_eigenvalues, sym_inv_sqrt, sym_sqrt, SymEigen};

pub type Vector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| x * s).collect()
}
