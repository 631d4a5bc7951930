use super::{DenseMatrix, Side};
use crate::error::{Error, Result};

/// Compressed sparse row copy of a dense matrix, used for the repeated
/// products with `W` and `B` inside the iterative solvers.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut indptr = Vec::with_capacity(a.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows: a.rows(),
            cols: a.cols(),
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.indptr[i], self.indptr[i + 1]);
            *yi = self.indices[s..e]
                .iter()
                .zip(&self.values[s..e])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    /// `y += alpha * Aᵀ x`
    pub fn matvec_t_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += alpha * self.values[k] * xi;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        self.matvec_t_acc(1.0, x, &mut y);
        y
    }
}

/// Sparse triangular factor with its diagonal stored separately.
#[derive(Debug, Clone)]
pub struct SparseTriangular {
    side: Side,
    diag: Vec<f64>,
    // Off-diagonal part only.
    off: CsrMatrix,
}

impl SparseTriangular {
    /// Reads the `side` triangle of `t`, diagonal included.
    pub fn from_dense(t: &DenseMatrix, side: Side) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::Dimension(format!(
                "triangular factor {}x{}",
                t.rows(),
                t.cols()
            )));
        }
        let diag = t.diag();
        if let Some(i) = diag.iter().position(|d| *d == 0.0) {
            return Err(Error::SingularTriangular(i));
        }
        let off = match side {
            Side::Lower => t.strict_lower(),
            Side::Upper => t.strict_upper(),
        };
        Ok(Self {
            side,
            diag,
            off: CsrMatrix::from_dense(&off),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Overwrites the n-by-k row-major block `x` with `T⁻¹ x`, or `T⁻ᵀ x`
    /// when `transposed`.
    pub fn solve_in_place(&self, x: &mut [f64], k: usize, transposed: bool) {
        let n = self.dim();
        assert_eq!(x.len(), n * k);
        let off = &self.off;
        let row = |i: usize| {
            let (s, e) = (off.indptr[i], off.indptr[i + 1]);
            off.indices[s..e]
                .iter()
                .copied()
                .zip(off.values[s..e].iter().copied())
        };
        match (self.side, transposed) {
            (Side::Lower, false) | (Side::Upper, false) => {
                let order: Box<dyn Iterator<Item = usize>> = match self.side {
                    Side::Lower => Box::new(0..n),
                    Side::Upper => Box::new((0..n).rev()),
                };
                let mut acc = vec![0.0; k];
                for i in order {
                    acc.copy_from_slice(&x[i * k..(i + 1) * k]);
                    for (j, v) in row(i) {
                        for (a, &b) in acc.iter_mut().zip(&x[j * k..(j + 1) * k]) {
                            *a -= v * b;
                        }
                    }
                    let d = self.diag[i];
                    for (dst, a) in x[i * k..(i + 1) * k].iter_mut().zip(&acc) {
                        *dst = a / d;
                    }
                }
            }
            (Side::Lower, true) | (Side::Upper, true) => {
                let order: Box<dyn Iterator<Item = usize>> = match self.side {
                    Side::Lower => Box::new((0..n).rev()),
                    Side::Upper => Box::new(0..n),
                };
                let mut xi = vec![0.0; k];
                for i in order {
                    let d = self.diag[i];
                    for (a, v) in xi.iter_mut().zip(&mut x[i * k..(i + 1) * k]) {
                        *v /= d;
                        *a = *v;
                    }
                    for (j, v) in row(i) {
                        for (a, &b) in x[j * k..(j + 1) * k].iter_mut().zip(&xi) {
                            *a -= v * b;
                        }
                    }
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64], transposed: bool) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, 1, transposed);
        x
    }
}
