use super::{dot, DenseMatrix, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

/// Factors a symmetric positive definite matrix. A non-positive pivot is
/// reported as [`Error::NotPositiveDefinite`], which doubles as the SPD test.
pub fn cholesky(a: &DenseMatrix) -> Result<Cholesky> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "cholesky of {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_symmetric(1e-12) {
        return Err(Error::InvalidArgument(
            "cholesky input is not symmetric".into(),
        ));
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / ljj;
        }
    }
    Ok(Cholesky { l })
}

impl Cholesky {
    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vector> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, 1)?;
        Ok(x)
    }

    /// Solves `A X = R` for a row-major block of right-hand sides.
    pub fn solve_matrix(&self, r: &DenseMatrix) -> Result<DenseMatrix> {
        let mut x = r.clone();
        let k = r.cols();
        self.solve_in_place(x.as_mut_slice(), k)?;
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut [f64], k: usize) -> Result<()> {
        if x.len() != self.dim() * k {
            return Err(Error::Dimension(format!(
                "cholesky solve of order {} with {} entries",
                self.dim(),
                x.len()
            )));
        }
        forward(&self.l, x, k)?;
        backward_transposed_lower(&self.l, x, k)
    }
}

/// Solves `T x = b` with `T` lower or upper triangular. Only the named
/// triangle of `T` is read.
pub fn tri_solve(t: &DenseMatrix, b: &[f64], side: Side) -> Result<Vector> {
    check_tri(t, b.len())?;
    let mut x = b.to_vec();
    match side {
        Side::Lower => forward(t, &mut x, 1)?,
        Side::Upper => backward(t, &mut x, 1)?,
    }
    Ok(x)
}

/// Solves `Tᵀ x = b` without forming the transpose.
pub fn tri_solve_t(t: &DenseMatrix, b: &[f64], side: Side) -> Result<Vector> {
    check_tri(t, b.len())?;
    let mut x = b.to_vec();
    match side {
        Side::Lower => backward_transposed_lower(t, &mut x, 1)?,
        Side::Upper => forward_transposed_upper(t, &mut x, 1)?,
    }
    Ok(x)
}

/// Multi right-hand-side variant of [`tri_solve`].
#[cfg(test)]
pub(crate) fn tri_solve_matrix(
    t: &DenseMatrix,
    r: &DenseMatrix,
    side: Side,
) -> Result<DenseMatrix> {
    check_tri(t, r.rows())?;
    let mut x = r.clone();
    let k = r.cols();
    match side {
        Side::Lower => forward(t, x.as_mut_slice(), k)?,
        Side::Upper => backward(t, x.as_mut_slice(), k)?,
    }
    Ok(x)
}

fn check_tri(t: &DenseMatrix, len: usize) -> Result<()> {
    if !t.is_square() || t.rows() != len {
        return Err(Error::Dimension(format!(
            "triangular solve with {}x{} and length {len}",
            t.rows(),
            t.cols()
        )));
    }
    Ok(())
}

fn pivot(t: &DenseMatrix, i: usize) -> Result<f64> {
    let d = t[(i, i)];
    if d == 0.0 {
        Err(Error::SingularTriangular(i))
    } else {
        Ok(d)
    }
}

// The kernels below act on `x` viewed as an n-by-k row-major block.

fn forward(l: &DenseMatrix, x: &mut [f64], k: usize) -> Result<()> {
    let n = l.rows();
    for i in 0..n {
        let d = pivot(l, i)?;
        let (done, rest) = x.split_at_mut(i * k);
        let xi = &mut rest[..k];
        for (j, &lij) in l.row(i)[..i].iter().enumerate() {
            if lij != 0.0 {
                let xj = &done[j * k..(j + 1) * k];
                for (a, &b) in xi.iter_mut().zip(xj) {
                    *a -= lij * b;
                }
            }
        }
        xi.iter_mut().for_each(|v| *v /= d);
    }
    Ok(())
}

fn backward(u: &DenseMatrix, x: &mut [f64], k: usize) -> Result<()> {
    let n = u.rows();
    for i in (0..n).rev() {
        let d = pivot(u, i)?;
        let (head, done) = x.split_at_mut((i + 1) * k);
        let xi = &mut head[i * k..];
        for (off, &uij) in u.row(i)[i + 1..].iter().enumerate() {
            if uij != 0.0 {
                let xj = &done[off * k..(off + 1) * k];
                for (a, &b) in xi.iter_mut().zip(xj) {
                    *a -= uij * b;
                }
            }
        }
        xi.iter_mut().for_each(|v| *v /= d);
    }
    Ok(())
}

// Lᵀ x = b, column-oriented so that rows of L are read contiguously.
fn backward_transposed_lower(l: &DenseMatrix, x: &mut [f64], k: usize) -> Result<()> {
    let n = l.rows();
    for i in (0..n).rev() {
        let d = pivot(l, i)?;
        let (head, tail) = x.split_at_mut(i * k);
        let xi = &mut tail[..k];
        xi.iter_mut().for_each(|v| *v /= d);
        for (j, &lij) in l.row(i)[..i].iter().enumerate() {
            if lij != 0.0 {
                let xj = &mut head[j * k..(j + 1) * k];
                for (a, &b) in xj.iter_mut().zip(xi.iter()) {
                    *a -= lij * b;
                }
            }
        }
    }
    Ok(())
}

// Uᵀ x = b, column-oriented.
fn forward_transposed_upper(u: &DenseMatrix, x: &mut [f64], k: usize) -> Result<()> {
    let n = u.rows();
    for i in 0..n {
        let d = pivot(u, i)?;
        let (head, tail) = x.split_at_mut((i + 1) * k);
        let xi = &mut head[i * k..];
        xi.iter_mut().for_each(|v| *v /= d);
        for (off, &uij) in u.row(i)[i + 1..].iter().enumerate() {
            if uij != 0.0 {
                let xj = &mut tail[off * k..(off + 1) * k];
                for (a, &b) in xj.iter_mut().zip(xi.iter()) {
                    *a -= uij * b;
                }
            }
        }
    }
    Ok(())
}
