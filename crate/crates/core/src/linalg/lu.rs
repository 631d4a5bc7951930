use super::{DenseMatrix, Vector};
use crate::error::{Error, Result};

/// `P A = L U` with partial pivoting; `L` unit lower and `U` upper share storage.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

pub fn lu(a: &DenseMatrix) -> Result<Lu> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("lu of {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .unwrap();
        if m[(p, k)].abs() <= f64::EPSILON * scale * n as f64 {
            return Err(Error::SingularTriangular(k));
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
        }
        let pivot = m[(k, k)];
        let pivot_row = m.row(k)[k + 1..].to_vec();
        for i in k + 1..n {
            let factor = m[(i, k)] / pivot;
            m[(i, k)] = factor;
            if factor != 0.0 {
                super::axpy(-factor, &pivot_row, &mut m.row_mut(i)[k + 1..]);
            }
        }
    }
    Ok(Lu { lu: m, perm })
}

impl Lu {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vector> {
        self.check(b.len())?;
        let n = self.dim();
        let mut x: Vector = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = super::dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = super::dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_t(&self, b: &[f64]) -> Result<Vector> {
        self.check(b.len())?;
        let n = self.dim();
        let mut y = b.to_vec();
        // Uᵀ y = b
        for i in 0..n {
            y[i] /= self.lu[(i, i)];
            let yi = y[i];
            let row = &self.lu.row(i)[i + 1..];
            for (yj, lij) in y[i + 1..].iter_mut().zip(row) {
                *yj -= lij * yi;
            }
        }
        // Lᵀ z = y
        for i in (0..n).rev() {
            let zi = y[i];
            let row = &self.lu.row(i)[..i];
            for (yj, lij) in y[..i].iter_mut().zip(row) {
                *yj -= lij * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension(format!(
                "lu solve of order {} with length {len}",
                self.dim()
            )));
        }
        Ok(())
    }
}
