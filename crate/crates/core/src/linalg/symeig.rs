use super::householder::householder;
use super::{axpy, dot, DenseMatrix};
use crate::error::{Error, Result};

const MAX_QL_SWEEPS: usize = 60;

/// `A = Q diag(λ) Qᵀ` with eigenvalues ascending; `q` holds eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub q: DenseMatrix,
}

impl SymEigen {
    /// `Q diag(f(λ)) Qᵀ`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let qt = self.q.transpose();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let row = out.row_mut(i);
            for (k, &lam) in self.values.iter().enumerate() {
                let c = self.q[(i, k)] * f(lam);
                if c != 0.0 {
                    axpy(c, qt.row(k), row);
                }
            }
        }
        symmetrize(&mut out);
        out
    }
}

fn symmetrize(a: &mut DenseMatrix) {
    let n = a.rows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "symmetric eigenproblem on {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if !a.is_symmetric(1e-10) {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    Ok(())
}

pub fn sym_eigen(a: &DenseMatrix) -> Result<SymEigen> {
    check_symmetric(a)?;
    let (values, qt) = tridiagonal_ql(a, true)?;
    Ok(SymEigen {
        values,
        q: qt.unwrap().transpose(),
    })
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    Ok(tridiagonal_ql(a, false)?.0)
}

/// Symmetric `R` with `R A R = I`, i.e. `A^{-1/2}`.
pub fn sym_inv_sqrt(a: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eigen(a)?;
    let lo = eig.values[0];
    if lo <= 0.0 || lo.is_nan() {
        return Err(Error::NotSpd(lo));
    }
    Ok(eig.map(|l| 1.0 / l.sqrt()))
}

/// Symmetric square root of an SPD matrix.
pub fn sym_sqrt(a: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eigen(a)?;
    let lo = eig.values[0];
    if lo <= 0.0 || lo.is_nan() {
        return Err(Error::NotSpd(lo));
    }
    Ok(eig.map(f64::sqrt))
}

fn tridiagonal_ql(a: &DenseMatrix, vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix>)> {
    let n = a.rows();
    let mut w = a.clone();
    let mut d = vec![0.0; n];
    // e[i] couples d[i] and d[i+1].
    let mut e = vec![0.0; n];
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n.saturating_sub(1) {
        let x = w.row(k)[k + 1..].to_vec();
        let (v, alpha) = if x.len() > 1 {
            householder(&x)
        } else {
            (None, x[0])
        };
        d[k] = w[(k, k)];
        e[k] = alpha;
        if let Some(v) = &v {
            // A22 <- H A22 H with H = I - tau v vᵀ as a symmetric rank-2 update.
            let tau = 2.0 / dot(v, v);
            let off = k + 1;
            let len = v.len();
            let mut p = vec![0.0; len];
            for (i, pi) in p.iter_mut().enumerate() {
                *pi = tau * dot(&w.row(off + i)[off..], v);
            }
            let beta = 0.5 * tau * dot(v, &p);
            let wv: Vec<f64> = p.iter().zip(v).map(|(pi, vi)| pi - beta * vi).collect();
            for i in 0..len {
                let row = &mut w.row_mut(off + i)[off..];
                axpy(-v[i], &wv, row);
                axpy(-wv[i], v, row);
            }
        }
        reflectors.push(v.unwrap_or_default());
    }
    d[n - 1] = w[(n - 1, n - 1)];
    drop(w);

    let mut zt = if vectors {
        let mut q = DenseMatrix::identity(n);
        for k in (0..reflectors.len()).rev() {
            let v = &reflectors[k];
            if v.is_empty() {
                continue;
            }
            let tau = 2.0 / dot(v, v);
            let off = k + 1;
            let mut acc = vec![0.0; n - off];
            for (i, &vi) in v.iter().enumerate() {
                axpy(vi, &q.row(off + i)[off..], &mut acc);
            }
            for (i, &vi) in v.iter().enumerate() {
                axpy(-tau * vi, &acc, &mut q.row_mut(off + i)[off..]);
            }
        }
        Some(q.transpose())
    } else {
        None
    };

    implicit_ql(&mut d, &mut e, zt.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let zt = zt.map(|z| {
        let mut out = DenseMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(z.row(src));
        }
        out
    });
    Ok((values, zt))
}

fn implicit_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut DenseMatrix>) -> Result<()> {
    let n = d.len();
    // Absolute floor so clusters at zero still deflate.
    let floor = f64::EPSILON * d.iter().chain(e.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence { n });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let cols = z.cols();
                    let (head, tail) = z.as_mut_slice().split_at_mut((i + 1) * cols);
                    let zi = &mut head[i * cols..];
                    let zi1 = &mut tail[..cols];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
