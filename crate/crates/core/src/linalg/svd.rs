//! Golub-Kahan-Reinsch singular value decomposition.
//!
//! Householder bidiagonalization followed by implicit-shift QR sweeps on the
//! bidiagonal. The orthogonal factors are kept transposed during the sweeps
//! so that every Givens rotation touches two contiguous rows.

use super::householder::{apply_left, apply_right, householder};
use super::{axpy, DenseMatrix};
use crate::error::{Error, Result};

/// Singular values at or below `DEFAULT_RANK_TOL * σ₁` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(σ) Vᵀ` with `k = min(rows, cols)` singular triplets.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// rows × k, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// cols × k, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(m, n);
        let vt = self.v.transpose();
        for i in 0..m {
            let row = out.row_mut(i);
            for (k, &s) in self.singular_values.iter().enumerate() {
                let c = self.u[(i, k)] * s;
                if c != 0.0 {
                    axpy(c, vt.row(k), row);
                }
            }
        }
        out
    }

    /// Number of singular values strictly above `rank_tol * σ₁`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        count_above(&self.singular_values, rank_tol)
    }
}

fn count_above(sv: &[f64], rank_tol: f64) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().filter(|&&s| s > rank_tol * s1).count(),
        _ => 0,
    }
}

pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a.rows() >= a.cols() {
        let (sv, ut, vt) = golub_kahan(a, true)?;
        Ok(SvdFactors {
            u: ut.unwrap().transpose(),
            singular_values: sv,
            v: vt.unwrap().transpose(),
        })
    } else {
        let (sv, ut, vt) = golub_kahan(&a.transpose(), true)?;
        Ok(SvdFactors {
            u: vt.unwrap().transpose(),
            singular_values: sv,
            v: ut.unwrap().transpose(),
        })
    }
}

/// Singular values only, nonincreasing. Skips the orthogonal factors.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (sv, _, _) = if a.rows() >= a.cols() {
        golub_kahan(a, false)?
    } else {
        golub_kahan(&a.transpose(), false)?
    };
    Ok(sv)
}

/// Moore-Penrose inverse with singular values `σᵢ ≤ rank_tol·σ₁` treated as zero.
pub fn pinv(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank_tol {rank_tol} outside (0, 1)"
        )));
    }
    let f = svd(a)?;
    let r = f.rank(rank_tol);
    Ok(pinv_from_factors(&f, r))
}

/// Moore-Penrose inverse of the best rank-`rank` approximation of `a`.
pub fn pinv_truncated(a: &DenseMatrix, rank: usize) -> Result<DenseMatrix> {
    let f = svd(a)?;
    let r = rank.min(f.rank(f64::EPSILON));
    Ok(pinv_from_factors(&f, r))
}

pub(crate) fn pinv_from_factors(f: &SvdFactors, r: usize) -> DenseMatrix {
    let (m, n) = (f.u.rows(), f.v.rows());
    let mut out = DenseMatrix::zeros(n, m);
    let ut = f.u.transpose();
    for j in 0..n {
        let row = out.row_mut(j);
        for k in 0..r {
            let c = f.v[(j, k)] / f.singular_values[k];
            if c != 0.0 {
                axpy(c, ut.row(k), row);
            }
        }
    }
    out
}

pub fn numerical_rank(a: &DenseMatrix, rank_tol: f64) -> Result<usize> {
    Ok(count_above(&singular_values(a)?, rank_tol))
}

/// ‖A‖₂ = σ₁.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Core routine for `rows >= cols`. Returns σ sorted nonincreasing and, when
/// requested, `Uᵀ` (cols × rows) and `Vᵀ` (cols × cols).
#[allow(clippy::type_complexity)]
fn golub_kahan(
    a: &DenseMatrix,
    vectors: bool,
) -> Result<(Vec<f64>, Option<DenseMatrix>, Option<DenseMatrix>)> {
    let (m, n) = (a.rows(), a.cols());
    debug_assert!(m >= n);
    let mut work = a.clone();
    let mut d = vec![0.0; n];
    // e[i] couples d[i-1] and d[i]; e[0] is always zero.
    let mut e = vec![0.0; n];
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        // Left reflector zeroes work[k+1.., k].
        let x: Vec<f64> = (k..m).map(|i| work[(i, k)]).collect();
        let (v, alpha) = householder(&x);
        d[k] = alpha;
        if let Some(v) = &v {
            apply_left(&mut work, v, k, k + 1);
        }
        left.push(v.unwrap_or_default());

        // Right reflector zeroes work[k, k+2..].
        if k + 1 < n {
            let y = work.row(k)[k + 1..].to_vec();
            let (u, beta) = householder(&y);
            e[k + 1] = beta;
            if let Some(u) = &u {
                apply_right(&mut work, u, k + 1, k + 1);
            }
            right.push(u.unwrap_or_default());
        }
    }
    drop(work);

    let (mut ut, mut vt) = if vectors {
        // U = H_0 … H_{n-1} [I; 0], accumulated backwards on rows k..m.
        let mut u = DenseMatrix::zeros(m, n);
        for i in 0..n {
            u[(i, i)] = 1.0;
        }
        for k in (0..n).rev() {
            if !left[k].is_empty() {
                apply_left(&mut u, &left[k], k, k);
            }
        }
        let mut v = DenseMatrix::identity(n);
        for k in (0..n.saturating_sub(1)).rev() {
            if !right[k].is_empty() {
                apply_left(&mut v, &right[k], k + 1, k + 1);
            }
        }
        (Some(u.transpose()), Some(v.transpose()))
    } else {
        (None, None)
    };

    diagonalize(&mut d, &mut e, ut.as_mut(), vt.as_mut(), m, n)?;

    // Sort nonincreasing, permuting the factor rows alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let sv: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let permute = |f: Option<DenseMatrix>| {
        f.map(|f| {
            let mut out = DenseMatrix::zeros(f.rows(), f.cols());
            for (dst, &src) in order.iter().enumerate() {
                out.row_mut(dst).copy_from_slice(f.row(src));
            }
            out
        })
    };
    Ok((sv, permute(ut), permute(vt)))
}

#[inline]
fn rotate_rows(f: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    // row_i <- c row_i + s row_j ; row_j <- c row_j - s row_i
    debug_assert!(i < j);
    let cols = f.cols();
    let (head, tail) = f.as_mut_slice().split_at_mut(j * cols);
    let ri = &mut head[i * cols..(i + 1) * cols];
    let rj = &mut tail[..cols];
    for (x, z) in ri.iter_mut().zip(rj.iter_mut()) {
        let (a, b) = (*x, *z);
        *x = a * c + b * s;
        *z = b * c - a * s;
    }
}

/// Implicit-shift QR on the bidiagonal (d, e). Rotations are mirrored onto
/// the rows of `ut` and `vt`.
fn diagonalize(
    d: &mut [f64],
    e: &mut [f64],
    mut ut: Option<&mut DenseMatrix>,
    mut vt: Option<&mut DenseMatrix>,
    m: usize,
    n: usize,
) -> Result<()> {
    let anorm = d
        .iter()
        .zip(e.iter())
        .fold(0.0f64, |acc, (a, b)| acc.max(a.abs() + b.abs()));
    let negligible = |x: f64| x.abs() + anorm == anorm;

    for k in (0..n).rev() {
        let mut sweeps = 0;
        loop {
            // Find the top `l` of the unreduced block ending at k.
            let mut l = k;
            let mut cancel = true;
            loop {
                if l == 0 || negligible(e[l]) {
                    cancel = false;
                    break;
                }
                if negligible(d[l - 1]) {
                    break;
                }
                l -= 1;
            }
            if cancel {
                // d[l-1] is zero: chase e[l] out through rows l..=k.
                let nm = l - 1;
                let (mut c, mut s) = (0.0, 1.0);
                for i in l..=k {
                    let f = s * e[i];
                    e[i] *= c;
                    if negligible(f) {
                        break;
                    }
                    let g = d[i];
                    let h = f.hypot(g);
                    d[i] = h;
                    c = g / h;
                    s = -f / h;
                    if let Some(ut) = ut.as_deref_mut() {
                        rotate_rows(ut, nm, i, c, s);
                    }
                }
            }
            let z = d[k];
            if l == k {
                if z < 0.0 {
                    d[k] = -z;
                    if let Some(vt) = vt.as_deref_mut() {
                        vt.row_mut(k).iter_mut().for_each(|x| *x = -*x);
                    }
                }
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::SvdNoConvergence { rows: m, cols: n });
            }

            // Wilkinson-style shift from the trailing 2x2.
            let mut x = d[l];
            let nm = k - 1;
            let mut y = d[nm];
            let mut g = e[nm];
            let mut h = e[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + g.copysign(f))) - h)) / x;

            let (mut c, mut s) = (1.0, 1.0);
            for j in l..=nm {
                let i = j + 1;
                g = e[i];
                y = d[i];
                h = s * g;
                g *= c;
                let mut zz = f.hypot(h);
                e[j] = zz;
                c = f / zz;
                s = h / zz;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                if let Some(vt) = vt.as_deref_mut() {
                    rotate_rows(vt, j, i, c, s);
                }
                zz = f.hypot(h);
                d[j] = zz;
                if zz != 0.0 {
                    c = f / zz;
                    s = h / zz;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                if let Some(ut) = ut.as_deref_mut() {
                    rotate_rows(ut, j, i, c, s);
                }
            }
            e[l] = 0.0;
            e[k] = f;
            d[k] = x;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn orthonormal_columns(q: &DenseMatrix, tol: f64) -> bool {
        let g = q.transpose().matmul(q).unwrap();
        g.sub(&DenseMatrix::identity(g.rows())).unwrap().max_abs() < tol
    }

    #[test]
    fn identity_and_diagonal() {
        let f = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.singular_values, vec![1.0, 1.0, 1.0]);
        assert!(
            f.reconstruct()
                .sub(&DenseMatrix::identity(3))
                .unwrap()
                .max_abs()
                < 1e-15
        );

        let f = svd(&DenseMatrix::from_diag(&[3.0, -2.0])).unwrap();
        assert!((f.singular_values[0] - 3.0).abs() < 1e-15);
        assert!((f.singular_values[1] - 2.0).abs() < 1e-15);
        assert!(
            f.reconstruct()
                .sub(&DenseMatrix::from_diag(&[3.0, -2.0]))
                .unwrap()
                .max_abs()
                < 1e-14
        );
    }

    #[test]
    fn rank_five_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(20, 5, &mut rng)
            .matmul(&random(5, 12, &mut rng))
            .unwrap();
        let f = svd(&a).unwrap();
        let s1 = f.singular_values[0];
        assert_eq!(
            f.singular_values.iter().filter(|&&s| s > 1e-8 * s1).count(),
            5
        );
        assert!(f.reconstruct().sub(&a).unwrap().max_abs() <= 1e-10 * (1.0 + s1));
        assert_eq!(numerical_rank(&a, DEFAULT_RANK_TOL).unwrap(), 5);
    }

    #[test]
    fn wide_and_tall_factors_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(r, c) in &[(7, 3), (3, 7), (9, 9), (1, 4), (4, 1)] {
            let a = random(r, c, &mut rng);
            let f = svd(&a).unwrap();
            assert_eq!(f.u.rows(), r);
            assert_eq!(f.v.rows(), c);
            assert!(orthonormal_columns(&f.u, 1e-13), "{r}x{c}");
            assert!(orthonormal_columns(&f.v, 1e-13), "{r}x{c}");
            assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let s1 = f.singular_values[0];
            assert!(f.reconstruct().sub(&a).unwrap().max_abs() <= 1e-12 * (1.0 + s1));
            let vals = singular_values(&a).unwrap();
            for (p, q) in vals.iter().zip(&f.singular_values) {
                assert!((p - q).abs() < 1e-12 * (1.0 + s1));
            }
        }
    }

    #[test]
    fn pinv_examples() {
        assert_eq!(
            pinv(&DenseMatrix::identity(4), 1e-12).unwrap(),
            DenseMatrix::identity(4)
        );
        let ones = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let p = pinv(&ones, 1e-12).unwrap();
        assert!(
            p.sub(&DenseMatrix::from_rows(&[[0.25, 0.25], [0.25, 0.25]]))
                .unwrap()
                .max_abs()
                < 1e-15
        );
        let z = pinv(&DenseMatrix::zeros(3, 5), 1e-12).unwrap();
        assert_eq!((z.rows(), z.cols()), (5, 3));
        assert_eq!(z.max_abs(), 0.0);
        assert!(pinv(&ones, 0.0).is_err());
    }

    #[test]
    fn norms_and_ranks() {
        assert_eq!(spectral_norm(&DenseMatrix::identity(5)).unwrap(), 1.0);
        let ones = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!((spectral_norm(&ones).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 2)).unwrap(), 0.0);
        assert_eq!(
            numerical_rank(&DenseMatrix::identity(3), DEFAULT_RANK_TOL).unwrap(),
            3
        );
        assert_eq!(
            numerical_rank(&DenseMatrix::zeros(3, 3), DEFAULT_RANK_TOL).unwrap(),
            0
        );
    }

    #[test]
    fn truncated_pinv_drops_small_directions() {
        let a = DenseMatrix::from_diag(&[4.0, 2.0, 1e-3]);
        let p = pinv_truncated(&a, 2).unwrap();
        assert!((p[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((p[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(p[(2, 2)], 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = DenseMatrix::zeros(2, 2);
        a.as_mut_slice()[0] = f64::INFINITY;
        assert_eq!(svd(&a).unwrap_err(), Error::NonFinite);
    }
}
