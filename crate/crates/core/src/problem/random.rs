use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{make_consistent_rhs, RhsMode, SaddleSystem, SystemMeta};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Small random singular saddle-point system. `W` is a diagonally dominant
/// SPD matrix plus a skew part of random magnitude; `B` is a product of
/// `m x rank_b` and `rank_b x n` factors. The right-hand side is manufactured.
pub fn build_random_singular(n: usize, m: usize, rank_b: usize, seed: u64) -> Result<SaddleSystem> {
    if !(rank_b < m && m <= n) || rank_b == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < rank_b < m <= n, got n={n} m={m} rank_b={rank_b}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = rng.gen_range(-1.0..1.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    for i in 0..n {
        let off: f64 = d.row(i).iter().map(|v| v.abs()).sum();
        d[(i, i)] = off + rng.gen_range(0.5..1.5);
    }
    let skew_scale = rng.gen_range(0.1..3.0);
    let mut w = d;
    for i in 0..n {
        for j in 0..i {
            let v = skew_scale * rng.gen_range(-1.0..1.0);
            w[(i, j)] += v;
            w[(j, i)] -= v;
        }
    }
    let left = DenseMatrix::from_fn(m, rank_b, |_, _| rng.gen_range(-1.0..1.0));
    let right = DenseMatrix::from_fn(rank_b, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = left.matmul(&right)?;
    let sys = SaddleSystem::new(w, b, vec![0.0; n], vec![0.0; m], SystemMeta::default())?;
    let rhs = make_consistent_rhs(&sys, RhsMode::Manufactured, seed.wrapping_add(1))?;
    sys.with_rhs(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, numerical_rank};

    #[test]
    fn shapes_and_rank() {
        let sys = build_random_singular(6, 3, 2, 7).unwrap();
        assert_eq!((sys.n(), sys.m()), (6, 3));
        assert_eq!(numerical_rank(sys.b(), 1e-10).unwrap(), 2);
        assert!(cholesky(&sys.split().h).is_ok());
        assert!(super::super::range_defect(&sys, &sys.rhs()).unwrap() <= 1e-10);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_random_singular(4, 3, 3, 0).is_err());
        assert!(build_random_singular(3, 4, 2, 0).is_err());
        assert!(build_random_singular(4, 3, 0, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let a = build_random_singular(8, 4, 3, 42).unwrap();
        let b = build_random_singular(8, 4, 3, 42).unwrap();
        assert_eq!(a.w(), b.w());
        assert_eq!(a.rhs(), b.rhs());
    }
}
