use num_complex::Complex64;
use proptest::prelude::*;
use saddlekit::linalg::{
    cholesky, eigenvalues, lu, mm, numerical_rank, pinv, pseudospectral_radius, svd,
    sym_eigenvalues, sym_inv_sqrt, DenseMatrix, DEFAULT_RANK_TOL,
};
use saddlekit::problem::split;

fn matrix(rows: usize, cols: usize, vals: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |i, j| vals[(i * cols + j) % vals.len()])
}

/// Product of an `r x k` and a `k x c` factor, so rank is at most `k`.
fn low_rank() -> impl Strategy<Value = DenseMatrix> {
    (1usize..9, 1usize..9, 1usize..9).prop_flat_map(|(r, c, k)| {
        (
            prop::collection::vec(-1.0f64..1.0, r * k),
            prop::collection::vec(-1.0f64..1.0, k * c),
        )
            .prop_map(move |(a, b)| matrix(r, k, &a).matmul(&matrix(k, c, &b)).unwrap())
    })
}

fn rel(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs().max(1.0)
}

// Characteristic polynomial coefficients by Faddeev-LeVerrier:
// det(λI - A) = λⁿ + c[1] λⁿ⁻¹ + ... + c[n].
fn char_poly(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut c = vec![1.0];
    let mut m = DenseMatrix::zeros(n, n);
    for k in 1..=n {
        m = a.matmul(&m).unwrap().add_identity(c[k - 1]);
        let am = a.matmul(&m).unwrap();
        let tr: f64 = (0..n).map(|i| am[(i, i)]).sum();
        c.push(-tr / k as f64);
    }
    c
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &ci| acc * z + ci)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penrose_equations_hold(a in low_rank()) {
        let x = pinv(&a, DEFAULT_RANK_TOL).unwrap();
        let ax = a.matmul(&x).unwrap();
        let xa = x.matmul(&a).unwrap();
        prop_assert!(rel(&ax.matmul(&a).unwrap(), &a) < 1e-10);
        prop_assert!(rel(&xa.matmul(&x).unwrap(), &x) < 1e-10);
        prop_assert!(rel(&ax.transpose(), &ax) < 1e-10);
        prop_assert!(rel(&xa.transpose(), &xa) < 1e-10);
    }

    #[test]
    fn svd_reconstructs_and_orders(a in low_rank()) {
        let f = svd(&a).unwrap();
        prop_assert!(rel(&f.reconstruct(), &a) < 1e-12);
        prop_assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.singular_values.iter().all(|&s| s >= 0.0));
        let rank = numerical_rank(&a, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(rank <= a.rows().min(a.cols()));
    }

    #[test]
    fn eigenvalues_are_roots_of_char_poly(vals in prop::collection::vec(-2.0f64..2.0, 16)) {
        let a = matrix(4, 4, &vals);
        let ev = eigenvalues(&a).unwrap();
        prop_assert_eq!(ev.len(), 4);
        let c = char_poly(&a);
        // Reference: roots of the polynomial satisfy Vieta's sum and product.
        let sum: Complex64 = ev.iter().sum();
        let prod: Complex64 = ev.iter().product();
        prop_assert!((sum.re + c[1]).abs() < 1e-10 && sum.im.abs() < 1e-10);
        prop_assert!((prod.re - c[4]).abs() < 1e-9 && prod.im.abs() < 1e-9);
        let scale = c.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        for z in &ev {
            let p = horner(&c, *z).norm();
            let dp = 1.0 + z.norm();
            prop_assert!(p < 1e-9 * scale * dp.powi(4), "p({z}) = {p}");
        }
        // Complex eigenvalues come in conjugate pairs.
        for z in ev.iter().filter(|z| z.im.abs() > 1e-12) {
            prop_assert!(ev.iter().any(|w| (w - z.conj()).norm() < 1e-9));
        }
    }

    #[test]
    fn pseudospectral_radius_bounds(vals in prop::collection::vec(-1.0f64..1.0, 25)) {
        let a = matrix(5, 5, &vals);
        let gamma = pseudospectral_radius(&a, 1e-8).unwrap();
        let rho = eigenvalues(&a).unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(gamma <= rho + 1e-12);
    }

    #[test]
    fn inv_sqrt_whitens(vals in prop::collection::vec(-1.0f64..1.0, 36), shift in 0.1f64..2.0) {
        let g = matrix(6, 6, &vals);
        let a = g.matmul(&g.transpose()).unwrap().add_identity(shift);
        let r = sym_inv_sqrt(&a).unwrap();
        let rar = r.matmul(&a).unwrap().matmul(&r).unwrap();
        prop_assert!(rel(&rar, &DenseMatrix::identity(6)) < 1e-9);
        let ev = sym_eigenvalues(&a).unwrap();
        prop_assert!(ev[0] >= shift - 1e-10);
    }

    #[test]
    fn cholesky_and_lu_solve(vals in prop::collection::vec(-1.0f64..1.0, 49), rhs in prop::collection::vec(-1.0f64..1.0, 7)) {
        let g = matrix(7, 7, &vals);
        let a = g.matmul(&g.transpose()).unwrap().add_identity(1.0);
        let c = cholesky(&a).unwrap();
        let l = c.factor();
        prop_assert!(rel(&l.matmul(&l.transpose()).unwrap(), &a) < 1e-12);
        let x = c.solve(&rhs).unwrap();
        let back = a.matvec(&x).unwrap();
        prop_assert!(back.iter().zip(&rhs).all(|(p, q)| (p - q).abs() < 1e-10));

        let n = g.add_identity(3.0);
        let f = lu(&n).unwrap();
        let y = f.solve(&rhs).unwrap();
        let back = n.matvec(&y).unwrap();
        prop_assert!(back.iter().zip(&rhs).all(|(p, q)| (p - q).abs() < 1e-10));
        let yt = f.solve_t(&rhs).unwrap();
        let back = n.matvec_t(&yt).unwrap();
        prop_assert!(back.iter().zip(&rhs).all(|(p, q)| (p - q).abs() < 1e-10));
    }

    #[test]
    fn splitting_is_consistent(vals in prop::collection::vec(-3.0f64..3.0, 36)) {
        let w = matrix(6, 6, &vals);
        let sp = split(&w);
        prop_assert!(rel(&sp.h.add(&sp.s).unwrap(), &w) < 1e-15);
        prop_assert!(rel(&sp.h.transpose(), &sp.h) == 0.0);
        prop_assert!(rel(&sp.s.transpose().scale(-1.0), &sp.s) == 0.0);
        prop_assert!(rel(&sp.l_s.add(&sp.u_s).unwrap(), &sp.s) == 0.0);
        prop_assert!(rel(&sp.l_s.transpose().scale(-1.0), &sp.u_s) == 0.0);
        // Splitting the symmetric part again leaves it unchanged.
        let again = split(&sp.h);
        prop_assert!(again.s.max_abs() == 0.0 && rel(&again.h, &sp.h) == 0.0);
    }

    #[test]
    fn matrix_market_round_trip(a in low_rank()) {
        let back = mm::parse(&mm::to_string(&a)).unwrap();
        prop_assert_eq!(back, a);
    }
}
