//! Saddle-point systems `[[W, Bᵀ], [-B, 0]] (u; p) = (f; g)` and their generators.

mod oseen;
mod random;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, mm, pinv, CsrMatrix, DenseMatrix, Vector, DEFAULT_RANK_TOL};

pub use oseen::{build_oseen, wind};
pub use random::build_random_singular;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemMeta {
    /// Cells per side for grid problems.
    pub l: Option<usize>,
    pub nu: Option<f64>,
    /// Mesh width `1/l`.
    pub h: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    w: DenseMatrix,
    b: DenseMatrix,
    f: Vector,
    g: Vector,
    pub meta: SystemMeta,
    w_csr: CsrMatrix,
    b_csr: CsrMatrix,
}

impl SaddleSystem {
    pub fn new(
        w: DenseMatrix,
        b: DenseMatrix,
        f: Vector,
        g: Vector,
        meta: SystemMeta,
    ) -> Result<Self> {
        let n = w.rows();
        if !w.is_square() || b.cols() != n || f.len() != n || g.len() != b.rows() {
            return Err(Error::Dimension(format!(
                "W {}x{}, B {}x{}, f {}, g {}",
                w.rows(),
                w.cols(),
                b.rows(),
                b.cols(),
                f.len(),
                g.len()
            )));
        }
        if !w.is_finite() || !b.is_finite() || f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let w_csr = CsrMatrix::from_dense(&w);
        let b_csr = CsrMatrix::from_dense(&b);
        Ok(Self {
            w,
            b,
            f,
            g,
            meta,
            w_csr,
            b_csr,
        })
    }

    pub fn w(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub(crate) fn b_sparse(&self) -> &CsrMatrix {
        &self.b_csr
    }

    /// Number of primal unknowns.
    pub fn n(&self) -> usize {
        self.w.rows()
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.b.rows()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    /// Stacked right-hand side `(f; g)`.
    pub fn rhs(&self) -> Vector {
        let mut r = self.f.clone();
        r.extend_from_slice(&self.g);
        r
    }

    /// Same matrix with a new stacked right-hand side.
    pub fn with_rhs(&self, rhs: &[f64]) -> Result<Self> {
        if rhs.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "rhs of length {} for order {}",
                rhs.len(),
                self.dim()
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut s = self.clone();
        s.f = rhs[..self.n()].to_vec();
        s.g = rhs[self.n()..].to_vec();
        Ok(s)
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vector {
        let n = self.n();
        let (u, p) = x.split_at(n);
        let mut y = vec![0.0; self.dim()];
        let (top, bottom) = y.split_at_mut(n);
        self.w_csr.matvec_into(u, top);
        self.b_csr.matvec_t_acc(1.0, p, top);
        self.b_csr.matvec_into(u, bottom);
        bottom.iter_mut().for_each(|v| *v = -*v);
        y
    }

    /// `Aᵀ x`.
    pub fn apply_t(&self, x: &[f64]) -> Vector {
        let n = self.n();
        let (u, p) = x.split_at(n);
        let mut y = vec![0.0; self.dim()];
        let (top, bottom) = y.split_at_mut(n);
        self.w_csr.matvec_t_acc(1.0, u, top);
        self.b_csr.matvec_t_acc(-1.0, p, top);
        self.b_csr.matvec_into(u, bottom);
        y
    }

    /// `b - A x` for the stored right-hand side.
    pub fn residual(&self, x: &[f64]) -> Vector {
        let ax = self.apply(x);
        let mut r = self.rhs();
        r.iter_mut().zip(&ax).for_each(|(ri, ai)| *ri -= ai);
        r
    }

    /// The explicit `(n+m)`-square coefficient matrix.
    pub fn assemble(&self) -> DenseMatrix {
        let (n, m) = (self.n(), self.m());
        let mut a = DenseMatrix::zeros(n + m, n + m);
        a.set_block(0, 0, &self.w);
        a.set_block(0, n, &self.b.transpose());
        a.set_block(n, 0, &self.b.scale(-1.0));
        a
    }

    pub fn split(&self) -> Splitting {
        split(&self.w)
    }

    /// Writes `W.mtx`, `B.mtx`, `f.mtx`, `g.mtx` and `meta.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        mm::write(dir.join("W.mtx"), &self.w)?;
        mm::write(dir.join("B.mtx"), &self.b)?;
        mm::write_vector(dir.join("f.mtx"), &self.f)?;
        mm::write_vector(dir.join("g.mtx"), &self.g)?;
        let meta = serde_json::json!({
            "l": self.meta.l,
            "nu": self.meta.nu,
            "n": self.n(),
            "m": self.m(),
        });
        fs::write(
            dir.join("meta.json"),
            serde_json::to_string_pretty(&meta).expect("plain json") + "\n",
        )?;
        Ok(())
    }

    /// Inverse of [`SaddleSystem::export`].
    pub fn import(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let w = mm::read(dir.join("W.mtx"))?;
        let b = mm::read(dir.join("B.mtx"))?;
        let f = mm::read_vector(dir.join("f.mtx"))?;
        let g = mm::read_vector(dir.join("g.mtx"))?;
        let text = fs::read_to_string(dir.join("meta.json"))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let l = v["l"].as_u64().map(|l| l as usize);
        let meta = SystemMeta {
            l,
            nu: v["nu"].as_f64(),
            h: l.map(|l| 1.0 / l as f64),
        };
        Self::new(w, b, f, g, meta)
    }
}

/// `W = H + S` with `S = L_s + U_s` split into strict triangles.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub h: DenseMatrix,
    pub s: DenseMatrix,
    pub l_s: DenseMatrix,
    pub u_s: DenseMatrix,
}

pub fn split(w: &DenseMatrix) -> Splitting {
    assert!(w.is_square(), "split of a non-square matrix");
    let wt = w.transpose();
    let h = w.add(&wt).unwrap().scale(0.5);
    let s = w.sub(&wt).unwrap().scale(0.5);
    let l_s = s.strict_lower();
    let u_s = s.strict_upper();
    Splitting { h, s, l_s, u_s }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    /// `b = A x*` for a seeded random `x*`.
    Manufactured,
    /// Orthogonal projection of the stored load onto `range(A)`.
    Projected,
}

impl std::str::FromStr for RhsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manufactured" => Ok(Self::Manufactured),
            "projected" => Ok(Self::Projected),
            other => Err(Error::InvalidArgument(format!(
                "unknown rhs mode '{other}'"
            ))),
        }
    }
}

pub fn make_consistent_rhs(system: &SaddleSystem, mode: RhsMode, seed: u64) -> Result<Vector> {
    match mode {
        RhsMode::Manufactured => Ok(system.apply(&random_vector(system.dim(), seed))),
        RhsMode::Projected => {
            let a = system.assemble();
            let a_pinv = pinv(&a, DEFAULT_RANK_TOL)?;
            let raw = system.rhs();
            let x = a_pinv.matvec(&raw)?;
            a.matvec(&x)
        }
    }
}

/// Seeded vector with entries uniform in `[-1, 1)`.
pub fn random_vector(len: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `‖(I - A A†) b‖ / ‖b‖`, zero for `b = 0`.
pub fn range_defect(system: &SaddleSystem, b: &[f64]) -> Result<f64> {
    let nb = linalg::norm2(b);
    if nb == 0.0 {
        return Ok(0.0);
    }
    let a = system.assemble();
    let proj = a.matvec(&pinv(&a, DEFAULT_RANK_TOL)?.matvec(b)?)?;
    Ok(linalg::norm2(&linalg::sub(b, &proj)) / nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        let w = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        let sp = split(&w);
        assert_eq!(sp.h, DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]));
        assert_eq!(sp.s, DenseMatrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]));
        assert_eq!(sp.l_s, DenseMatrix::from_rows(&[[0.0, 0.0], [-1.0, 0.0]]));
        assert_eq!(sp.u_s, DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]));

        let sym = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        assert_eq!(split(&sym).s.max_abs(), 0.0);
        let skew = DenseMatrix::from_rows(&[[0.0, 4.0], [-4.0, 0.0]]);
        assert_eq!(split(&skew).h.max_abs(), 0.0);
    }

    #[test]
    fn apply_matches_assembled() {
        let sys = build_random_singular(7, 4, 2, 3).unwrap();
        let a = sys.assemble();
        let x = random_vector(sys.dim(), 9);
        let dense = a.matvec(&x).unwrap();
        let dense_t = a.matvec_t(&x).unwrap();
        for (p, q) in sys.apply(&x).iter().zip(&dense) {
            assert!((p - q).abs() < 1e-13);
        }
        for (p, q) in sys.apply_t(&x).iter().zip(&dense_t) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn manufactured_zero_and_consistency() {
        let sys = build_random_singular(6, 3, 2, 7).unwrap();
        assert!(sys.apply(&vec![0.0; sys.dim()]).iter().all(|v| *v == 0.0));
        let b = make_consistent_rhs(&sys, RhsMode::Manufactured, 11).unwrap();
        assert!(range_defect(&sys, &b).unwrap() <= 1e-10);
    }

    #[test]
    fn with_rhs_checks_length() {
        let sys = build_random_singular(6, 3, 2, 7).unwrap();
        assert!(sys.with_rhs(&[1.0]).is_err());
        let b = vec![0.5; sys.dim()];
        assert_eq!(sys.with_rhs(&b).unwrap().rhs(), b);
    }
}
