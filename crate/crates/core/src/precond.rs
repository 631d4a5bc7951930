//! Constraint (`M`), block-diagonal (`M_b`) and block-triangular (`M_t`)
//! preconditioners and the application of their (pseudo)inverses.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, lu, numerical_rank, pinv, pinv_truncated, spectral_norm, CsrMatrix, DenseMatrix, Lu,
    Side, SparseTriangular, Vector, DEFAULT_RANK_TOL,
};
use crate::problem::{SaddleSystem, Splitting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `[[P, Bᵀ], [-B, 0]]`
    Constraint,
    /// `blkdiag(P, B P⁻¹ Bᵀ)`
    BlockDiag,
    /// `[[P, Bᵀ], [0, (h²/ν) I]]`, nonsingular.
    BlockTri,
}

impl Family {
    pub fn is_singular(self) -> bool {
        !matches!(self, Family::BlockTri)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Constraint => "constraint",
            Family::BlockDiag => "block_diag",
            Family::BlockTri => "block_tri",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constraint" => Ok(Family::Constraint),
            "block_diag" | "block-diag" => Ok(Family::BlockDiag),
            "block_tri" | "block-tri" => Ok(Family::BlockTri),
            other => Err(Error::InvalidArgument(format!(
                "unknown preconditioner family '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PKind {
    /// `P = ω H`.
    SymmetricScaled,
    /// `P = (1/ω)(I + ω L_s)(I + ω U_s)`.
    TriangularSplit,
    /// A caller-supplied nonsingular `P`; `omega` is ignored.
    Custom(DenseMatrix),
}

impl PKind {
    pub fn name(&self) -> &'static str {
        match self {
            PKind::SymmetricScaled => "symmetric_scaled",
            PKind::TriangularSplit => "triangular_split",
            PKind::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PChoice {
    pub kind: PKind,
    pub omega: f64,
}

impl PChoice {
    pub fn symmetric_scaled(omega: f64) -> Self {
        Self {
            kind: PKind::SymmetricScaled,
            omega,
        }
    }

    pub fn triangular_split(omega: f64) -> Self {
        Self {
            kind: PKind::TriangularSplit,
            omega,
        }
    }

    pub fn custom(p: DenseMatrix) -> Self {
        Self {
            kind: PKind::Custom(p),
            omega: 1.0,
        }
    }
}

/// How the pseudoinverse of `E = B P⁻¹ Bᵀ` is truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PinvRank {
    /// Drop singular values at or below `tol · σ₁`.
    Relative(f64),
    /// Keep exactly `numerical_rank(B)` singular values.
    FromB,
}

impl Default for PinvRank {
    fn default() -> Self {
        PinvRank::Relative(DEFAULT_RANK_TOL)
    }
}

/// Quantities that depend only on the system and are shared between
/// preconditioners built for different `ω`.
pub struct Workspace<'a> {
    system: &'a SaddleSystem,
    splitting: Splitting,
    h_factor: OnceLock<Result<SparseTriangular>>,
    ls_norm: OnceLock<Result<f64>>,
    b_rank: OnceLock<Result<usize>>,
}

impl<'a> Workspace<'a> {
    pub fn new(system: &'a SaddleSystem) -> Self {
        Self {
            system,
            splitting: system.split(),
            h_factor: OnceLock::new(),
            ls_norm: OnceLock::new(),
            b_rank: OnceLock::new(),
        }
    }

    pub fn system(&self) -> &'a SaddleSystem {
        self.system
    }

    pub fn splitting(&self) -> &Splitting {
        &self.splitting
    }

    /// Cholesky factor of `H`.
    fn h_factor(&self) -> Result<&SparseTriangular> {
        self.h_factor
            .get_or_init(|| {
                let c = cholesky(&self.splitting.h)?;
                SparseTriangular::from_dense(c.factor(), Side::Lower)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `‖L_s‖₂`.
    pub fn ls_norm(&self) -> Result<f64> {
        self.ls_norm
            .get_or_init(|| spectral_norm(&self.splitting.l_s))
            .clone()
    }

    /// Largest `ω` for which the triangular-split `P` is positive definite;
    /// infinite when `L_s = 0`.
    pub fn pd_bound(&self) -> Result<f64> {
        let n = self.ls_norm()?;
        Ok(if n == 0.0 { f64::INFINITY } else { 1.0 / n })
    }

    pub fn b_rank(&self) -> Result<usize> {
        self.b_rank
            .get_or_init(|| numerical_rank(self.system.b(), DEFAULT_RANK_TOL))
            .clone()
    }
}

#[derive(Debug, Clone)]
enum PSolver {
    /// `P = ω L Lᵀ`.
    Scaled {
        l: SparseTriangular,
        omega: f64,
    },
    /// `P = (1/ω) Lo Up`.
    Split {
        lower: SparseTriangular,
        upper: SparseTriangular,
        omega: f64,
    },
    General(Lu),
}

impl PSolver {
    /// `P⁻¹ x` (or `P⁻ᵀ x`) on an n-by-k row-major block.
    fn solve_in_place(&self, x: &mut [f64], k: usize, transposed: bool) {
        match self {
            PSolver::Scaled { l, omega } => {
                l.solve_in_place(x, k, false);
                l.solve_in_place(x, k, true);
                x.iter_mut().for_each(|v| *v /= omega);
            }
            PSolver::Split {
                lower,
                upper,
                omega,
            } => {
                if transposed {
                    upper.solve_in_place(x, k, true);
                    lower.solve_in_place(x, k, true);
                } else {
                    lower.solve_in_place(x, k, false);
                    upper.solve_in_place(x, k, false);
                }
                x.iter_mut().for_each(|v| *v *= omega);
            }
            PSolver::General(f) => {
                let n = f.dim();
                for c in 0..k {
                    let col: Vec<f64> = (0..n).map(|i| x[i * k + c]).collect();
                    let sol = if transposed {
                        f.solve_t(&col)
                    } else {
                        f.solve(&col)
                    }
                    .expect("dimension checked");
                    for (i, v) in sol.into_iter().enumerate() {
                        x[i * k + c] = v;
                    }
                }
            }
        }
    }

    fn solve(&self, b: &[f64], transposed: bool) -> Vector {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, 1, transposed);
        x
    }
}

#[derive(Debug, Clone)]
pub struct Preconditioner {
    family: Family,
    choice: PChoice,
    n: usize,
    m: usize,
    p_solver: PSolver,
    /// Explicit `P` when it is cheap to keep (custom and scaled kinds).
    p_explicit: Option<DenseMatrix>,
    l_s: Option<DenseMatrix>,
    b: DenseMatrix,
    b_csr: CsrMatrix,
    e: DenseMatrix,
    e_pinv: Option<DenseMatrix>,
    h_sq_over_nu: Option<f64>,
}

impl Preconditioner {
    pub fn build(system: &SaddleSystem, family: Family, choice: PChoice) -> Result<Self> {
        Self::build_in(&Workspace::new(system), family, choice, PinvRank::default())
    }

    pub fn build_in(
        ws: &Workspace<'_>,
        family: Family,
        choice: PChoice,
        rank: PinvRank,
    ) -> Result<Self> {
        let system = ws.system();
        let (n, m) = (system.n(), system.m());
        let omega = choice.omega;
        let (p_solver, p_explicit, l_s) = match &choice.kind {
            PKind::SymmetricScaled => {
                check_omega(omega)?;
                let l = ws.h_factor()?.clone();
                (
                    PSolver::Scaled { l, omega },
                    Some(ws.splitting().h.scale(omega)),
                    None,
                )
            }
            PKind::TriangularSplit => {
                check_omega(omega)?;
                let bound = ws.pd_bound()?;
                if omega >= bound {
                    return Err(Error::NotPositiveDefiniteSplit { omega, bound });
                }
                let sp = ws.splitting();
                let lower = SparseTriangular::from_dense(
                    &sp.l_s.scale(omega).add_identity(1.0),
                    Side::Lower,
                )?;
                let upper = SparseTriangular::from_dense(
                    &sp.u_s.scale(omega).add_identity(1.0),
                    Side::Upper,
                )?;
                (
                    PSolver::Split {
                        lower,
                        upper,
                        omega,
                    },
                    None,
                    Some(sp.l_s.clone()),
                )
            }
            PKind::Custom(p) => {
                if p.rows() != n || !p.is_square() {
                    return Err(Error::Dimension(format!(
                        "custom P is {}x{}, expected {n}x{n}",
                        p.rows(),
                        p.cols()
                    )));
                }
                (PSolver::General(lu(p)?), Some(p.clone()), None)
            }
        };

        // E = B P⁻¹ Bᵀ from one block solve with the n-by-m right-hand side Bᵀ.
        let mut z = system.b().transpose();
        p_solver.solve_in_place(z.as_mut_slice(), m, false);
        let e = system.b().matmul(&z)?;

        let e_pinv = match family {
            Family::BlockTri => None,
            _ => Some(match rank {
                PinvRank::Relative(tol) => pinv(&e, tol)?,
                PinvRank::FromB => pinv_truncated(&e, ws.b_rank()?)?,
            }),
        };
        let h_sq_over_nu = match family {
            Family::BlockTri => {
                let (h, nu) = system.meta.h.zip(system.meta.nu).ok_or_else(|| {
                    Error::InvalidArgument(
                        "block-triangular family needs mesh size and viscosity".into(),
                    )
                })?;
                Some(h * h / nu)
            }
            _ => None,
        };
        Ok(Self {
            family,
            choice,
            n,
            m,
            p_solver,
            p_explicit,
            l_s,
            b: system.b().clone(),
            b_csr: system.b_sparse().clone(),
            e,
            e_pinv,
            h_sq_over_nu,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn choice(&self) -> &PChoice {
        &self.choice
    }

    pub fn omega(&self) -> f64 {
        self.choice.omega
    }

    /// `E = B P⁻¹ Bᵀ`.
    pub fn e(&self) -> &DenseMatrix {
        &self.e
    }

    pub fn e_pinv(&self) -> Option<&DenseMatrix> {
        self.e_pinv.as_ref()
    }

    pub fn h_sq_over_nu(&self) -> Option<f64> {
        self.h_sq_over_nu
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn solve_p(&self, r: &[f64]) -> Vector {
        self.p_solver.solve(r, false)
    }

    pub fn solve_p_t(&self, r: &[f64]) -> Vector {
        self.p_solver.solve(r, true)
    }

    /// Explicit `P`.
    pub fn p(&self) -> DenseMatrix {
        if let Some(p) = &self.p_explicit {
            return p.clone();
        }
        // (1/ω)(I + ω L)(I + ω U) = (1/ω) I + L + U + ω L U, with U = -Lᵀ.
        let l = self.l_s.as_ref().expect("split kind keeps L_s");
        let u = l.transpose().scale(-1.0);
        let omega = self.choice.omega;
        let lu = l.matmul(&u).expect("square");
        lu.scale(omega)
            .add(l)
            .unwrap()
            .add(&u)
            .unwrap()
            .add_identity(1.0 / omega)
    }

    /// `M† r` for the singular families, `M_t⁻¹ r` for the triangular one.
    pub fn apply(&self, r: &[f64]) -> Result<Vector> {
        self.check(r.len())?;
        let (r1, r2) = r.split_at(self.n);
        let mut out = Vec::with_capacity(self.dim());
        match self.family {
            Family::Constraint => {
                let e_pinv = self.e_pinv.as_ref().expect("singular family");
                // x₂ = E†(B P⁻¹ r₁ + r₂), x₁ = P⁻¹(r₁ - Bᵀ x₂)
                let y = self.solve_p(r1);
                let mut t = self.b_csr.matvec(&y);
                t.iter_mut().zip(r2).for_each(|(a, b)| *a += b);
                let x2 = e_pinv.matvec(&t)?;
                let mut s = r1.to_vec();
                self.b_csr.matvec_t_acc(-1.0, &x2, &mut s);
                out.extend(self.solve_p(&s));
                out.extend(x2);
            }
            Family::BlockDiag => {
                let e_pinv = self.e_pinv.as_ref().expect("singular family");
                out.extend(self.solve_p(r1));
                out.extend(e_pinv.matvec(r2)?);
            }
            Family::BlockTri => {
                let c = self.h_sq_over_nu.expect("triangular family");
                let y2: Vector = r2.iter().map(|v| v / c).collect();
                let mut s = r1.to_vec();
                self.b_csr.matvec_t_acc(-1.0, &y2, &mut s);
                out.extend(self.solve_p(&s));
                out.extend(y2);
            }
        }
        Ok(out)
    }

    /// Transpose of [`Preconditioner::apply`].
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vector> {
        self.check(r.len())?;
        let (r1, r2) = r.split_at(self.n);
        let mut out = Vec::with_capacity(self.dim());
        match self.family {
            Family::Constraint => {
                let e_pinv = self.e_pinv.as_ref().expect("singular family");
                // t = E†ᵀ(B P⁻ᵀ r₁ - r₂), x₁ = P⁻ᵀ(r₁ - Bᵀ t), x₂ = -t
                let y = self.solve_p_t(r1);
                let mut t = self.b_csr.matvec(&y);
                t.iter_mut().zip(r2).for_each(|(a, b)| *a -= b);
                let t = e_pinv.matvec_t(&t)?;
                let mut s = r1.to_vec();
                self.b_csr.matvec_t_acc(-1.0, &t, &mut s);
                out.extend(self.solve_p_t(&s));
                out.extend(t.iter().map(|v| -v));
            }
            Family::BlockDiag => {
                let e_pinv = self.e_pinv.as_ref().expect("singular family");
                out.extend(self.solve_p_t(r1));
                out.extend(e_pinv.matvec_t(r2)?);
            }
            Family::BlockTri => {
                // [[Pᵀ, 0], [B, c I]] y = r
                let c = self.h_sq_over_nu.expect("triangular family");
                let y1 = self.solve_p_t(r1);
                let by = self.b_csr.matvec(&y1);
                out.extend_from_slice(&y1);
                out.extend(r2.iter().zip(&by).map(|(a, b)| (a - b) / c));
            }
        }
        Ok(out)
    }

    /// The explicit preconditioning matrix.
    pub fn assemble(&self) -> DenseMatrix {
        let (n, m) = (self.n, self.m);
        let mut out = DenseMatrix::zeros(n + m, n + m);
        out.set_block(0, 0, &self.p());
        match self.family {
            Family::Constraint => {
                out.set_block(0, n, &self.b.transpose());
                out.set_block(n, 0, &self.b.scale(-1.0));
            }
            Family::BlockDiag => out.set_block(n, n, &self.e),
            Family::BlockTri => {
                out.set_block(0, n, &self.b.transpose());
                out.set_block(
                    n,
                    n,
                    &DenseMatrix::identity(m).scale(self.h_sq_over_nu.unwrap()),
                );
            }
        }
        out
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension(format!(
                "preconditioner of order {} applied to length {len}",
                self.dim()
            )));
        }
        Ok(())
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "omega must be positive and finite, got {omega}"
        )))
    }
}
