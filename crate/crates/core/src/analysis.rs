//! Dense spectral diagnostics for the stationary iteration: the convergence
//! indicator `γ(X (P - W))`, the null-space/index/γ conditions on
//! `T = I - M† A`, projector spectra, and the admissible `ω` bounds.
//! Everything here is `O(n³)` and meant for grids up to `l = 16`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, numerical_rank, pseudospectral_radius, spectral_norm, svd, sym_eigenvalues,
    sym_inv_sqrt, sym_sqrt, DenseMatrix, DEFAULT_ONE_TOL,
};
use crate::precond::{Family, PKind, Preconditioner};
use crate::problem::{split, SaddleSystem};

/// Relative singular-value cutoff for ranks and null spaces in this module.
pub const ANALYSIS_RANK_TOL: f64 = 1e-10;
/// Largest principal-angle sine accepted when comparing null spaces.
pub const NULL_ANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// `γ(I - M† A)`.
    pub gamma_t: f64,
    /// `γ(X (P - W))`; constraint family only.
    pub gamma_xpw: Option<f64>,
    /// `null(M† A) = null(A)`.
    pub null_space_ok: bool,
    /// `rank(I - T) = rank((I - T)²)`.
    pub index_one_ok: bool,
    /// `γ(T) < 1`.
    pub gamma_below_one: bool,
    /// Eigenvalue counts of `P^{1/2} X P^{1/2}` near 1 and 0, when `P = ωH`.
    pub projector_eig_ones: Option<usize>,
    pub projector_eig_zeros: Option<usize>,
    pub omega_used: f64,
}

fn require_constraint(pc: &Preconditioner) -> Result<()> {
    if pc.family() != Family::Constraint {
        return Err(Error::FamilyMismatch(format!(
            "needs the constraint family, got {}",
            pc.family()
        )));
    }
    Ok(())
}

/// Explicit `P⁻¹`.
fn p_inverse(pc: &Preconditioner, n: usize) -> DenseMatrix {
    let mut inv = DenseMatrix::identity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        inv.set_col(j, &pc.solve_p(&e));
    }
    inv
}

/// `X = P⁻¹ - P⁻¹ Bᵀ E† B P⁻¹`.
pub fn compute_x(system: &SaddleSystem, pc: &Preconditioner) -> Result<DenseMatrix> {
    require_constraint(pc)?;
    let p_inv = p_inverse(pc, system.n());
    let e_pinv = pc.e_pinv().expect("constraint family");
    let z = p_inv.matmul(&system.b().transpose())?;
    let y = system.b().matmul(&p_inv)?;
    p_inv.sub(&z.matmul(e_pinv)?.matmul(&y)?)
}

/// `X (P - W)`.
pub fn iteration_block(system: &SaddleSystem, pc: &Preconditioner) -> Result<DenseMatrix> {
    let x = compute_x(system, pc)?;
    x.matmul(&pc.p().sub(system.w())?)
}

/// `γ(X (P - W))`, which is below 1 exactly when the iteration converges.
pub fn gcp_convergence_indicator(system: &SaddleSystem, pc: &Preconditioner) -> Result<f64> {
    pseudospectral_radius(&iteration_block(system, pc)?, DEFAULT_ONE_TOL)
}

/// Eigenvalues of `X (P - W)`.
pub fn iteration_block_eigenvalues(
    system: &SaddleSystem,
    pc: &Preconditioner,
) -> Result<Vec<Complex64>> {
    eigenvalues(&iteration_block(system, pc)?)
}

/// Explicit `M† A` (or `M_t⁻¹ A`).
pub fn preconditioned_operator(system: &SaddleSystem, pc: &Preconditioner) -> Result<DenseMatrix> {
    let a = system.assemble();
    let d = system.dim();
    let mut out = DenseMatrix::zeros(d, d);
    for j in 0..d {
        out.set_col(j, &pc.apply(&a.col(j))?);
    }
    Ok(out)
}

/// Orthonormal basis of the numerical null space, as columns (None if trivial).
fn null_basis(a: &DenseMatrix) -> Result<Option<DenseMatrix>> {
    let f = svd(a)?;
    let r = f.rank(ANALYSIS_RANK_TOL);
    let d = a.cols();
    if r == d {
        return Ok(None);
    }
    // svd returns n-by-min(m, n) right factors; for square input that is all of V.
    Ok(Some(f.v.block(0, r, d, d - r)))
}

/// Sine of the largest principal angle between two equal-dimension subspaces.
fn subspace_gap(q1: &DenseMatrix, q2: &DenseMatrix) -> Result<f64> {
    let coeffs = q2.transpose().matmul(q1)?;
    spectral_norm(&q1.sub(&q2.matmul(&coeffs)?)?)
}

/// Checks the three conditions for semiconvergence of `x ← x + M†(b - A x)`.
pub fn check_semiconvergence(system: &SaddleSystem, pc: &Preconditioner) -> Result<SpectralReport> {
    if !pc.family().is_singular() {
        return Err(Error::FamilyMismatch(
            "conditions apply to the singular families".into(),
        ));
    }
    let a = system.assemble();
    let k = preconditioned_operator(system, pc)?;

    let null_ok = match (null_basis(&a)?, null_basis(&k)?) {
        (None, None) => true,
        (Some(q1), Some(q2)) if q1.cols() == q2.cols() => subspace_gap(&q1, &q2)? <= NULL_ANGLE_TOL,
        _ => false,
    };
    let index_ok = numerical_rank(&k, ANALYSIS_RANK_TOL)?
        == numerical_rank(&k.matmul(&k)?, ANALYSIS_RANK_TOL)?;

    let d = system.dim();
    let t = DenseMatrix::identity(d).sub(&k)?;
    let gamma_t = pseudospectral_radius(&t, DEFAULT_ONE_TOL)?;

    let constraint = pc.family() == Family::Constraint;
    let gamma_xpw = if constraint {
        Some(gcp_convergence_indicator(system, pc)?)
    } else {
        None
    };
    let (ones, zeros) = if constraint && pc.choice().kind == PKind::SymmetricScaled {
        let (o, z, _) = projection_spectrum(system, pc)?;
        (Some(o), Some(z))
    } else {
        (None, None)
    };
    Ok(SpectralReport {
        gamma_t,
        gamma_xpw,
        null_space_ok: null_ok,
        index_one_ok: index_ok,
        gamma_below_one: gamma_t < 1.0,
        projector_eig_ones: ones,
        projector_eig_zeros: zeros,
        omega_used: pc.omega(),
    })
}

/// Eigenvalues of `P^{1/2} X P^{1/2}` for symmetric positive definite `P`:
/// counts near 1 and near 0, and the largest distance from `{0, 1}`.
pub fn projection_spectrum(
    system: &SaddleSystem,
    pc: &Preconditioner,
) -> Result<(usize, usize, f64)> {
    let p = pc.p();
    if pc.choice().kind == PKind::TriangularSplit || !p.is_symmetric(1e-12) {
        return Err(Error::InvalidArgument(
            "projection spectrum needs a symmetric positive definite P".into(),
        ));
    }
    let root = sym_sqrt(&p)?;
    let x = compute_x(system, pc)?;
    let mut g = root.matmul(&x)?.matmul(&root)?;
    symmetrize(&mut g);
    let mut ones = 0;
    let mut zeros = 0;
    let mut max_dev = 0.0f64;
    for lam in sym_eigenvalues(&g)? {
        let (d0, d1) = (lam.abs(), (lam - 1.0).abs());
        if d1 < d0 {
            ones += 1;
        } else {
            zeros += 1;
        }
        max_dev = max_dev.max(d0.min(d1));
    }
    Ok((ones, zeros, max_dev))
}

fn symmetrize(a: &mut DenseMatrix) {
    for i in 0..a.rows() {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// `½ (1 + ρ²)` with `ρ = ‖H^{-1/2} S H^{-1/2}‖₂`: every larger `ω` makes
/// `P = ω H` convergent.
pub fn omega_bound_symmetric(w: &DenseMatrix) -> Result<f64> {
    let sp = split(w);
    let r = sym_inv_sqrt(&sp.h)?;
    let rho = spectral_norm(&r.matmul(&sp.s)?.matmul(&r)?)?;
    Ok(0.5 * (1.0 + rho * rho))
}

/// Upper end of the `ω` interval on which the triangular-split `P` is
/// guaranteed convergent.
pub fn omega_bound_triangular(w: &DenseMatrix) -> Result<f64> {
    let sp = split(w);
    let eig = sym_eigenvalues(&sp.h)?;
    if eig[0] <= 0.0 || eig[0].is_nan() {
        return Err(Error::NotSpd(eig[0]));
    }
    let lmax = *eig.last().unwrap();
    let ls = spectral_norm(&sp.l_s)?;
    Ok(triangular_bound(lmax, ls))
}

/// The closed form, with its `‖L_s‖ → 0` limit `2/λ_max`.
pub fn triangular_bound(lambda_max: f64, ls_norm: f64) -> f64 {
    if ls_norm < 1e-12 * lambda_max {
        return 2.0 / lambda_max;
    }
    let l2 = ls_norm * ls_norm;
    (-lambda_max + (lambda_max * lambda_max + 16.0 * l2).sqrt()) / (4.0 * l2)
}

/// `1/‖L_s‖₂`, infinite when `L_s = 0`.
pub fn pd_bound(w: &DenseMatrix) -> Result<f64> {
    let n = spectral_norm(&split(w).l_s)?;
    Ok(if n == 0.0 { f64::INFINITY } else { 1.0 / n })
}

/// `(‖P_H^{1/2} X P_H^{1/2}‖₂, ‖P_H^{-1/2} (P - W) P_H^{-1/2}‖₂)` with `P_H`
/// the symmetric part of the triangular-split `P`.
pub fn norm_certificates(system: &SaddleSystem, pc: &Preconditioner) -> Result<(f64, f64)> {
    if pc.choice().kind != PKind::TriangularSplit {
        return Err(Error::InvalidArgument(
            "norm certificates need the triangular-split P".into(),
        ));
    }
    let bound = omega_bound_triangular(system.w())?;
    if pc.omega() >= bound {
        return Err(Error::InvalidArgument(format!(
            "omega = {} is not below the triangular bound {bound}",
            pc.omega()
        )));
    }
    let p = pc.p();
    let p_h = p.add(&p.transpose())?.scale(0.5);
    let root = sym_sqrt(&p_h)?;
    let inv_root = sym_inv_sqrt(&p_h)?;
    let x = compute_x(system, pc)?;
    let x_norm = spectral_norm(&root.matmul(&x)?.matmul(&root)?)?;
    let pw = p.sub(system.w())?;
    let pw_norm = spectral_norm(&inv_root.matmul(&pw)?.matmul(&inv_root)?)?;
    Ok((x_norm, pw_norm))
}
