use super::{IterationReport, Monitor, PrecondOp, SolveConfig};
use crate::error::{Error, Result};
use crate::precond::{Family, Preconditioner};
use crate::problem::SaddleSystem;

/// `x⁽ᵏ⁺¹⁾ = x⁽ᵏ⁾ + M† (b - A x⁽ᵏ⁾)` for a singular preconditioner.
pub fn gcp_iterate(
    system: &SaddleSystem,
    pc: &Preconditioner,
    cfg: &SolveConfig,
) -> Result<IterationReport> {
    if !pc.family().is_singular() {
        return Err(Error::FamilyMismatch(
            "the GCP iteration uses a singular preconditioner; use the stationary solver for block_tri".into(),
        ));
    }
    fixed_point(system, pc, cfg)
}

/// `x⁽ᵏ⁺¹⁾ = x⁽ᵏ⁾ + M_t⁻¹ (b - A x⁽ᵏ⁾)` for the nonsingular block-triangular
/// preconditioner.
pub fn stationary_iterate(
    system: &SaddleSystem,
    pc: &Preconditioner,
    cfg: &SolveConfig,
) -> Result<IterationReport> {
    if pc.family() != Family::BlockTri {
        return Err(Error::FamilyMismatch(
            "the stationary solver needs the block_tri family".into(),
        ));
    }
    fixed_point(system, pc, cfg)
}

/// Shared loop; also usable with any [`PrecondOp`].
pub(crate) fn fixed_point(
    system: &SaddleSystem,
    pc: &dyn PrecondOp,
    cfg: &SolveConfig,
) -> Result<IterationReport> {
    let mut mon = Monitor::new(system, cfg)?;
    let mut x = cfg.initial(system.dim())?;
    let mut r = system.residual(&x);
    let mut res = mon.record(&x)?;
    while !mon.done(res) && mon.iterations() < cfg.max_iters {
        let dx = pc.apply(&r)?;
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        r = system.residual(&x);
        res = mon.record(&x)?;
    }
    Ok(mon.finish(x, pc))
}
