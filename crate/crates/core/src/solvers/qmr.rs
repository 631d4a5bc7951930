use super::{IterationReport, Monitor, PrecondOp, SolveConfig};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Vector};
use crate::problem::SaddleSystem;

const TINY: f64 = 1e-15;

/// QMR with coupled two-term recurrences and no look-ahead on the
/// left-preconditioned operator `K = M† A`. The shadow vector is the initial
/// preconditioned residual. Lanczos breakdowns are reported, not repaired.
pub fn qmr(
    system: &SaddleSystem,
    pc: &dyn PrecondOp,
    cfg: &SolveConfig,
) -> Result<IterationReport> {
    let mut mon = Monitor::new(system, cfg)?;
    let mut x = cfg.initial(system.dim())?;
    let res = mon.record(&x)?;
    if mon.done(res) {
        return Ok(mon.finish(x, pc));
    }
    let k_apply = |v: &[f64]| pc.apply(&system.apply(v));
    let kt_apply = |v: &[f64]| -> Result<Vector> { Ok(system.apply_t(&pc.apply_transpose(v)?)) };

    let r0 = pc.apply(&system.residual(&x))?;
    let scale = norm2(&r0);
    let breakdown = |iteration: usize, what: &str| Error::Breakdown {
        iteration,
        what: what.to_string(),
    };

    let mut v_t = r0.clone();
    let mut rho = norm2(&v_t);
    let mut w_t = r0;
    let mut xi = norm2(&w_t);
    let (mut gamma, mut eta, mut theta) = (1.0f64, -1.0f64, 0.0f64);
    let mut eps = 1.0f64;
    let mut p: Vector = Vec::new();
    let mut q: Vector = Vec::new();
    let mut d: Vector = Vec::new();

    for i in 1..=cfg.max_iters {
        if rho <= TINY * scale || xi <= TINY * scale {
            return Err(breakdown(i, "Lanczos vector vanished"));
        }
        let v: Vector = v_t.iter().map(|a| a / rho).collect();
        let w: Vector = w_t.iter().map(|a| a / xi).collect();
        let delta = dot(&w, &v);
        if delta.abs() <= TINY {
            return Err(breakdown(i, "biorthogonality coefficient delta vanished"));
        }
        if i == 1 {
            p = v.clone();
            q = w.clone();
        } else {
            let cp = xi * delta / eps;
            let cq = rho * delta / eps;
            p.iter_mut()
                .zip(&v)
                .for_each(|(pi, vi)| *pi = vi - cp * *pi);
            q.iter_mut()
                .zip(&w)
                .for_each(|(qi, wi)| *qi = wi - cq * *qi);
        }
        let p_t = k_apply(&p)?;
        eps = dot(&q, &p_t);
        if eps.abs() <= TINY * norm2(&q) * norm2(&p_t) {
            return Err(breakdown(i, "inner product epsilon vanished"));
        }
        let beta = eps / delta;
        v_t = p_t.clone();
        axpy(-beta, &v, &mut v_t);
        let rho1 = rho;
        rho = norm2(&v_t);
        w_t = kt_apply(&q)?;
        axpy(-beta, &w, &mut w_t);
        xi = norm2(&w_t);

        let gamma1 = gamma;
        let theta1 = theta;
        theta = rho / (gamma1 * beta.abs());
        gamma = 1.0 / (1.0 + theta * theta).sqrt();
        if gamma == 0.0 {
            return Err(breakdown(i, "gamma vanished"));
        }
        eta = -eta * rho1 * gamma * gamma / (beta * gamma1 * gamma1);
        if i == 1 {
            d = p.iter().map(|a| eta * a).collect();
        } else {
            let c = (theta1 * gamma).powi(2);
            d.iter_mut()
                .zip(&p)
                .for_each(|(di, pi)| *di = eta * pi + c * *di);
        }
        axpy(1.0, &d, &mut x);
        let res = mon.record(&x)?;
        if mon.done(res) {
            break;
        }
    }
    Ok(mon.finish(x, pc))
}
