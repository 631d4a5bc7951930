use super::{IterationReport, Monitor, PrecondOp, SolveConfig};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Vector};
use crate::problem::SaddleSystem;

/// Left-preconditioned GMRES(restart) on `K x = M† b` with `K = M† A`.
/// Every inner step forms the current iterate and checks the true residual;
/// the reported iteration count is the total number of inner steps.
pub fn gmres_restarted(
    system: &SaddleSystem,
    pc: &dyn PrecondOp,
    cfg: &SolveConfig,
) -> Result<IterationReport> {
    let mut mon = Monitor::new(system, cfg)?;
    let dim = system.dim();
    let m = cfg.restart;
    let mut x = cfg.initial(dim)?;
    let res = mon.record(&x)?;
    if mon.done(res) {
        return Ok(mon.finish(x, pc));
    }

    let mut basis: Vec<Vector> = Vec::with_capacity(m + 1);
    // Columns of the Hessenberg matrix, already rotated to upper triangular.
    let mut r_cols: Vec<Vector> = Vec::with_capacity(m);
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    while mon.iterations() < cfg.max_iters {
        let z = pc.apply(&system.residual(&x))?;
        let beta = norm2(&z);
        if beta == 0.0 {
            return Err(Error::Stagnation {
                iteration: mon.iterations(),
                res: *mon.history.last().unwrap(),
            });
        }
        basis.clear();
        r_cols.clear();
        basis.push(z.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;

        let mut trial = x.clone();
        for j in 0..m {
            let mut w = pc.apply(&system.apply(&basis[j]))?;
            let w_norm0 = norm2(&w);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                axpy(-hij, v, &mut w);
            }
            let h_next = norm2(&w);
            col[j + 1] = h_next;
            for i in 0..j {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * b;
                col[i + 1] = -sn[i] * a + cs[i] * b;
            }
            let (a, b) = (col[j], col[j + 1]);
            let rho = a.hypot(b);
            if rho == 0.0 {
                return Err(Error::Stagnation {
                    iteration: mon.iterations(),
                    res: *mon.history.last().unwrap(),
                });
            }
            cs[j] = a / rho;
            sn[j] = b / rho;
            col[j] = rho;
            col[j + 1] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            col.truncate(j + 1);
            r_cols.push(col);

            trial = x.clone();
            for (i, yi) in back_substitute(&r_cols, &g[..=j]).into_iter().enumerate() {
                axpy(yi, &basis[i], &mut trial);
            }
            let res = mon.record(&trial)?;
            if mon.done(res) || mon.iterations() >= cfg.max_iters {
                return Ok(mon.finish(trial, pc));
            }
            if h_next <= 1e-14 * w_norm0 {
                // Invariant subspace reached; restart from the current iterate.
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        x = trial;
    }
    Ok(mon.finish(x, pc))
}

/// Solves the upper-triangular system stored column-wise in `r_cols`.
fn back_substitute(r_cols: &[Vector], g: &[f64]) -> Vector {
    let k = g.len();
    let mut y = g.to_vec();
    for i in (0..k).rev() {
        y[i] /= r_cols[i][i];
        let yi = y[i];
        for (row, slot) in y.iter_mut().enumerate().take(i) {
            *slot -= r_cols[i][row] * yi;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::precond::{Family, PChoice, Preconditioner};
    use crate::problem::{build_oseen, SystemMeta};
    use crate::solvers::Identity;

    #[test]
    fn unpreconditioned_full_gmres_on_nonsingular_system() {
        // Full-rank B makes A nonsingular.
        let w = DenseMatrix::from_rows(&[[3.0, 1.0, 0.0], [-1.0, 2.0, 0.5], [0.0, -0.5, 4.0]]);
        let b = DenseMatrix::from_rows(&[[1.0, 1.0, 0.0]]);
        let sys =
            SaddleSystem::new(w, b, vec![1.0, 2.0, 3.0], vec![0.5], SystemMeta::default()).unwrap();
        let cfg = SolveConfig {
            restart: 4,
            max_iters: 4,
            tol: 1e-12,
            x0: None,
        };
        let rep = gmres_restarted(&sys, &Identity, &cfg).unwrap();
        assert!(rep.converged, "{:?}", rep.residual_history);
        assert!(rep.final_res < 1e-12);
    }

    #[test]
    fn exact_preconditioner_needs_at_most_two_steps() {
        let sys = crate::solvers::stationary::tests::symmetric_toy();
        let pc = Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(1.0))
            .unwrap();
        let rep = gmres_restarted(&sys, &pc, &SolveConfig::default()).unwrap();
        assert!(rep.converged && rep.iterations <= 2);
    }

    #[test]
    fn restart_lengths_both_converge() {
        let sys = build_oseen(8, 0.1).unwrap();
        let pc = Preconditioner::build(&sys, Family::Constraint, PChoice::symmetric_scaled(1.5))
            .unwrap();
        for restart in [10, 30] {
            let cfg = SolveConfig {
                restart,
                ..SolveConfig::default()
            };
            let rep = gmres_restarted(&sys, &pc, &cfg).unwrap();
            assert!(rep.converged);
            let res = norm2(&sys.residual(&rep.solution)) / norm2(&sys.rhs());
            assert!((res - rep.final_res).abs() <= 1e-12);
        }
    }
}
