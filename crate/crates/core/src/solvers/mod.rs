//! Stationary and Krylov solvers. Every method stops on the true relative
//! residual `‖b - A x‖ / ‖b‖` of the unpreconditioned system.

mod gmres;
mod qmr;
mod stationary;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Vector};
use crate::precond::Preconditioner;
use crate::problem::SaddleSystem;

pub use gmres::gmres_restarted;
pub use qmr::qmr;
pub use stationary::{gcp_iterate, stationary_iterate};
pub use sweep::{omega_sweep, omega_sweep_in, thread_count, SweepEntry, SweepResult, THREADS_ENV};

/// Residual level treated as divergence.
pub const DIVERGENCE_RES: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Krylov dimension per GMRES cycle.
    pub restart: usize,
    /// Initial guess; zero when `None`.
    pub x0: Option<Vector>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 5000,
            restart: 10,
            x0: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 || self.tol.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 || self.restart == 0 {
            return Err(Error::InvalidArgument(
                "max_iters and restart must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn initial(&self, dim: usize) -> Result<Vector> {
        match &self.x0 {
            None => Ok(vec![0.0; dim]),
            Some(x) if x.len() == dim => Ok(x.clone()),
            Some(x) => Err(Error::Dimension(format!(
                "x0 of length {} for order {dim}",
                x.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub converged: bool,
    pub iterations: usize,
    /// Relative residual at every iterate, starting with `x⁽⁰⁾`.
    pub residual_history: Vec<f64>,
    pub final_res: f64,
    pub omega: f64,
    pub case_label: String,
    #[serde(skip)]
    pub solution: Vector,
}

impl IterationReport {
    /// Two-column CSV `iter,res`.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iter,res\n");
        for (k, r) in self.residual_history.iter().enumerate() {
            s.push_str(&format!("{k},{r:e}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// `x ← x + M† (b - A x)` with a singular preconditioner.
    Gcp,
    /// `x ← x + M_t⁻¹ (b - A x)` with the nonsingular block-triangular one.
    Stationary,
    Gmres,
    Qmr,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Gcp => "gcp",
            Solver::Stationary => "stationary",
            Solver::Gmres => "gmres",
            Solver::Qmr => "qmr",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcp" => Ok(Solver::Gcp),
            "stationary" => Ok(Solver::Stationary),
            "gmres" => Ok(Solver::Gmres),
            "qmr" => Ok(Solver::Qmr),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

/// Left preconditioner as seen by the solvers.
pub trait PrecondOp: Sync {
    fn apply(&self, r: &[f64]) -> Result<Vector>;
    fn apply_transpose(&self, r: &[f64]) -> Result<Vector>;

    fn omega(&self) -> f64 {
        f64::NAN
    }

    fn label(&self) -> String {
        String::new()
    }
}

impl PrecondOp for Preconditioner {
    fn apply(&self, r: &[f64]) -> Result<Vector> {
        Preconditioner::apply(self, r)
    }

    fn apply_transpose(&self, r: &[f64]) -> Result<Vector> {
        Preconditioner::apply_transpose(self, r)
    }

    fn omega(&self) -> f64 {
        Preconditioner::omega(self)
    }

    fn label(&self) -> String {
        format!("{}/{}", self.family(), self.choice().kind.name())
    }
}

/// No preconditioning.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl PrecondOp for Identity {
    fn apply(&self, r: &[f64]) -> Result<Vector> {
        Ok(r.to_vec())
    }

    fn apply_transpose(&self, r: &[f64]) -> Result<Vector> {
        Ok(r.to_vec())
    }

    fn label(&self) -> String {
        "identity".into()
    }
}

/// Runs `solver` with the given preconditioner.
pub fn solve(
    system: &SaddleSystem,
    pc: &Preconditioner,
    solver: Solver,
    cfg: &SolveConfig,
) -> Result<IterationReport> {
    match solver {
        Solver::Gcp => gcp_iterate(system, pc, cfg),
        Solver::Stationary => stationary_iterate(system, pc, cfg),
        Solver::Gmres => gmres_restarted(system, pc, cfg),
        Solver::Qmr => qmr(system, pc, cfg),
    }
}

/// Tracks the true relative residual of a run.
struct Monitor<'a> {
    system: &'a SaddleSystem,
    b_norm: f64,
    tol: f64,
    history: Vec<f64>,
}

impl<'a> Monitor<'a> {
    fn new(system: &'a SaddleSystem, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        let b_norm = norm2(&system.rhs());
        Ok(Self {
            system,
            b_norm,
            tol: cfg.tol,
            history: Vec::new(),
        })
    }

    /// Relative residual of `x`, or the absolute one when `b = 0`.
    fn res(&self, r: &[f64]) -> f64 {
        let nr = norm2(r);
        if self.b_norm > 0.0 {
            nr / self.b_norm
        } else {
            nr
        }
    }

    /// Records the residual of `x` and returns it, or a divergence error.
    fn record(&mut self, x: &[f64]) -> Result<f64> {
        let res = self.res(&self.system.residual(x));
        let iteration = self.history.len();
        if !res.is_finite() || res > DIVERGENCE_RES {
            let last_res = self
                .history
                .iter()
                .rev()
                .copied()
                .find(|v| v.is_finite())
                .unwrap_or(f64::NAN);
            return Err(Error::Diverged {
                iteration,
                last_res: if res.is_finite() { res } else { last_res },
            });
        }
        self.history.push(res);
        Ok(res)
    }

    fn done(&self, res: f64) -> bool {
        res < self.tol
    }

    fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    fn finish(self, x: Vector, pc: &dyn PrecondOp) -> IterationReport {
        let final_res = *self.history.last().expect("history starts at x0");
        IterationReport {
            converged: final_res < self.tol,
            iterations: self.history.len() - 1,
            residual_history: self.history,
            final_res,
            omega: pc.omega(),
            case_label: pc.label(),
            solution: x,
        }
    }
}
