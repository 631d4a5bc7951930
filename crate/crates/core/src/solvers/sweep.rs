use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve, IterationReport, SolveConfig, Solver};
use crate::error::{Error, Result};
use crate::precond::{Family, PChoice, PKind, PinvRank, Preconditioner, Workspace};
use crate::problem::SaddleSystem;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "SADDLEKIT_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub omega: f64,
    pub report: Option<IterationReport>,
    /// Build or solve failure for this `ω`.
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn converged_iterations(&self) -> Option<usize> {
        self.report
            .as_ref()
            .filter(|r| r.converged)
            .map(|r| r.iterations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// One entry per grid point, in grid order.
    pub entries: Vec<SweepEntry>,
    /// Converged `ω` with the fewest iterations; ties go to the earlier grid point.
    pub best_omega: Option<f64>,
}

/// Worker count from `SADDLEKIT_THREADS`, else the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Solves once per `ω`, rebuilding the preconditioner each time.
pub fn omega_sweep(
    system: &SaddleSystem,
    family: Family,
    kind: &PKind,
    omega_grid: &[f64],
    solver: Solver,
    cfg: &SolveConfig,
    rank: PinvRank,
) -> Result<SweepResult> {
    omega_sweep_in(
        &Workspace::new(system),
        family,
        kind,
        omega_grid,
        solver,
        cfg,
        rank,
    )
}

/// As [`omega_sweep`], reusing the cached factors of `ws`.
pub fn omega_sweep_in(
    ws: &Workspace<'_>,
    family: Family,
    kind: &PKind,
    omega_grid: &[f64],
    solver: Solver,
    cfg: &SolveConfig,
    rank: PinvRank,
) -> Result<SweepResult> {
    if omega_grid.is_empty() {
        return Err(Error::InvalidArgument("empty omega grid".into()));
    }
    if matches!(kind, PKind::Custom(_)) {
        return Err(Error::InvalidArgument(
            "a custom P has no omega to sweep".into(),
        ));
    }
    cfg.validate()?;
    let system = ws.system();
    let run = |&omega: &f64| {
        let choice = PChoice {
            kind: kind.clone(),
            omega,
        };
        let outcome = Preconditioner::build_in(ws, family, choice, rank)
            .and_then(|pc| solve(system, &pc, solver, cfg));
        match outcome {
            Ok(report) => SweepEntry {
                omega,
                report: Some(report),
                error: None,
            },
            Err(e) => SweepEntry {
                omega,
                report: None,
                error: Some(e.to_string()),
            },
        }
    };
    let threads = thread_count();
    let entries: Vec<SweepEntry> = if threads <= 1 || omega_grid.len() == 1 {
        omega_grid.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| omega_grid.par_iter().map(run).collect())
    };
    let best_omega = entries
        .iter()
        .filter_map(|e| e.converged_iterations().map(|it| (it, e.omega)))
        .min_by_key(|&(it, _)| it)
        .map(|(_, omega)| omega);
    Ok(SweepResult {
        entries,
        best_omega,
    })
}
