//! Python bindings. Matrices cross the boundary as lists of rows, vectors
//! as lists of floats.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use saddlekit::analysis;
use saddlekit::experiment::{self, Case, Rhs, Scope, Table};
use saddlekit::linalg::DenseMatrix;
use saddlekit::precond::{self, Family, PChoice, PinvRank, Workspace};
use saddlekit::problem::{self, RhsMode};
use saddlekit::solvers::{self, SolveConfig};

create_exception!(saddlekit, SaddlekitError, PyException);
create_exception!(saddlekit, DivergedError, SaddlekitError);

fn to_py(e: saddlekit::Error) -> PyErr {
    use saddlekit::Error as E;
    match e {
        E::InvalidArgument(_) | E::Dimension(_) | E::GridTooCoarse(_) | E::FamilyMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        E::NotPositiveDefiniteSplit { .. } => PyValueError::new_err(e.to_string()),
        E::Diverged { .. } | E::Breakdown { .. } | E::Stagnation { .. } => {
            DivergedError::new_err(e.to_string())
        }
        _ => SaddlekitError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = saddlekit::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

fn dense(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Ok(DenseMatrix::from_rows(&rows))
}

#[pyclass(name = "SaddleSystem", module = "saddlekit", frozen)]
pub struct PySaddleSystem {
    inner: problem::SaddleSystem,
}

#[pymethods]
impl PySaddleSystem {
    /// `A = [[W, Bᵀ], [-B, 0]]` with right-hand side `(f; g)`.
    #[new]
    fn new(w: Vec<Vec<f64>>, b: Vec<Vec<f64>>, f: Vec<f64>, g: Vec<f64>) -> PyResult<Self> {
        let inner = problem::SaddleSystem::new(dense(w)?, dense(b)?, f, g, Default::default())
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: problem::SaddleSystem::import(dir).map_err(to_py)?,
        })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.export(dir).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn grid(&self) -> Option<usize> {
        self.inner.meta.l
    }

    #[getter]
    fn nu(&self) -> Option<f64> {
        self.inner.meta.nu
    }

    fn w(&self) -> Vec<Vec<f64>> {
        rows(self.inner.w())
    }

    fn b(&self) -> Vec<Vec<f64>> {
        rows(self.inner.b())
    }

    fn rhs(&self) -> Vec<f64> {
        self.inner.rhs()
    }

    fn assemble(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.assemble())
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(self.inner.apply(&x))
    }

    fn residual(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(self.inner.residual(&x))
    }

    fn with_rhs(&self, rhs: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_rhs(&rhs).map_err(to_py)?,
        })
    }

    /// Copy with a consistent right-hand side: "manufactured" or "projected".
    #[pyo3(signature = (mode = "manufactured", seed = 0))]
    fn consistent(&self, mode: &str, seed: u64) -> PyResult<Self> {
        let mode: RhsMode = parse(mode)?;
        let b = problem::make_consistent_rhs(&self.inner, mode, seed).map_err(to_py)?;
        self.with_rhs(b)
    }

    fn range_defect(&self) -> PyResult<f64> {
        problem::range_defect(&self.inner, &self.inner.rhs()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("SaddleSystem(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

impl PySaddleSystem {
    fn check_len(&self, len: usize) -> PyResult<()> {
        if len != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "expected length {}, got {len}",
                self.inner.dim()
            )));
        }
        Ok(())
    }
}

#[pyclass(name = "Preconditioner", module = "saddlekit", frozen)]
pub struct PyPreconditioner {
    inner: precond::Preconditioner,
}

#[pymethods]
impl PyPreconditioner {
    /// `family`: constraint, block_diag or block_tri. `kind`:
    /// symmetric_scaled or triangular_split. A `custom` matrix overrides both
    /// `kind` and `omega`.
    #[new]
    #[pyo3(signature = (system, family = "constraint", kind = "symmetric_scaled", omega = 1.0, custom = None, rank_from_b = false))]
    fn new(
        py: Python<'_>,
        system: &PySaddleSystem,
        family: &str,
        kind: &str,
        omega: f64,
        custom: Option<Vec<Vec<f64>>>,
        rank_from_b: bool,
    ) -> PyResult<Self> {
        let family: Family = parse(family)?;
        let choice = match custom {
            Some(p) => PChoice::custom(dense(p)?),
            None => match kind {
                "symmetric_scaled" => PChoice::symmetric_scaled(omega),
                "triangular_split" => PChoice::triangular_split(omega),
                other => return Err(PyValueError::new_err(format!("unknown P kind '{other}'"))),
            },
        };
        let rank = if rank_from_b {
            PinvRank::FromB
        } else {
            PinvRank::default()
        };
        let sys = &system.inner;
        let inner = py
            .detach(|| {
                precond::Preconditioner::build_in(&Workspace::new(sys), family, choice, rank)
            })
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Preconditioner of a numbered case (I..VI).
    #[staticmethod]
    #[pyo3(signature = (system, case, omega))]
    fn for_case(py: Python<'_>, system: &PySaddleSystem, case: &str, omega: f64) -> PyResult<Self> {
        let case: Case = parse(case)?;
        let sys = &system.inner;
        let inner = py
            .detach(|| precond::Preconditioner::build(sys, case.family(), case.choice(omega)))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_string()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.choice().kind.name()
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    fn apply(&self, r: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&r).map_err(to_py)
    }

    fn apply_transpose(&self, r: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_transpose(&r).map_err(to_py)
    }

    fn assemble(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.assemble())
    }

    fn p(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.p())
    }

    fn __repr__(&self) -> String {
        format!(
            "Preconditioner(family={}, kind={}, omega={})",
            self.inner.family(),
            self.inner.choice().kind.name(),
            self.inner.omega()
        )
    }
}

#[pyclass(name = "IterationReport", module = "saddlekit", frozen, get_all)]
pub struct PyIterationReport {
    converged: bool,
    iterations: usize,
    residual_history: Vec<f64>,
    final_res: f64,
    omega: f64,
    case_label: String,
    solution: Vec<f64>,
}

#[pymethods]
impl PyIterationReport {
    fn __repr__(&self) -> String {
        format!(
            "IterationReport(converged={}, iterations={}, final_res={:e})",
            self.converged, self.iterations, self.final_res
        )
    }
}

impl From<solvers::IterationReport> for PyIterationReport {
    fn from(r: solvers::IterationReport) -> Self {
        Self {
            converged: r.converged,
            iterations: r.iterations,
            residual_history: r.residual_history,
            final_res: r.final_res,
            omega: r.omega,
            case_label: r.case_label,
            solution: r.solution,
        }
    }
}

fn config(tol: f64, max_iters: usize, restart: usize, x0: Option<Vec<f64>>) -> SolveConfig {
    SolveConfig {
        tol,
        max_iters,
        restart,
        x0,
    }
}

/// Runs gcp, stationary, gmres or qmr.
#[pyfunction]
#[pyo3(signature = (system, preconditioner, solver = "gmres", tol = 1e-6, max_iters = 5000, restart = 10, x0 = None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    system: &PySaddleSystem,
    preconditioner: &PyPreconditioner,
    solver: &str,
    tol: f64,
    max_iters: usize,
    restart: usize,
    x0: Option<Vec<f64>>,
) -> PyResult<PyIterationReport> {
    let solver: solvers::Solver = parse(solver)?;
    let cfg = config(tol, max_iters, restart, x0);
    let (sys, pc) = (&system.inner, &preconditioner.inner);
    let report = py
        .detach(|| solvers::solve(sys, pc, solver, &cfg))
        .map_err(to_py)?;
    Ok(report.into())
}

/// Solves once per `omega` in `grid`. Returns `(rows, best_omega)` with rows
/// `(omega, iterations, final_res, converged)`; failed builds or solves give
/// `None` for iterations and residual.
#[pyfunction]
#[pyo3(signature = (system, case, grid, solver = None, tol = 1e-6, max_iters = 5000, restart = 10))]
#[allow(clippy::type_complexity, clippy::too_many_arguments)]
fn omega_sweep(
    py: Python<'_>,
    system: &PySaddleSystem,
    case: &str,
    grid: Vec<f64>,
    solver: Option<&str>,
    tol: f64,
    max_iters: usize,
    restart: usize,
) -> PyResult<(Vec<(f64, Option<usize>, Option<f64>, bool)>, Option<f64>)> {
    let case: Case = parse(case)?;
    let solver = match solver {
        Some(s) => parse(s)?,
        None => case.stationary_solver(),
    };
    case.check_solver(solver).map_err(to_py)?;
    let cfg = config(tol, max_iters, restart, None);
    let sys = &system.inner;
    let res = py
        .detach(|| {
            solvers::omega_sweep(
                sys,
                case.family(),
                &case.p_kind(),
                &grid,
                solver,
                &cfg,
                PinvRank::default(),
            )
        })
        .map_err(to_py)?;
    let rows = res
        .entries
        .iter()
        .map(|e| {
            let r = e.report.as_ref();
            (
                e.omega,
                r.map(|r| r.iterations),
                r.map(|r| r.final_res),
                e.converged_iterations().is_some(),
            )
        })
        .collect();
    Ok((rows, res.best_omega))
}

/// Dense diagnostics of the stationary iteration for a singular case
/// (I..IV). Returns a dict.
#[pyfunction]
fn analyze<'py>(
    py: Python<'py>,
    system: &PySaddleSystem,
    case: &str,
    omega: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let case: Case = parse(case)?;
    let sys = &system.inner;
    let (report, sym, tri, pd) = py
        .detach(|| -> saddlekit::Result<_> {
            let pc = precond::Preconditioner::build(sys, case.family(), case.choice(omega))?;
            Ok((
                analysis::check_semiconvergence(sys, &pc)?,
                analysis::omega_bound_symmetric(sys.w())?,
                analysis::omega_bound_triangular(sys.w())?,
                analysis::pd_bound(sys.w())?,
            ))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("gamma_t", report.gamma_t)?;
    d.set_item("gamma_xpw", report.gamma_xpw)?;
    d.set_item("null_space_ok", report.null_space_ok)?;
    d.set_item("index_one_ok", report.index_one_ok)?;
    d.set_item("gamma_below_one", report.gamma_below_one)?;
    d.set_item("projector_eig_ones", report.projector_eig_ones)?;
    d.set_item("projector_eig_zeros", report.projector_eig_zeros)?;
    d.set_item("omega", report.omega_used)?;
    d.set_item("omega_bound_symmetric", sym)?;
    d.set_item("omega_bound_triangular", tri)?;
    d.set_item("pd_bound", pd)?;
    Ok(d)
}

/// `γ(X (P - W))` for a constraint preconditioner.
#[pyfunction]
fn convergence_indicator(
    py: Python<'_>,
    system: &PySaddleSystem,
    preconditioner: &PyPreconditioner,
) -> PyResult<f64> {
    let (sys, pc) = (&system.inner, &preconditioner.inner);
    py.detach(|| analysis::gcp_convergence_indicator(sys, pc))
        .map_err(to_py)
}

#[pyfunction]
fn omega_bounds(py: Python<'_>, system: &PySaddleSystem) -> PyResult<(f64, f64, f64)> {
    let w = system.inner.w();
    py.detach(|| -> saddlekit::Result<_> {
        Ok((
            analysis::omega_bound_symmetric(w)?,
            analysis::omega_bound_triangular(w)?,
            analysis::pd_bound(w)?,
        ))
    })
    .map_err(to_py)
}

/// Lid-driven cavity system on an `l x l` grid.
#[pyfunction]
#[pyo3(signature = (l, nu, rhs = "load", seed = 0))]
fn build_oseen(
    py: Python<'_>,
    l: usize,
    nu: f64,
    rhs: &str,
    seed: u64,
) -> PyResult<PySaddleSystem> {
    let rhs: Rhs = parse(rhs)?;
    let inner = py
        .detach(|| experiment::cavity_system(l, nu, rhs, seed))
        .map_err(to_py)?;
    Ok(PySaddleSystem { inner })
}

#[pyfunction]
fn build_random_singular(n: usize, m: usize, rank_b: usize, seed: u64) -> PyResult<PySaddleSystem> {
    Ok(PySaddleSystem {
        inner: problem::build_random_singular(n, m, rank_b, seed).map_err(to_py)?,
    })
}

/// Results table 2, 3 or 4 as CSV.
#[pyfunction]
#[pyo3(signature = (table_id, l, scope = "around", rhs = "manufactured", seed = 0, tol = 1e-6, max_iters = 5000, restart = 10))]
#[allow(clippy::too_many_arguments)]
fn table(
    py: Python<'_>,
    table_id: u8,
    l: usize,
    scope: &str,
    rhs: &str,
    seed: u64,
    tol: f64,
    max_iters: usize,
    restart: usize,
) -> PyResult<String> {
    let table = Table::from_id(table_id).map_err(to_py)?;
    let scope: Scope = parse(scope)?;
    let rhs: Rhs = parse(rhs)?;
    let cfg = config(tol, max_iters, restart, None);
    let rows = py
        .detach(|| experiment::run_table(table, l, scope, &cfg, rhs, seed))
        .map_err(to_py)?;
    Ok(experiment::table_csv(&rows))
}

#[pymodule]
#[pyo3(name = "saddlekit")]
pub fn saddlekit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SaddlekitError", m.py().get_type::<SaddlekitError>())?;
    m.add("DivergedError", m.py().get_type::<DivergedError>())?;
    m.add_class::<PySaddleSystem>()?;
    m.add_class::<PyPreconditioner>()?;
    m.add_class::<PyIterationReport>()?;
    m.add_function(wrap_pyfunction!(build_oseen, m)?)?;
    m.add_function(wrap_pyfunction!(build_random_singular, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(omega_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_indicator, m)?)?;
    m.add_function(wrap_pyfunction!(omega_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    Ok(())
}
