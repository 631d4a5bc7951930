//! Command-line front end: `gen`, `solve`, `sweep`, `analyze` and `table`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    check_semiconvergence, norm_certificates, omega_bound_symmetric, omega_bound_triangular,
    SpectralReport,
};
use crate::error::{Error, Result};
use crate::experiment::{
    apply_rhs, cavity_system, default_omega, parse_grid, run_table, table_csv, Case, Rhs, Scope,
    Table,
};
use crate::precond::{PKind, PinvRank, Preconditioner, Workspace};
use crate::problem::SaddleSystem;
use crate::solvers::{omega_sweep_in, solve, IterationReport, SolveConfig, Solver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Largest velocity count accepted by `analyze` (the `l = 16` cavity).
pub const ANALYZE_MAX_N: usize = 480;

#[derive(Debug, Parser)]
#[command(
    name = "saddlekit",
    version,
    about = "Preconditioned solvers for singular saddle-point systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the cavity system as Matrix Market files plus meta.json.
    Gen(GenArgs),
    /// Run one solve.
    Solve(SolveArgs),
    /// Solve over a grid of omega values.
    Sweep(SweepArgs),
    /// Dense spectral diagnostics (l <= 16).
    Analyze(AnalyzeArgs),
    /// Reproduce a results table as CSV or JSON.
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Cells per side.
    #[arg(short = 'l', long = "grid", default_value_t = 16)]
    pub l: usize,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    /// Right-hand side: load, manufactured or projected.
    #[arg(long, default_value = "manufactured")]
    pub rhs: Rhs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read the system from a directory written by `gen` instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

impl ProblemArgs {
    fn system(&self) -> Result<SaddleSystem> {
        match &self.input {
            Some(dir) => apply_rhs(SaddleSystem::import(dir)?, self.rhs, self.seed),
            None => cavity_system(self.l, self.nu, self.rhs, self.seed),
        }
    }

    fn grid(&self, system: &SaddleSystem) -> usize {
        system.meta.l.unwrap_or(self.l)
    }

    fn nu(&self, system: &SaddleSystem) -> f64 {
        system.meta.nu.unwrap_or(self.nu)
    }
}

#[derive(Debug, Args)]
pub struct IterArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// GMRES restart length.
    #[arg(long, default_value_t = 10)]
    pub restart: usize,
    /// Truncate the pseudoinverse of E to rank(B) singular values.
    #[arg(long)]
    pub rank_from_b: bool,
}

impl IterArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            restart: self.restart,
            x0: None,
        }
    }

    fn rank(&self) -> PinvRank {
        if self.rank_from_b {
            PinvRank::FromB
        } else {
            PinvRank::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long)]
    pub case: Case,
    /// gcp, stationary, gmres or qmr; defaults to the stationary scheme of the case.
    #[arg(long)]
    pub solver: Option<Solver>,
    /// Defaults to the reference value for the case, else 1.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the residual history as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long)]
    pub case: Case,
    #[arg(long)]
    pub solver: Option<Solver>,
    /// `a:b:step` or a comma-separated list.
    #[arg(long)]
    pub omega_grid: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub case: Case,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// 2 (stationary schemes), 3 (GMRES) or 4 (QMR).
    pub id: u8,
    #[arg(short = 'l', long = "grid", default_value_t = 16)]
    pub l: usize,
    /// reference, around or grid.
    #[arg(long, default_value = "around")]
    pub scope: Scope,
    #[arg(long, default_value = "manufactured")]
    pub rhs: Rhs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SolveOutput<'a> {
    case: Case,
    solver: Solver,
    l: Option<usize>,
    nu: Option<f64>,
    #[serde(flatten)]
    report: &'a IterationReport,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    omega: f64,
    iterations: Option<usize>,
    final_res: Option<f64>,
    converged: bool,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepOutput {
    case: Case,
    solver: Solver,
    rows: Vec<SweepRow>,
    best_omega: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalyzeOutput {
    case: Case,
    omega: f64,
    n: usize,
    m: usize,
    report: SpectralReport,
    omega_bound_symmetric: f64,
    omega_bound_triangular: f64,
    pd_bound: f64,
    /// Weighted norms of `X` and `P - W`, for the triangular split below its bound.
    x_norm: Option<f64>,
    pw_norm: Option<f64>,
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } | Error::Breakdown { .. } | Error::Stagnation { .. } => {
            EXIT_DIVERGED
        }
        Error::InvalidArgument(_)
        | Error::FamilyMismatch(_)
        | Error::GridTooCoarse(_)
        | Error::NotPositiveDefiniteSplit { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Table(a) => cmd_table(&a, out),
    }
}

fn emit(text: &str, out: &mut dyn Write, path: Option<&Path>) -> Result<()> {
    out.write_all(text.as_bytes())?;
    if let Some(p) = path {
        std::fs::write(p, text)?;
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn solver_for(case: Case, solver: Option<Solver>) -> Result<Solver> {
    let solver = solver.unwrap_or_else(|| case.stationary_solver());
    case.check_solver(solver)?;
    Ok(solver)
}

fn table_of(solver: Solver) -> Table {
    match solver {
        Solver::Gcp | Solver::Stationary => Table::Stationary,
        Solver::Gmres => Table::Gmres,
        Solver::Qmr => Table::Qmr,
    }
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let system = a.problem.system()?;
    system.export(&a.out)?;
    writeln!(
        out,
        "wrote {} (n = {}, m = {})",
        a.out.display(),
        system.n(),
        system.m()
    )?;
    Ok(EXIT_OK)
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let solver = solver_for(a.case, a.solver)?;
    let cfg = a.iter.config();
    cfg.validate()?;
    let system = a.problem.system()?;
    let (l, nu) = (a.problem.grid(&system), a.problem.nu(&system));
    let omega = a
        .omega
        .unwrap_or_else(|| default_omega(table_of(solver), nu, a.case, l));
    let ws = Workspace::new(&system);
    let pc = Preconditioner::build_in(&ws, a.case.family(), a.case.choice(omega), a.iter.rank())?;
    let report = solve(&system, &pc, solver, &cfg)?;
    if let Some(p) = &a.history {
        std::fs::write(p, report.history_csv())?;
    }
    let text = match a.format {
        Format::Json => to_json(&SolveOutput {
            case: a.case,
            solver,
            l: system.meta.l,
            nu: system.meta.nu,
            report: &report,
        })?,
        Format::Csv => format!(
            "case,solver,omega,converged,iterations,final_res\n{},{},{},{},{},{:e}\n",
            a.case, solver, omega, report.converged, report.iterations, report.final_res
        ),
    };
    emit(&text, out, a.out.as_deref())?;
    Ok(if report.converged {
        EXIT_OK
    } else {
        EXIT_MAX_ITERS
    })
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let solver = solver_for(a.case, a.solver)?;
    let mut grid = parse_grid(&a.omega_grid)?;
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let system = a.problem.system()?;
    let ws = Workspace::new(&system);
    let res = omega_sweep_in(
        &ws,
        a.case.family(),
        &a.case.p_kind(),
        &grid,
        solver,
        &a.iter.config(),
        a.iter.rank(),
    )?;
    let rows: Vec<SweepRow> = res
        .entries
        .iter()
        .map(|e| SweepRow {
            omega: e.omega,
            iterations: e.report.as_ref().map(|r| r.iterations),
            final_res: e.report.as_ref().map(|r| r.final_res),
            converged: e.converged_iterations().is_some(),
            error: e.error.clone(),
        })
        .collect();
    let text = match a.format {
        Format::Json => to_json(&SweepOutput {
            case: a.case,
            solver,
            rows,
            best_omega: res.best_omega,
        })?,
        Format::Csv => {
            let mut s = String::from("omega,iters,final_res,converged\n");
            for r in &rows {
                let it = r.iterations.map_or_else(|| "-".into(), |v| v.to_string());
                let fr = r.final_res.map_or_else(|| "-".into(), |v| format!("{v:e}"));
                s.push_str(&format!("{},{it},{fr},{}\n", r.omega, r.converged));
            }
            s
        }
    };
    emit(&text, out, a.out.as_deref())?;
    match res.best_omega {
        Some(w) => writeln!(err, "best omega: {w}")?,
        None => writeln!(err, "best omega: none converged")?,
    }
    Ok(EXIT_OK)
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    if a.problem.input.is_none() && a.problem.l > 16 {
        return Err(Error::InvalidArgument(format!(
            "analyze is limited to l <= 16, got l = {}",
            a.problem.l
        )));
    }
    if !a.case.family().is_singular() {
        return Err(Error::FamilyMismatch(format!(
            "case {} uses a nonsingular preconditioner; analyze covers cases I-IV",
            a.case
        )));
    }
    let system = a.problem.system()?;
    if system.n() > ANALYZE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "analyze is limited to n <= {ANALYZE_MAX_N}, got n = {}",
            system.n()
        )));
    }
    let ws = Workspace::new(&system);
    let pc = Preconditioner::build_in(
        &ws,
        a.case.family(),
        a.case.choice(a.omega),
        PinvRank::default(),
    )?;
    let report = check_semiconvergence(&system, &pc)?;
    let tri_bound = omega_bound_triangular(system.w())?;
    let (x_norm, pw_norm) = if pc.choice().kind == PKind::TriangularSplit && a.omega < tri_bound {
        let (x, pw) = norm_certificates(&system, &pc)?;
        (Some(x), Some(pw))
    } else {
        (None, None)
    };
    let o = AnalyzeOutput {
        case: a.case,
        omega: a.omega,
        n: system.n(),
        m: system.m(),
        report,
        omega_bound_symmetric: omega_bound_symmetric(system.w())?,
        omega_bound_triangular: tri_bound,
        pd_bound: ws.pd_bound()?,
        x_norm,
        pw_norm,
    };
    emit(&to_json(&o)?, out, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_table(a: &TableArgs, out: &mut dyn Write) -> Result<i32> {
    let table = Table::from_id(a.id)?;
    let rows = run_table(table, a.l, a.scope, &a.iter.config(), a.rhs, a.seed)?;
    let text = match a.format {
        Format::Csv => table_csv(&rows),
        Format::Json => to_json(&rows)?,
    };
    emit(&text, out, a.out.as_deref())?;
    Ok(EXIT_OK)
}
