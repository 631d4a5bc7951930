//! The six preconditioner cases of the cavity benchmark and the reference
//! parameter values used as sweep centres.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::precond::{Family, PChoice, PKind, PinvRank, Preconditioner, Workspace};
use crate::problem::{build_oseen, make_consistent_rhs, RhsMode, SaddleSystem};
use crate::solvers::{solve, thread_count, SolveConfig, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl Case {
    pub const ALL: [Case; 6] = [Case::I, Case::II, Case::III, Case::IV, Case::V, Case::VI];

    pub fn family(self) -> Family {
        match self {
            Case::I | Case::II => Family::Constraint,
            Case::III | Case::IV => Family::BlockDiag,
            Case::V | Case::VI => Family::BlockTri,
        }
    }

    /// Odd cases scale `H`, even cases use the triangular split.
    pub fn p_kind(self) -> PKind {
        match self {
            Case::I | Case::III | Case::V => PKind::SymmetricScaled,
            Case::II | Case::IV | Case::VI => PKind::TriangularSplit,
        }
    }

    pub fn choice(self, omega: f64) -> PChoice {
        PChoice {
            kind: self.p_kind(),
            omega,
        }
    }

    /// Stationary scheme matching the family.
    pub fn stationary_solver(self) -> Solver {
        if self.family().is_singular() {
            Solver::Gcp
        } else {
            Solver::Stationary
        }
    }

    /// Checks that `solver` can run this case.
    pub fn check_solver(self, solver: Solver) -> Result<()> {
        match (solver, self.family().is_singular()) {
            (Solver::Gcp, false) => Err(Error::FamilyMismatch(format!(
                "case {self} uses the nonsingular block-triangular preconditioner; run it with --solver stationary, gmres or qmr"
            ))),
            (Solver::Stationary, true) => Err(Error::FamilyMismatch(format!(
                "case {self} uses a singular preconditioner; run it with --solver gcp, gmres or qmr"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
            Case::V => "V",
            Case::VI => "VI",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Case::I),
            "II" | "2" => Ok(Case::II),
            "III" | "3" => Ok(Case::III),
            "IV" | "4" => Ok(Case::IV),
            "V" | "5" => Ok(Case::V),
            "VI" | "6" => Ok(Case::VI),
            _ => Err(Error::InvalidArgument(format!(
                "unknown case '{s}', expected I..VI"
            ))),
        }
    }
}

/// Which results table: 2 (stationary schemes), 3 (GMRES), 4 (QMR).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    Stationary,
    Gmres,
    Qmr,
}

impl Table {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            2 => Ok(Table::Stationary),
            3 => Ok(Table::Gmres),
            4 => Ok(Table::Qmr),
            _ => Err(Error::InvalidArgument(format!(
                "unknown table {id}, expected 2, 3 or 4"
            ))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Table::Stationary => 2,
            Table::Gmres => 3,
            Table::Qmr => 4,
        }
    }

    pub fn solver(self, case: Case) -> Solver {
        match self {
            Table::Stationary => case.stationary_solver(),
            Table::Gmres => Solver::Gmres,
            Table::Qmr => Solver::Qmr,
        }
    }
}

/// Viscosities covered by the tables.
pub const TABLE_NUS: [f64; 2] = [0.1, 0.001];

// Rows: (nu, case) in table order; columns: omega at l = 16 and l = 32.
// None marks cases that did not converge for any omega.
type OmegaRow = (f64, Case, Option<f64>, Option<f64>);

const STATIONARY_OMEGAS: [OmegaRow; 12] = [
    (0.1, Case::I, Some(1.00), Some(1.00)),
    (0.1, Case::II, Some(0.98), Some(0.99)),
    (0.1, Case::III, None, None),
    (0.1, Case::IV, None, None),
    (0.1, Case::V, None, None),
    (0.1, Case::VI, None, None),
    (0.001, Case::I, None, None),
    (0.001, Case::II, Some(0.08), Some(0.16)),
    (0.001, Case::III, None, None),
    (0.001, Case::IV, None, None),
    (0.001, Case::V, None, None),
    (0.001, Case::VI, None, None),
];

const GMRES_OMEGAS: [OmegaRow; 12] = [
    (0.1, Case::I, Some(1.50), Some(1.61)),
    (0.1, Case::II, Some(0.63), Some(0.64)),
    (0.1, Case::III, Some(0.03), Some(0.02)),
    (0.1, Case::IV, Some(0.02), Some(0.02)),
    (0.1, Case::V, Some(0.01), Some(0.02)),
    (0.1, Case::VI, None, None),
    (0.001, Case::I, Some(26.40), Some(28.62)),
    (0.001, Case::II, Some(0.04), Some(0.05)),
    (0.001, Case::III, Some(0.04), Some(0.02)),
    (0.001, Case::IV, Some(0.06), Some(0.10)),
    (0.001, Case::V, Some(0.02), Some(0.01)),
    (0.001, Case::VI, None, None),
];

const QMR_OMEGAS: [OmegaRow; 12] = [
    (0.1, Case::I, Some(1.52), Some(1.59)),
    (0.1, Case::II, Some(0.60), Some(0.63)),
    (0.1, Case::III, Some(2.12), Some(2.11)),
    (0.1, Case::IV, Some(1.00), Some(0.99)),
    (0.1, Case::V, Some(1.26), Some(1.11)),
    (0.1, Case::VI, Some(0.90), Some(0.85)),
    (0.001, Case::I, Some(24.10), Some(21.60)),
    (0.001, Case::II, Some(0.06), Some(0.05)),
    (0.001, Case::III, None, None),
    (0.001, Case::IV, Some(0.09), Some(0.11)),
    (0.001, Case::V, Some(28.35), Some(25.67)),
    (0.001, Case::VI, Some(0.02), Some(0.04)),
];

/// Reference optimal `ω` for a table cell. Grids finer than 32 use the
/// `l = 32` column, coarser ones the `l = 16` column.
pub fn reference_omega(table: Table, nu: f64, case: Case, l: usize) -> Option<f64> {
    let rows = match table {
        Table::Stationary => &STATIONARY_OMEGAS,
        Table::Gmres => &GMRES_OMEGAS,
        Table::Qmr => &QMR_OMEGAS,
    };
    rows.iter()
        .find(|(n, c, _, _)| (*n - nu).abs() <= 1e-12 * nu.abs() && *c == case)
        .and_then(|&(_, _, o16, o32)| if l >= 32 { o32 } else { o16 })
}

/// Default single-solve `ω`: the reference value, else 1.
pub fn default_omega(table: Table, nu: f64, case: Case, l: usize) -> f64 {
    reference_omega(table, nu, case, l).unwrap_or(1.0)
}

/// Multipliers applied to a reference `ω` when sweeping around it.
pub const AROUND_FACTORS: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];

/// Ten logarithmically spaced points from 2000 down to 0.002.
pub fn log_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..10)
        .map(|k| 2000.0 * 10f64.powf(-6.0 * k as f64 / 9.0))
        .collect();
    g.reverse();
    g
}

/// Sweep grid for a table cell.
pub fn table_grid(table: Table, nu: f64, case: Case, l: usize) -> Vec<f64> {
    match reference_omega(table, nu, case, l) {
        Some(w) => AROUND_FACTORS.iter().map(|f| round_sig(f * w)).collect(),
        None => log_grid(),
    }
}

// Trims representation noise such as 0.9 * 1.1 = 0.9900000000000001.
fn round_sig(x: f64) -> f64 {
    let s: f64 = format!("{x:.10e}").parse().unwrap();
    s
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, ...`, or a
/// comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::InvalidArgument(format!(
            "bad omega grid '{spec}', expected a:b:step or a,b,c"
        ))
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(num).collect::<Result<_>>()?;
        let [a, b, step] = parts[..] else {
            return Err(bad());
        };
        if step <= 0.0 || step.is_nan() || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad());
        }
        (0..count).map(|k| round_sig(a + k as f64 * step)).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "omega grid '{spec}' must hold positive values"
        )));
    }
    Ok(grid)
}

/// Right-hand side used for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhs {
    /// The lid-driven load assembled with the operator.
    Load,
    Manufactured,
    Projected,
}

impl FromStr for Rhs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "load" => Ok(Rhs::Load),
            "manufactured" => Ok(Rhs::Manufactured),
            "projected" => Ok(Rhs::Projected),
            other => Err(Error::InvalidArgument(format!(
                "unknown rhs '{other}', expected load, manufactured or projected"
            ))),
        }
    }
}

/// Replaces the right-hand side of `system` as requested.
pub fn apply_rhs(system: SaddleSystem, rhs: Rhs, seed: u64) -> Result<SaddleSystem> {
    let mode = match rhs {
        Rhs::Load => return Ok(system),
        Rhs::Manufactured => RhsMode::Manufactured,
        Rhs::Projected => RhsMode::Projected,
    };
    let b = make_consistent_rhs(&system, mode, seed)?;
    system.with_rhs(&b)
}

/// Cavity system on an `l x l` grid with the requested right-hand side.
pub fn cavity_system(l: usize, nu: f64, rhs: Rhs, seed: u64) -> Result<SaddleSystem> {
    apply_rhs(build_oseen(l, nu)?, rhs, seed)
}

/// How the `ω` grid of each table cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Reference `ω` only; cells without one use the log grid.
    Reference,
    /// Reference `ω` times [`AROUND_FACTORS`], else the log grid.
    Around,
    /// The log grid for every cell.
    Grid,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Scope::Reference),
            "around" => Ok(Scope::Around),
            "grid" => Ok(Scope::Grid),
            other => Err(Error::InvalidArgument(format!(
                "unknown scope '{other}', expected reference, around or grid"
            ))),
        }
    }
}

pub fn scoped_grid(table: Table, nu: f64, case: Case, l: usize, scope: Scope) -> Vec<f64> {
    match (scope, reference_omega(table, nu, case, l)) {
        (Scope::Reference, Some(w)) => vec![w],
        (Scope::Around, Some(_)) => table_grid(table, nu, case, l),
        _ => log_grid(),
    }
}

/// One table cell: best converged `ω` and its iteration count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub nu: f64,
    pub case: Case,
    pub solver: Solver,
    pub omega: Option<f64>,
    pub iterations: Option<usize>,
    pub final_res: Option<f64>,
}

/// Runs every (ν, case) cell of a table on an `l x l` grid. Output order is
/// fixed: ν as listed in [`TABLE_NUS`], then cases I..VI.
pub fn run_table(
    table: Table,
    l: usize,
    scope: Scope,
    cfg: &SolveConfig,
    rhs: Rhs,
    seed: u64,
) -> Result<Vec<TableRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut rows = Vec::new();
    for nu in TABLE_NUS {
        let system = cavity_system(l, nu, rhs, seed)?;
        let ws = Workspace::new(&system);
        let jobs: Vec<(Case, f64)> = Case::ALL
            .iter()
            .flat_map(|&c| {
                scoped_grid(table, nu, c, l, scope)
                    .into_iter()
                    .map(move |w| (c, w))
            })
            .collect();
        let outcomes: Vec<Option<(usize, f64)>> = pool.install(|| {
            jobs.par_iter()
                .map(|&(case, omega)| {
                    let pc = Preconditioner::build_in(
                        &ws,
                        case.family(),
                        case.choice(omega),
                        PinvRank::default(),
                    )
                    .ok()?;
                    let report = solve(&system, &pc, table.solver(case), cfg).ok()?;
                    report
                        .converged
                        .then_some((report.iterations, report.final_res))
                })
                .collect()
        });
        for case in Case::ALL {
            let best = jobs
                .iter()
                .zip(&outcomes)
                .filter(|((c, _), _)| *c == case)
                .filter_map(|(&(_, w), o)| o.map(|(it, res)| (it, w, res)))
                .min_by_key(|&(it, _, _)| it);
            rows.push(TableRow {
                nu,
                case,
                solver: table.solver(case),
                omega: best.map(|b| b.1),
                iterations: best.map(|b| b.0),
                final_res: best.map(|b| b.2),
            });
        }
    }
    Ok(rows)
}

/// CSV with header `nu,case,solver,omega,it,res`; `-` marks cells that did
/// not converge.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("nu,case,solver,omega,it,res\n");
    for r in rows {
        let dash = || "-".to_string();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.nu,
            r.case,
            r.solver,
            r.omega.map_or_else(dash, |w| format!("{w}")),
            r.iterations.map_or_else(dash, |it| it.to_string()),
            r.final_res.map_or_else(dash, |res| format!("{res:.3e}")),
        ));
    }
    s
}
