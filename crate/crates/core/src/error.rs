use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("QR eigenvalue iteration exceeded its cap for a {n}x{n} matrix")]
    EigenNoConvergence { n: usize },

    #[error("matrix not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("singular triangular matrix: zero diagonal at {0}")]
    SingularTriangular(usize),

    #[error("matrix not symmetric positive definite (eigenvalue {0:e})")]
    NotSpd(f64),

    #[error("grid too coarse: l = {0}, need l >= 4")]
    GridTooCoarse(usize),

    #[error(
        "triangular-split P is not positive definite: omega = {omega} must be below 1/||L_s||_2 = {bound}"
    )]
    NotPositiveDefiniteSplit { omega: f64, bound: f64 },

    #[error("preconditioner family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("iteration diverged at step {iteration} (last finite RES = {last_res:e})")]
    Diverged { iteration: usize, last_res: f64 },

    #[error("breakdown at iteration {iteration}: {what}")]
    Breakdown { iteration: usize, what: String },

    #[error("GMRES stagnated at iteration {iteration} (RES = {res:e})")]
    Stagnation { iteration: usize, res: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
