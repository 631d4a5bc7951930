pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod precond;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};
