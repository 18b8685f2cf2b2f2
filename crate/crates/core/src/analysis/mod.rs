//! Brute-force lattice Riemann sums and convergence studies of truncated
//! expansions against them.

mod convergence;
mod report_csv;
mod riemann;

use thiserror::Error;

pub use convergence::{
    convergence_report, fit_log_slope, ConvergenceConfig, ConvergenceReport, ConvergenceRow,
    SlopeFit,
};
pub use report_csv::{read_report_csv, write_report_csv, ParsedReport, CSV_COLUMNS};
pub use riemann::{
    lattice_count, riemann_sum, RiemannOptions, RiemannSum, SumRegion, DEFAULT_POINT_BUDGET,
};

use crate::expansion::ExpansionError;
use crate::functions::FunctionError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("enumeration needs about {estimate:.3e} lattice points, budget is {budget}")]
    TooManyPoints { estimate: f64, budget: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for AnalysisError {
    fn from(e: csv::Error) -> Self {
        AnalysisError::Csv(e.to_string())
    }
}
