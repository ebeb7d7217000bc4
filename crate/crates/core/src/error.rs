use alloc::boxed::Box;
use alloc::string::String;

use crate::degraded::StochasticReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{what}: row {row} sums to {sum} (must be 1)")]
    NotStochastic {
        what: &'static str,
        row: usize,
        sum: f64,
    },
    #[error("{what}: entry {index} is negative ({value})")]
    NegativeEntry {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{what}: entry {index} is not finite")]
    NonFinite { what: &'static str, index: usize },
    #[error("alphabet {name} has size {size}, allowed range is 1..={cap}")]
    AlphabetSize {
        name: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("invalid channel family: {0}")]
    InvalidSpec(String),
    #[error("argument outside its domain: {0}")]
    DomainError(String),
    #[error("enumeration of {what} needs {cells} cells, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        cells: u128,
        budget: u64,
    },
    #[error("degrading-kernel solver stalled (best residual {:e})", .best.residual)]
    SolverStalled { best: Box<StochasticReport> },
    #[error("regions are built on different lambda grids")]
    GridMismatch,
    #[error("support function has no lines")]
    EmptySupport,
    #[error("message set for {receiver} would hold {size} messages, cap is {cap}")]
    RateTooHigh {
        receiver: &'static str,
        size: u128,
        cap: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
