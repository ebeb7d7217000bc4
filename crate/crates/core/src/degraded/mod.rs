//! Degradedness certification and indecomposability.
//!
//! - [`check_physical_degraded`] tests the two causal conditional-independence
//!   conditions exhaustively up to a blocklength.
//! - [`find_degrading_kernel`] searches for a state-independent memoryless
//!   `p̃(z | y)` that turns the Y leg into the Z leg.
//! - [`verify_block_degrading`] checks that such a kernel also works on blocks.
//! - [`check_indecomposable`] decides whether the initial state is forgotten.

mod indecomposable;
mod physical;
mod stochastic;

pub use indecomposable::{
    check_indecomposable, IndecomposabilityConfig, IndecomposabilityReport,
    IndecomposabilityVerdict,
};
pub use physical::{check_physical_degraded, Condition, PhysicalReport, PhysicalVerdict, Witness};
pub use stochastic::{
    find_degrading_kernel, verify_block_degrading, DegradingSearch, StochasticReport,
    StochasticVerdict,
};
