//! Numerical toolkit for degraded finite-state broadcast channels (FSBCs).
//!
//! A finite-state broadcast channel is described by a one-step law
//! `p(y, z, s | x, s')`: the transmitter sends `x`, the strong receiver sees
//! `y`, the weak receiver sees `z`, and a hidden state moves from `s'` to `s`.
//! This crate works on such channels at blocklengths small enough to be
//! enumerated exactly:
//!
//! - [`channel`]: validated kernels, the binary symmetric broadcast family,
//!   exact block laws by forward recursion, and sampling.
//! - [`degraded`]: physical / stochastic degradedness and indecomposability.
//! - [`region`]: the n-letter rate functionals, the support function
//!   `F_n(λ)`, its λ-sweep and the resulting rate-region boundary.
//! - [`coding`]: superposition codebooks, exact maximum-likelihood decoding,
//!   Monte Carlo error estimates and a Fano-inequality self check.
//!
//! All logarithms are base 2. The crate is `no_std` (it needs `alloc`);
//! enable the `parallel` feature to spread independent work over rayon.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod coding;
pub mod degraded;
mod error;
pub mod math;
mod par;
pub mod region;

pub use channel::{
    block_law, build_bsbc_family, compose_degraded, crossover_compose, crossover_residual,
    sample_block, state_transition_products, validate_kernel, Alphabets, BlockLaw, BsbcFamilySpec,
    DegradingKernel, FsbcKernel, Limits, StateLeg,
};
pub use coding::{
    build_codebook, estimate_error, exact_error, fano_diagnostic, transmit_and_decode, ErrorStats,
    FanoReport, SuperpositionCodebook,
};
pub use degraded::{
    check_indecomposable, check_physical_degraded, find_degrading_kernel, verify_block_degrading,
    IndecomposabilityReport, PhysicalReport, StochasticReport,
};
pub use error::{Error, Result};
pub use region::{
    boundary_from_support, intersect_regions, optimize_fn, rate_pair, supadditivity_check,
    sweep_support, JointInputLaw, OptimizerConfig, RatePair, RateRegion, SupportFunction,
};
