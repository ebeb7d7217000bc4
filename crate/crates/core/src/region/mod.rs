//! Rate functionals, the support function `F_n(λ)` and rate-region boundaries.
//!
//! For a joint law `q(uⁿ, xⁿ)` and initial state `s₀`:
//!
//! ```text
//! R_{1,n}(q, s₀) = I(Xⁿ; Yⁿ | Uⁿ, s₀) / n - log2|S| / n
//! R_{2,n}(q, s₀) = I(Uⁿ; Zⁿ | s₀) / n      - log2|S| / n
//! F_n(λ)         = max_q { min_s₀ R_{2,n}(q, s₀) + λ min_s₀' R_{1,n}(q, s₀') }
//! R₂(R₁)         = inf_{0 ≤ λ ≤ 1} { F_n(λ) - λ R₁ }
//! ```
//!
//! The region at blocklength `n` is the set of `(R₀, R₁, R₂) ≥ 0` with
//! `R₀ + R₂ ≤ F_n(λ) - λ R₁` for every λ on the grid.

mod boundary;
mod optimize;
mod rates;
mod supadd;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{Alphabets, Limits};
use crate::error::{Error, Result};

pub use boundary::{
    boundary_from_support, compare_intersection, default_r1_grid, intersect_regions,
    IntersectionReport, RateRegion, SupportLines,
};
pub use optimize::{
    optimize_fn, optimize_fn_for_state, sweep_support, uniform_lambda_grid, RegionSolver,
    SupportFunction, SupportPoint,
};
pub use rates::{rate_pair, RateEvaluator, RatePair};
pub use supadd::{convergence_trend, supadditivity_check, SupAddReport, TrendReport};

/// A joint law `q(uⁿ, xⁿ)`, stored row-major with the auxiliary symbol as the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointInputLaw {
    n: usize,
    u_card: usize,
    x_blocks: usize,
    probs: Vec<f64>,
}

impl JointInputLaw {
    pub fn new(n: usize, u_card: usize, x_blocks: usize, probs: Vec<f64>) -> Result<Self> {
        if n == 0 || u_card == 0 || x_blocks == 0 || probs.len() != u_card * x_blocks {
            return Err(Error::DimensionMismatch {
                what: "joint input law",
                expected: u_card * x_blocks,
                found: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::NegativeEntry {
                    what: "joint input law",
                    index,
                    value,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > crate::channel::VALIDATION_TOL {
            return Err(Error::NotStochastic {
                what: "joint input law",
                row: 0,
                sum,
            });
        }
        Ok(JointInputLaw {
            n,
            u_card,
            x_blocks,
            probs,
        })
    }

    /// Renormalizes an optimizer iterate; the caller guarantees nonnegativity.
    pub(crate) fn from_weights(
        n: usize,
        u_card: usize,
        x_blocks: usize,
        mut probs: Vec<f64>,
    ) -> Self {
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        JointInputLaw {
            n,
            u_card,
            x_blocks,
            probs,
        }
    }

    /// `min{|X|, |Y|, |Z|}ⁿ`: the auxiliary cardinality that suffices.
    pub fn cardinality_cap(dims: Alphabets, n: usize) -> usize {
        dims.x.min(dims.y).min(dims.z).pow(n as u32)
    }

    pub fn uniform(n: usize, u_card: usize, x_blocks: usize) -> Self {
        let w = 1.0 / (u_card * x_blocks) as f64;
        JointInputLaw {
            n,
            u_card,
            x_blocks,
            probs: vec![w; u_card * x_blocks],
        }
    }

    /// `Xⁿ` uniform and `Uⁿ = Xⁿ mod |U|` (equal to `Xⁿ` when `|U| = |X|ⁿ`).
    pub fn u_equals_x(n: usize, u_card: usize, x_blocks: usize) -> Self {
        let mut probs = vec![0.0; u_card * x_blocks];
        for x in 0..x_blocks {
            probs[(x % u_card) * x_blocks + x] = 1.0 / x_blocks as f64;
        }
        JointInputLaw {
            n,
            u_card,
            x_blocks,
            probs,
        }
    }

    /// `Xⁿ` uniform, `Uⁿ` constant.
    pub fn u_constant(n: usize, u_card: usize, x_blocks: usize) -> Self {
        let mut probs = vec![0.0; u_card * x_blocks];
        probs[..x_blocks]
            .iter_mut()
            .for_each(|p| *p = 1.0 / x_blocks as f64);
        JointInputLaw {
            n,
            u_card,
            x_blocks,
            probs,
        }
    }

    /// Independent concatenation: `q(u₁u₂, x₁x₂) = q₁(u₁, x₁) q₂(u₂, x₂)`.
    pub fn product(first: &JointInputLaw, second: &JointInputLaw) -> Self {
        let u_card = first.u_card * second.u_card;
        let x_blocks = first.x_blocks * second.x_blocks;
        let mut probs = vec![0.0; u_card * x_blocks];
        for u1 in 0..first.u_card {
            for x1 in 0..first.x_blocks {
                let a = first.prob(u1, x1);
                if a == 0.0 {
                    continue;
                }
                for u2 in 0..second.u_card {
                    for x2 in 0..second.x_blocks {
                        let u = u1 * second.u_card + u2;
                        let x = x1 * second.x_blocks + x2;
                        probs[u * x_blocks + x] = a * second.prob(u2, x2);
                    }
                }
            }
        }
        JointInputLaw {
            n: first.n + second.n,
            u_card,
            x_blocks,
            probs,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u_card(&self) -> usize {
        self.u_card
    }

    pub fn x_blocks(&self) -> usize {
        self.x_blocks
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, u: usize, x: usize) -> f64 {
        self.probs[u * self.x_blocks + x]
    }

    pub fn marginal_u(&self) -> Vec<f64> {
        self.probs
            .chunks(self.x_blocks)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Unnormalized row `q(u, ·)`.
    pub fn row(&self, u: usize) -> &[f64] {
        &self.probs[u * self.x_blocks..(u + 1) * self.x_blocks]
    }
}

/// Settings for the support-function optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub starts: usize,
    /// Iteration cap per smoothing phase.
    pub max_iters: usize,
    pub seed: u64,
    /// Auxiliary cardinality; `None` uses the full cap `min{|X|,|Y|,|Z|}ⁿ`.
    pub u_card: Option<usize>,
    /// Run the exhaustive grid oracle when the simplex has at most 4 free
    /// dimensions.
    pub grid_oracle: bool,
    pub oracle_step: f64,
    pub limits: Limits,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            starts: 32,
            max_iters: 1000,
            seed: 0,
            u_card: None,
            grid_oracle: true,
            oracle_step: 0.05,
            limits: Limits::default(),
        }
    }
}
