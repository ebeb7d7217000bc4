use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{FsbcKernel, Limits};
use crate::error::{Error, Result};
use crate::math::checked_pow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndecomposabilityVerdict {
    Indecomposable,
    NotIndecomposable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndecomposabilityConfig {
    pub eps_target: f64,
    pub n_max: usize,
}

impl Default for IndecomposabilityConfig {
    fn default() -> Self {
        IndecomposabilityConfig {
            eps_target: 0.05,
            n_max: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndecomposabilityReport {
    pub verdict: IndecomposabilityVerdict,
    /// Smallest `N` with `d(N) < eps_target`.
    pub n_reached: Option<usize>,
    /// `d(n)` for `n = 1..=n_max`: the largest `|p(s_n|xⁿ,s₀) - p(s_n|xⁿ,s₀')|`.
    pub deviation: Vec<f64>,
    /// Smallest `N` at which every `T_{x1}⋯T_{xN}` has a strictly positive column.
    pub positive_column_at: Option<usize>,
    /// Two initial states whose reachable state sets stay disjoint forever
    /// under some input sequence.
    pub separated_states: Option<(usize, usize)>,
    pub eps_target: f64,
    pub n_max: usize,
}

struct Walk<'a> {
    kernel: &'a FsbcKernel,
    ns: usize,
    n_max: usize,
    deviation: Vec<f64>,
    all_have_positive_column: Vec<bool>,
}

impl Walk<'_> {
    fn visit(&mut self, depth: usize, product: &[f64]) {
        let ns = self.ns;
        let mut dev: f64 = 0.0;
        for col in 0..ns {
            let (lo, hi) = (0..ns).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                let v = product[r * ns + col];
                (lo.min(v), hi.max(v))
            });
            dev = dev.max(hi - lo);
        }
        self.deviation[depth - 1] = self.deviation[depth - 1].max(dev);
        let positive = (0..ns).any(|col| (0..ns).all(|r| product[r * ns + col] > 0.0));
        if !positive {
            self.all_have_positive_column[depth - 1] = false;
        }
        if depth == self.n_max {
            return;
        }
        for x in 0..self.kernel.dims().x {
            let next = crate::channel::block::mat_mul(product, self.kernel.transition(x), ns);
            self.visit(depth + 1, &next);
        }
    }
}

/// Searches for two initial states and an infinite input sequence along
/// which the supports of `p(s_n | xⁿ, s₀)` and `p(s_n | xⁿ, s₀')` never meet.
///
/// Works on pairs of state subsets: the pairs from which some input keeps
/// the two supports disjoint forever are the greatest fixed point of
/// "has a successor pair that is disjoint and still in the set".
fn separated_pair(kernel: &FsbcKernel) -> Option<(usize, usize)> {
    let ns = kernel.dims().s;
    if !(2..=12).contains(&ns) {
        return None;
    }
    let nx = kernel.dims().x;
    let succ = |mask: usize, x: usize| -> usize {
        let t = kernel.transition(x);
        let mut out = 0;
        for s in 0..ns {
            if mask >> s & 1 == 1 {
                for n in 0..ns {
                    if t[s * ns + n] > 0.0 {
                        out |= 1 << n;
                    }
                }
            }
        }
        out
    };
    let full = 1usize << ns;
    let mut alive = vec![false; full * full];
    for a in 1..full {
        for b in 1..full {
            alive[a * full + b] = a & b == 0;
        }
    }
    loop {
        let mut changed = false;
        for a in 1..full {
            for b in 1..full {
                if !alive[a * full + b] {
                    continue;
                }
                let keeps = (0..nx).any(|x| alive[succ(a, x) * full + succ(b, x)]);
                if !keeps {
                    alive[a * full + b] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for s in 0..ns {
        for t in s + 1..ns {
            if alive[(1 << s) * full + (1 << t)] {
                return Some((s, t));
            }
        }
    }
    None
}

/// Decides whether the influence of the initial state on the current state
/// vanishes uniformly over input sequences.
///
/// Returns `indecomposable` only with two pieces of evidence: the deviation
/// trace drops below `eps_target`, and for some `N` every product
/// `T_{x1}⋯T_{xN}` has a strictly positive column (which forces geometric
/// contraction). Returns `not-indecomposable` only with a structural
/// certificate; slow decay alone gives `inconclusive`.
pub fn check_indecomposable(
    kernel: &FsbcKernel,
    config: &IndecomposabilityConfig,
    limits: &Limits,
) -> Result<IndecomposabilityReport> {
    if config.n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let d = kernel.dims();
    let ns = d.s;
    let sequences = checked_pow(d.x, config.n_max).map(|c| c * (ns * ns) as u128);
    limits.check_cells("input blocks xⁿ for state products", sequences)?;
    let mut walk = Walk {
        kernel,
        ns,
        n_max: config.n_max,
        deviation: vec![0.0; config.n_max],
        all_have_positive_column: vec![true; config.n_max],
    };
    for x in 0..d.x {
        walk.visit(1, kernel.transition(x));
    }
    let n_reached = walk
        .deviation
        .iter()
        .position(|&v| v < config.eps_target)
        .map(|i| i + 1);
    let positive_column_at = walk
        .all_have_positive_column
        .iter()
        .position(|&b| b)
        .map(|i| i + 1);
    let separated_states = separated_pair(kernel);
    let verdict = if n_reached.is_some() && positive_column_at.is_some() {
        IndecomposabilityVerdict::Indecomposable
    } else if separated_states.is_some() {
        IndecomposabilityVerdict::NotIndecomposable
    } else {
        IndecomposabilityVerdict::Inconclusive
    };
    Ok(IndecomposabilityReport {
        verdict,
        n_reached,
        deviation: walk.deviation,
        positive_column_at,
        separated_states,
        eps_target: config.eps_target,
        n_max: config.n_max,
    })
}
