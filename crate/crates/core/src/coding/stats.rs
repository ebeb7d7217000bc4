use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decode::{check_compatible, decode_with, log_likelihood};
use super::SuperpositionCodebook;
use crate::channel::sample::sample_with;
use crate::channel::{FsbcKernel, Limits};
use crate::error::{Error, Result};
use crate::math::{checked_pow, decode_block, derive_seed, exp, sqrt};
use crate::par::map_range;

/// Normal-approximation 95% half-width of a binomial proportion.
fn half_width(p: f64, trials: usize) -> f64 {
    1.96 * sqrt(p * (1.0 - p) / trials as f64)
}

/// Error frequencies for one initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateError {
    pub s0: usize,
    pub trials: usize,
    /// Trials where either receiver erred.
    pub errors: usize,
    pub p_e: f64,
    pub half_width: f64,
    pub rx1_errors: usize,
    pub rx1: f64,
    pub rx1_half_width: f64,
    pub rx2_errors: usize,
    pub rx2: f64,
    pub rx2_half_width: f64,
}

impl StateError {
    fn new(s0: usize, trials: usize, errors: usize, rx1_errors: usize, rx2_errors: usize) -> Self {
        let f = |e: usize| e as f64 / trials as f64;
        let (p, p1, p2) = (f(errors), f(rx1_errors), f(rx2_errors));
        StateError {
            s0,
            trials,
            errors,
            p_e: p,
            half_width: half_width(p, trials),
            rx1_errors,
            rx1: p1,
            rx1_half_width: half_width(p1, trials),
            rx2_errors,
            rx2: p2,
            rx2_half_width: half_width(p2, trials),
        }
    }
}

/// Monte Carlo error estimate; the overall figures are maxima over `s₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub trials: usize,
    pub per_state: Vec<StateError>,
    pub p_e: f64,
    pub rx1: f64,
    pub rx2: f64,
    /// Initial state with the largest `p_e` (lowest index on ties).
    pub worst_state: usize,
}

/// Sends `trials` uniformly drawn message pairs from every initial state with
/// fresh channel noise and counts decoding errors. Trial `t` from `s₀` uses
/// the seed derived from `(seed, s₀, t)`, so the result does not depend on
/// how trials are scheduled.
pub fn estimate_error(
    cb: &SuperpositionCodebook,
    kernel: &FsbcKernel,
    trials: usize,
    seed: u64,
) -> Result<ErrorStats> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    check_compatible(cb, kernel, 0)?;
    let words = cb.all_codewords();
    let per_state: Vec<StateError> = (0..kernel.dims().s)
        .map(|s0| {
            let outcomes = map_range(trials, |t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[s0 as u64, t as u64]));
                let m1 = rng.random_range(0..cb.m1());
                let m2 = rng.random_range(0..cb.m2());
                let out = sample_with(kernel, &words[m2 * cb.m1() + m1], s0, &mut rng);
                let d = decode_with(&words, cb.m1(), kernel, s0, &out.y, &out.z);
                (d.rx1_error(m1, m2), d.rx2_error(m2))
            });
            let rx1 = outcomes.iter().filter(|o| o.0).count();
            let rx2 = outcomes.iter().filter(|o| o.1).count();
            let either = outcomes.iter().filter(|o| o.0 || o.1).count();
            StateError::new(s0, trials, either, rx1, rx2)
        })
        .collect();
    let worst_state =
        per_state
            .iter()
            .enumerate()
            .fold(0, |w, (i, s)| if s.p_e > per_state[w].p_e { i } else { w });
    let max = |f: fn(&StateError) -> f64| per_state.iter().map(f).fold(0.0, f64::max);
    Ok(ErrorStats {
        trials,
        p_e: per_state[worst_state].p_e,
        rx1: max(|s| s.rx1),
        rx2: max(|s| s.rx2),
        worst_state,
        per_state,
    })
}

/// Exact error probabilities of the ML decoders under uniform messages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactError {
    pub s0: usize,
    pub p_e: f64,
    pub rx1: f64,
    pub rx2: f64,
}

/// Enumerates every joint output `(yᴸ, zᴸ)` and sums the probability of
/// each decoding error.
pub fn exact_error(
    cb: &SuperpositionCodebook,
    kernel: &FsbcKernel,
    s0: usize,
    limits: &Limits,
) -> Result<ExactError> {
    check_compatible(cb, kernel, s0)?;
    let d = kernel.dims();
    let len = cb.len();
    let words = cb.all_codewords();
    let outputs = limits.check_cells("joint output sequences", checked_pow(d.y * d.z, len))?;
    let cells = outputs.checked_mul(words.len() as u128);
    limits.check_cells("codewords x joint output sequences", cells)?;
    let weight = 1.0 / words.len() as f64;
    let parts = map_range(outputs as usize, |j| {
        let joint = decode_block(j, d.y * d.z, len);
        let y: Vec<usize> = joint.iter().map(|o| o / d.z).collect();
        let z: Vec<usize> = joint.iter().map(|o| o % d.z).collect();
        let dec = decode_with(&words, cb.m1(), kernel, s0, &y, &z);
        let mut acc = [0.0; 3];
        for (c, w) in words.iter().enumerate() {
            let p = exp(log_likelihood(kernel.joint_leg(), s0, w, &joint)) * weight;
            if p == 0.0 {
                continue;
            }
            let (m1, m2) = (c % cb.m1(), c / cb.m1());
            let (e1, e2) = (dec.rx1_error(m1, m2), dec.rx2_error(m2));
            if e1 || e2 {
                acc[0] += p;
            }
            if e1 {
                acc[1] += p;
            }
            if e2 {
                acc[2] += p;
            }
        }
        acc
    });
    let total = parts
        .iter()
        .fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]]);
    Ok(ExactError {
        s0,
        p_e: total[0],
        rx1: total[1],
        rx2: total[2],
    })
}
