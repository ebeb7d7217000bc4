use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SuperpositionCodebook;
use crate::channel::sample::sample_with;
use crate::channel::{FsbcKernel, StateLeg};
use crate::error::{Error, Result};
use crate::math::{exp, ln};

/// Decoder outputs for one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    /// Rx1's estimate of `m₁`.
    pub m1_rx1: usize,
    /// Rx1's estimate of `m₂`.
    pub m2_rx1: usize,
    /// Rx2's estimate of `m₂`.
    pub m2_rx2: usize,
}

impl Decision {
    pub fn rx1_error(&self, m1: usize, m2: usize) -> bool {
        self.m1_rx1 != m1 || self.m2_rx1 != m2
    }

    pub fn rx2_error(&self, m2: usize) -> bool {
        self.m2_rx2 != m2
    }
}

/// `ln p(oᴸ | xᴸ, s₀)` by the normalized forward recursion; `-∞` when the
/// outputs are impossible.
pub(crate) fn log_likelihood(leg: &StateLeg, s0: usize, xs: &[usize], os: &[usize]) -> f64 {
    let ns = leg.states();
    let mut alpha = vec![0.0; ns];
    let mut next = vec![0.0; ns];
    alpha[s0] = 1.0;
    let mut acc = 0.0;
    for (&x, &o) in xs.iter().zip(os) {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (sp, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &leg.row(sp, x)[o * ns..(o + 1) * ns];
            for (v, &p) in next.iter_mut().zip(row) {
                *v += a * p;
            }
        }
        let total: f64 = next.iter().sum();
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += ln(total);
        for (a, &v) in alpha.iter_mut().zip(&next) {
            *a = v / total;
        }
    }
    acc
}

/// Index of the largest value; the smallest index wins ties.
pub(crate) fn arg_max(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ln(values.iter().map(|&v| exp(v - m)).sum::<f64>())
}

/// Rx2's scores `ln Σ_{m₁} p(zᴸ | x(m₁, m₂), s₀)` for every `m₂`.
pub(crate) fn rx2_scores(m1: usize, z_loglik: &[f64]) -> Vec<f64> {
    z_loglik.chunks(m1).map(log_sum_exp).collect()
}

pub(crate) fn decide(m1: usize, y_loglik: &[f64], z_loglik: &[f64]) -> Decision {
    let c = arg_max(y_loglik);
    Decision {
        m1_rx1: c % m1,
        m2_rx1: c / m1,
        m2_rx2: arg_max(&rx2_scores(m1, z_loglik)),
    }
}

pub(crate) fn check_compatible(
    cb: &SuperpositionCodebook,
    kernel: &FsbcKernel,
    s0: usize,
) -> Result<()> {
    let d = kernel.dims();
    if d.x != cb.x_alphabet() {
        return Err(Error::InvalidArgument(alloc::format!(
            "codebook alphabet {} differs from channel input alphabet {}",
            cb.x_alphabet(),
            d.x
        )));
    }
    if s0 >= d.s {
        return Err(Error::InvalidArgument(alloc::format!(
            "initial state {s0} out of range"
        )));
    }
    Ok(())
}

/// ML decisions of both receivers for received `y` and `z`, with every
/// codeword scored by its exact likelihood given `s₀`.
pub fn decode_outputs(
    cb: &SuperpositionCodebook,
    kernel: &FsbcKernel,
    s0: usize,
    y: &[usize],
    z: &[usize],
) -> Result<Decision> {
    check_compatible(cb, kernel, s0)?;
    if y.len() != cb.len() || z.len() != cb.len() {
        return Err(Error::DimensionMismatch {
            what: "received block",
            expected: cb.len(),
            found: y.len().min(z.len()),
        });
    }
    let words = cb.all_codewords();
    Ok(decode_with(&words, cb.m1(), kernel, s0, y, z))
}

pub(crate) fn decode_with(
    words: &[Vec<usize>],
    m1: usize,
    kernel: &FsbcKernel,
    s0: usize,
    y: &[usize],
    z: &[usize],
) -> Decision {
    let ly: Vec<f64> = words
        .iter()
        .map(|w| log_likelihood(kernel.y_leg(), s0, w, y))
        .collect();
    let lz: Vec<f64> = words
        .iter()
        .map(|w| log_likelihood(kernel.z_leg(), s0, w, z))
        .collect();
    decide(m1, &ly, &lz)
}

/// Sends codeword `(m₁, m₂)` from state `s₀` with noise drawn from `seed`
/// and decodes at both receivers.
pub fn transmit_and_decode(
    cb: &SuperpositionCodebook,
    kernel: &FsbcKernel,
    s0: usize,
    m1: usize,
    m2: usize,
    seed: u64,
) -> Result<Decision> {
    check_compatible(cb, kernel, s0)?;
    if m1 >= cb.m1() || m2 >= cb.m2() {
        return Err(Error::InvalidArgument(alloc::format!(
            "message pair ({m1}, {m2}) out of range"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = sample_with(kernel, &cb.codeword(m1, m2), s0, &mut rng);
    let words = cb.all_codewords();
    Ok(decode_with(&words, cb.m1(), kernel, s0, &out.y, &out.z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::tests::bsc_broadcast;
    use crate::channel::Alphabets;

    fn noiseless() -> FsbcKernel {
        let mut probs = vec![0.0; 8];
        probs[0] = 1.0;
        probs[7] = 1.0;
        FsbcKernel::new("noiseless", Alphabets::new(2, 2, 2, 1), probs).unwrap()
    }

    #[test]
    fn likelihood_matches_product() {
        let k = bsc_broadcast(0.1);
        let l = log_likelihood(k.y_leg(), 0, &[0, 1, 1], &[0, 0, 1]);
        assert!((l - ln(0.9 * 0.1 * 0.9)).abs() < 1e-14);
        let n = noiseless();
        assert_eq!(log_likelihood(n.y_leg(), 0, &[0], &[1]), f64::NEG_INFINITY);
    }

    #[test]
    fn noiseless_distinct_codewords_decode() {
        let cb = SuperpositionCodebook::from_codewords(
            1,
            2,
            2,
            vec![vec![0, 0], vec![1, 1]],
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        )
        .unwrap();
        let k = noiseless();
        for m2 in 0..2 {
            for m1 in 0..2 {
                for seed in 0..5 {
                    let d = transmit_and_decode(&cb, &k, 0, m1, m2, seed).unwrap();
                    assert!(!d.rx1_error(m1, m2) && !d.rx2_error(m2));
                }
            }
        }
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let cb = SuperpositionCodebook::from_codewords(
            1,
            2,
            1,
            vec![vec![0], vec![0]],
            vec![vec![1], vec![1]],
        )
        .unwrap();
        let d = transmit_and_decode(&cb, &noiseless(), 0, 0, 1, 3).unwrap();
        assert_eq!(d.m2_rx1, 0);
        assert_eq!(d.m2_rx2, 0);
        assert!(d.rx2_error(1));
        assert_eq!(arg_max(&[f64::NEG_INFINITY; 3]), 0);
    }

    #[test]
    fn rx2_marginalizes_satellites() {
        let s = rx2_scores(2, &[ln(0.1), ln(0.3), ln(0.25), ln(0.05)]);
        assert!((s[0] - ln(0.4)).abs() < 1e-14);
        assert!((s[1] - ln(0.3)).abs() < 1e-14);
        assert_eq!(
            decide(
                2,
                &[0.0, 1.0, 2.0, 2.0],
                &[ln(0.1), ln(0.3), ln(0.25), ln(0.05)]
            ),
            Decision {
                m1_rx1: 0,
                m2_rx1: 1,
                m2_rx2: 0
            }
        );
    }
}
