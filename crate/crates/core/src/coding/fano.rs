use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::decode::{arg_max, check_compatible, log_likelihood, rx2_scores};
use super::SuperpositionCodebook;
use crate::channel::{FsbcKernel, Limits, StateLeg};
use crate::error::Result;
use crate::math::{checked_pow, decode_block, exp, log2};
use crate::par::map_range;

/// Exact conditional entropies of the messages next to the Fano bounds
/// `H(M₂ | Zᴸ, s₀) ≤ P_e₂ log2|M₂| + 1` and `H(M₁ | Yᴸ, s₀) ≤ P_e₁ log2|M₁| + 1`.
///
/// `log2|M|` stands for `L R` with `L = K n`; it is at least the nominal
/// `L R` because set sizes are rounded up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoReport {
    pub s0: usize,
    pub block_len: usize,
    pub log2_m1: f64,
    pub log2_m2: f64,
    pub h_m2_given_z: f64,
    /// Error probability of Rx2's ML estimate of `m₂`.
    pub p_e2: f64,
    pub bound_2: f64,
    pub slack_2: f64,
    pub holds_2: bool,
    pub h_m1_given_y: f64,
    /// Error probability of Rx1's estimate of `m₁`.
    pub p_e1: f64,
    pub bound_1: f64,
    pub slack_1: f64,
    pub holds_1: bool,
}

impl FanoReport {
    pub fn holds(&self) -> bool {
        self.holds_1 && self.holds_2
    }
}

/// `H(M | O)` and the error of `estimate` given the table
/// `likelihood[c][o] = p(o | codeword c)` and a map from codewords to
/// messages.
fn entropy_and_error(
    likelihood: &[Vec<f64>],
    outputs: usize,
    messages: usize,
    message_of: impl Fn(usize) -> usize,
    estimate: &[usize],
) -> (f64, f64) {
    let weight = 1.0 / likelihood.len() as f64;
    let mut h = 0.0;
    let mut err = 0.0;
    let mut joint = vec![0.0; messages];
    for o in 0..outputs {
        joint.iter_mut().for_each(|v| *v = 0.0);
        for (c, row) in likelihood.iter().enumerate() {
            joint[message_of(c)] += weight * row[o];
        }
        let p_o: f64 = joint.iter().sum();
        for (m, &p) in joint.iter().enumerate() {
            if p > 0.0 {
                h -= p * log2(p / p_o);
                if m != estimate[o] {
                    err += p;
                }
            }
        }
    }
    (h, err)
}

fn leg_table(
    leg: &StateLeg,
    s0: usize,
    words: &[Vec<usize>],
    radix: usize,
    len: usize,
    outputs: usize,
) -> Vec<Vec<f64>> {
    map_range(words.len(), |c| {
        (0..outputs)
            .map(|o| {
                exp(log_likelihood(
                    leg,
                    s0,
                    &words[c],
                    &decode_block(o, radix, len),
                ))
            })
            .collect()
    })
}

/// Computes both sides of the two Fano inequalities by enumerating all
/// output sequences and exact posteriors.
pub fn fano_diagnostic(
    cb: &SuperpositionCodebook,
    kernel: &FsbcKernel,
    s0: usize,
    limits: &Limits,
) -> Result<FanoReport> {
    check_compatible(cb, kernel, s0)?;
    let d = kernel.dims();
    let len = cb.len();
    let words = cb.all_codewords();
    let widest = checked_pow(d.y.max(d.z), len);
    let cells = widest.and_then(|w| w.checked_mul(words.len() as u128));
    limits.check_cells("codewords x output sequences", cells)?;
    let ny = d.y.pow(len as u32);
    let nz = d.z.pow(len as u32);
    let (m1, m2) = (cb.m1(), cb.m2());

    let lz = leg_table(kernel.z_leg(), s0, &words, d.z, len, nz);
    let est2: Vec<usize> = (0..nz)
        .map(|o| {
            let scores: Vec<f64> = lz.iter().map(|row| crate::math::ln(row[o])).collect();
            arg_max(&rx2_scores(m1, &scores))
        })
        .collect();
    let (h2, pe2) = entropy_and_error(&lz, nz, m2, |c| c / m1, &est2);

    let ly = leg_table(kernel.y_leg(), s0, &words, d.y, len, ny);
    let est1: Vec<usize> = (0..ny)
        .map(|o| {
            let scores: Vec<f64> = ly.iter().map(|row| row[o]).collect();
            arg_max(&scores) % m1
        })
        .collect();
    let (h1, pe1) = entropy_and_error(&ly, ny, m1, |c| c % m1, &est1);

    let (l1, l2) = (log2(m1 as f64), log2(m2 as f64));
    let bound_1 = pe1 * l1 + 1.0;
    let bound_2 = pe2 * l2 + 1.0;
    Ok(FanoReport {
        s0,
        block_len: len,
        log2_m1: l1,
        log2_m2: l2,
        h_m2_given_z: h2,
        p_e2: pe2,
        bound_2,
        slack_2: bound_2 - h2,
        holds_2: h2 <= bound_2,
        h_m1_given_y: h1,
        p_e1: pe1,
        bound_1,
        slack_1: bound_1 - h1,
        holds_1: h1 <= bound_1,
    })
}
