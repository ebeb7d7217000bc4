//! Superposition random coding over an FSBC with exact maximum-likelihood
//! decoding.
//!
//! Cloud centers carry the weak receiver's message `m₂`; satellites around
//! each center carry the strong receiver's refinement `m₁`. Both decoders
//! know the initial state and score every codeword by its exact likelihood.

mod decode;
mod fano;
mod stats;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{decode_block, derive_seed, pow2, sample_index};
use crate::region::JointInputLaw;

pub use decode::{decode_outputs, transmit_and_decode, Decision};
pub use fano::{fano_diagnostic, FanoReport};
pub use stats::{estimate_error, exact_error, ErrorStats, ExactError, StateError};

/// Largest message set an exact ML decoder is asked to search.
pub const MESSAGE_CAP: usize = 1 << 10;

/// `⌈2^{bits}⌉`, treating values within rounding of an integer as that integer.
pub fn message_set_size(bits: f64) -> Result<usize> {
    if !(bits >= 0.0 && bits.is_finite()) {
        return Err(Error::DomainError(alloc::format!(
            "rate exponent {bits} must be finite and nonnegative"
        )));
    }
    if bits > 64.0 {
        return Err(Error::RateTooHigh {
            receiver: "",
            size: u128::MAX,
            cap: MESSAGE_CAP,
        });
    }
    let v = pow2(bits);
    let r = libm::round(v);
    let size = if (v - r).abs() <= 1e-9 * v {
        r
    } else {
        libm::ceil(v)
    };
    Ok(size as usize)
}

/// A two-layer codebook of total length `K n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionCodebook {
    n: usize,
    k: usize,
    x_alphabet: usize,
    r1: f64,
    r2: f64,
    m1: usize,
    m2: usize,
    /// `clouds[m₂][k]`: auxiliary block index.
    clouds: Vec<Vec<usize>>,
    /// `satellites[m₂ · |M₁| + m₁][k]`: input block index.
    satellites: Vec<Vec<usize>>,
    seed: u64,
}

fn alphabet_of(x_blocks: usize, n: usize) -> Result<usize> {
    (1..=x_blocks)
        .find(|a| a.checked_pow(n as u32) == Some(x_blocks))
        .ok_or_else(|| {
            Error::InvalidArgument(alloc::format!(
                "{x_blocks} is not an n-th power for n = {n}"
            ))
        })
}

fn checked_size(receiver: &'static str, bits: f64) -> Result<usize> {
    match message_set_size(bits) {
        Ok(s) if s <= MESSAGE_CAP => Ok(s),
        Ok(s) => Err(Error::RateTooHigh {
            receiver,
            size: s as u128,
            cap: MESSAGE_CAP,
        }),
        Err(Error::RateTooHigh { size, cap, .. }) => Err(Error::RateTooHigh {
            receiver,
            size,
            cap,
        }),
        Err(e) => Err(e),
    }
}

const CLOUD_STREAM: u64 = 0;
const SATELLITE_STREAM: u64 = 1;

/// Draws a superposition codebook from `q(uⁿ, xⁿ)`: `⌈2^{KnR₂}⌉` cloud
/// centers i.i.d. from `q(uⁿ)` over `K` super-symbols, and for each of them
/// `⌈2^{KnR₁}⌉` satellites drawn symbolwise from `q(xⁿ | uⁿ)`.
///
/// Each codeword has its own random stream keyed by its message indices, so
/// codebooks sharing a seed are nested: growing `K` (at fixed message-set
/// sizes) extends every codeword without changing its prefix.
pub fn build_codebook(
    q: &JointInputLaw,
    k: usize,
    r1: f64,
    r2: f64,
    seed: u64,
) -> Result<SuperpositionCodebook> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "outer length K must be positive".into(),
        ));
    }
    let n = q.n();
    let total = (k * n) as f64;
    let m1 = checked_size("Rx1 (M1)", total * r1)?;
    let m2 = checked_size("Rx2 (M2)", total * r2)?;
    let x_alphabet = alphabet_of(q.x_blocks(), n)?;
    let qu = q.marginal_u();
    let clouds: Vec<Vec<usize>> = (0..m2)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[CLOUD_STREAM, j as u64]));
            (0..k).map(|_| sample_index(&mut rng, &qu)).collect()
        })
        .collect();
    let mut satellites = Vec::with_capacity(m1 * m2);
    for (j, cloud) in clouds.iter().enumerate() {
        for i in 0..m1 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &[SATELLITE_STREAM, j as u64, i as u64],
            ));
            satellites.push(
                cloud
                    .iter()
                    .map(|&u| sample_index(&mut rng, q.row(u)))
                    .collect(),
            );
        }
    }
    Ok(SuperpositionCodebook {
        n,
        k,
        x_alphabet,
        r1,
        r2,
        m1,
        m2,
        clouds,
        satellites,
        seed,
    })
}

impl SuperpositionCodebook {
    /// A hand-specified codebook. `satellites` is indexed `m₂ · |M₁| + m₁`;
    /// the rates are recorded as `log2|M| / (K n)`.
    pub fn from_codewords(
        n: usize,
        x_alphabet: usize,
        m1: usize,
        clouds: Vec<Vec<usize>>,
        satellites: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let m2 = clouds.len();
        if n == 0 || x_alphabet == 0 || m1 == 0 || m2 == 0 {
            return Err(Error::InvalidArgument(
                "codebook dimensions must be positive".into(),
            ));
        }
        if satellites.len() != m1 * m2 {
            return Err(Error::DimensionMismatch {
                what: "satellites",
                expected: m1 * m2,
                found: satellites.len(),
            });
        }
        let k = satellites[0].len();
        let x_blocks = x_alphabet.pow(n as u32);
        if k == 0 || clouds.iter().chain(&satellites).any(|c| c.len() != k) {
            return Err(Error::InvalidArgument(
                "codewords must share one positive length".into(),
            ));
        }
        if satellites.iter().flatten().any(|&x| x >= x_blocks) {
            return Err(Error::InvalidArgument(
                "input block index out of range".into(),
            ));
        }
        if m1 > MESSAGE_CAP || m2 > MESSAGE_CAP {
            return Err(Error::RateTooHigh {
                receiver: "hand-built code",
                size: m1.max(m2) as u128,
                cap: MESSAGE_CAP,
            });
        }
        let total = (k * n) as f64;
        Ok(SuperpositionCodebook {
            n,
            k,
            x_alphabet,
            r1: crate::math::log2(m1 as f64) / total,
            r2: crate::math::log2(m2 as f64) / total,
            m1,
            m2,
            clouds,
            satellites,
            seed: 0,
        })
    }

    /// The same code with message `m₁` renamed `p1[m₁]` and `m₂` renamed `p2[m₂]`.
    pub fn relabel(&self, p1: &[usize], p2: &[usize]) -> Result<Self> {
        let is_perm = |p: &[usize], len: usize| {
            let mut seen = alloc::vec![false; len];
            p.len() == len
                && p.iter()
                    .all(|&i| i < len && !core::mem::replace(&mut seen[i], true))
        };
        if !is_perm(p1, self.m1) || !is_perm(p2, self.m2) {
            return Err(Error::InvalidArgument(
                "relabeling must be a permutation".into(),
            ));
        }
        let mut out = self.clone();
        for (m2, &t2) in p2.iter().enumerate() {
            out.clouds[t2] = self.clouds[m2].clone();
            for (m1, &t1) in p1.iter().enumerate() {
                out.satellites[t2 * self.m1 + t1] = self.satellites[m2 * self.m1 + m1].clone();
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Outer length `K`.
    pub fn outer_len(&self) -> usize {
        self.k
    }

    /// Total length `K n`.
    pub fn len(&self) -> usize {
        self.k * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rates(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cloud(&self, m2: usize) -> &[usize] {
        &self.clouds[m2]
    }

    pub fn satellite(&self, m1: usize, m2: usize) -> &[usize] {
        &self.satellites[m2 * self.m1 + m1]
    }

    /// Input symbols of codeword `(m₁, m₂)`, length `K n`.
    pub fn codeword(&self, m1: usize, m2: usize) -> Vec<usize> {
        self.satellite(m1, m2)
            .iter()
            .flat_map(|&b| decode_block(b, self.x_alphabet, self.n))
            .collect()
    }

    pub(crate) fn all_codewords(&self) -> Vec<Vec<usize>> {
        (0..self.m2)
            .flat_map(|m2| (0..self.m1).map(move |m1| (m1, m2)))
            .map(|(m1, m2)| self.codeword(m1, m2))
            .collect()
    }

    pub(crate) fn x_alphabet(&self) -> usize {
        self.x_alphabet
    }
}
