//! Small numeric helpers shared by the modules: base-2 information
//! measures, simplex projection, block-index encoding and seed derivation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn pow2(x: f64) -> f64 {
    libm::exp2(x)
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub fn neg_xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        -p * log2(p)
    } else {
        0.0
    }
}

/// Shannon entropy in bits. Entries need not be normalized; zeros are skipped.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().map(|&v| neg_xlog2x(v)).sum()
}

/// Binary entropy `h(ε)` in bits.
pub fn binary_entropy(eps: f64) -> f64 {
    neg_xlog2x(eps) + neg_xlog2x(1.0 - eps)
}

/// `base^exp` as u128, `None` on overflow.
pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

/// Big-endian digits of a block index: the first symbol is the most significant.
pub fn decode_block(mut index: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % radix;
        index /= radix;
    }
    out
}

/// Inverse of [`decode_block`].
pub fn encode_block(symbols: &[usize], radix: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * radix + s)
}

/// Euclidean projection of `v` onto the probability simplex, in place.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed from a master seed and a task path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Draw an index from unnormalized nonnegative weights.
pub(crate) fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if target < w {
                return i;
            }
            target -= w;
            last_positive = i;
        }
    }
    last_positive
}

/// A flat Dirichlet(1, ..., 1) draw.
pub(crate) fn sample_flat_dirichlet<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| -ln(1.0 - rng.random::<f64>()).max(1e-300))
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}
