use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FsbcKernel;
use crate::math::sample_index;

/// One realization of `(yⁿ, zⁿ, sⁿ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSample {
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub s: Vec<usize>,
}

/// Draws outputs and states for the input block `xs` starting in `s0`.
/// Deterministic given `seed`.
pub fn sample_block(kernel: &FsbcKernel, xs: &[usize], s0: usize, seed: u64) -> BlockSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(kernel, xs, s0, &mut rng)
}

pub(crate) fn sample_with<R: rand::Rng + ?Sized>(
    kernel: &FsbcKernel,
    xs: &[usize],
    s0: usize,
    rng: &mut R,
) -> BlockSample {
    let d = kernel.dims();
    let leg = kernel.joint_leg();
    let mut out = BlockSample {
        y: Vec::with_capacity(xs.len()),
        z: Vec::with_capacity(xs.len()),
        s: Vec::with_capacity(xs.len()),
    };
    let mut state = s0;
    for &x in xs {
        let cell = sample_index(rng, leg.row(state, x));
        let (o, s) = (cell / d.s, cell % d.s);
        out.y.push(o / d.z);
        out.z.push(o % d.z);
        out.s.push(s);
        state = s;
    }
    out
}
