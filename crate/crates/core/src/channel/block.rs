use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{FsbcKernel, Limits, StateLeg};
use crate::error::{Error, Result};
use crate::math::checked_pow;

/// Exact block tables `p(· | xⁿ, s₀)` for one initial state.
///
/// All tables are dense, row-major with the input block as the row:
/// `joint[(xi * |Y|ⁿ + yi) * |Z|ⁿ + zi]`, `py[xi * |Y|ⁿ + yi]`,
/// `pz[xi * |Z|ⁿ + zi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLaw {
    pub n: usize,
    pub s0: usize,
    pub x_blocks: usize,
    pub y_blocks: usize,
    pub z_blocks: usize,
    pub joint: Vec<f64>,
    pub py: Vec<f64>,
    pub pz: Vec<f64>,
}

/// The two conditional marginals `p(yⁿ | xⁿ, s₀)` and `p(zⁿ | xⁿ, s₀)`, which
/// is all the rate functionals need.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTables {
    pub n: usize,
    pub s0: usize,
    pub x_blocks: usize,
    pub y_blocks: usize,
    pub z_blocks: usize,
    pub py: Vec<f64>,
    pub pz: Vec<f64>,
}

fn check_args(kernel: &FsbcKernel, n: usize, s0: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "blocklength must be at least 1".into(),
        ));
    }
    if s0 >= kernel.dims().s {
        return Err(Error::InvalidArgument(format!(
            "initial state {s0} out of range (|S| = {})",
            kernel.dims().s
        )));
    }
    Ok(())
}

/// Forward recursion over a leg: `table[xi * |O|ⁿ + oi] = p(oⁿ | xⁿ, s₀)`.
///
/// Only the current-state distribution is carried along, jointly with the
/// output prefix; input prefixes are shared through a depth-first walk.
pub(crate) fn leg_block_table(leg: &StateLeg, n: usize, s0: usize) -> Vec<f64> {
    let ns = leg.states();
    let no = leg.outputs();
    let x_blocks = leg.inputs().pow(n as u32);
    let o_blocks = no.pow(n as u32);
    let mut table = vec![0.0; x_blocks * o_blocks];
    let mut alpha = vec![0.0; ns];
    alpha[s0] = 1.0;
    forward(leg, n, 0, 0, &alpha, o_blocks, &mut table);
    table
}

fn forward(
    leg: &StateLeg,
    n: usize,
    depth: usize,
    x_prefix: usize,
    alpha: &[f64],
    o_blocks: usize,
    table: &mut [f64],
) {
    let ns = leg.states();
    let no = leg.outputs();
    if depth == n {
        let row = &mut table[x_prefix * o_blocks..(x_prefix + 1) * o_blocks];
        for (o, cell) in row.iter_mut().enumerate() {
            *cell = alpha[o * ns..(o + 1) * ns].iter().sum();
        }
        return;
    }
    let prefixes = alpha.len() / ns;
    let mut next = vec![0.0; prefixes * no * ns];
    for x in 0..leg.inputs() {
        next.iter_mut().for_each(|v| *v = 0.0);
        for op in 0..prefixes {
            for sp in 0..ns {
                let a = alpha[op * ns + sp];
                if a == 0.0 {
                    continue;
                }
                let row = leg.row(sp, x);
                let dst = &mut next[op * no * ns..(op + 1) * no * ns];
                for (d, &p) in dst.iter_mut().zip(row) {
                    *d += a * p;
                }
            }
        }
        forward(
            leg,
            n,
            depth + 1,
            x_prefix * leg.inputs() + x,
            &next,
            o_blocks,
            table,
        );
    }
}

/// Exact `p(yⁿ, zⁿ | xⁿ, s₀)` and both marginals.
///
/// The joint comes from the forward recursion on the full kernel; the two
/// marginals are computed by separate recursions on the Y and Z legs, so the
/// marginalization identities are a genuine consistency check.
pub fn block_law(kernel: &FsbcKernel, n: usize, s0: usize, limits: &Limits) -> Result<BlockLaw> {
    check_args(kernel, n, s0)?;
    let d = kernel.dims();
    let cells = checked_pow(d.x * d.y * d.z, n);
    limits.check_cells("block law xⁿ·yⁿ·zⁿ", cells)?;
    let y_blocks = d.y.pow(n as u32);
    let z_blocks = d.z.pow(n as u32);
    let x_blocks = d.x.pow(n as u32);
    let interleaved = leg_block_table(kernel.joint_leg(), n, s0);
    // Re-index interleaved (y1 z1)(y2 z2)... blocks into (yⁿ, zⁿ).
    let pair_blocks = y_blocks * z_blocks;
    let split: Vec<usize> = (0..pair_blocks)
        .map(|mut oi| {
            let (mut yi, mut zi, mut yw, mut zw) = (0, 0, 1, 1);
            for _ in 0..n {
                let o = oi % (d.y * d.z);
                oi /= d.y * d.z;
                yi += (o / d.z) * yw;
                zi += (o % d.z) * zw;
                yw *= d.y;
                zw *= d.z;
            }
            yi * z_blocks + zi
        })
        .collect();
    let mut joint = vec![0.0; x_blocks * pair_blocks];
    for xi in 0..x_blocks {
        for (oi, &dst) in split.iter().enumerate() {
            joint[xi * pair_blocks + dst] = interleaved[xi * pair_blocks + oi];
        }
    }
    Ok(BlockLaw {
        n,
        s0,
        x_blocks,
        y_blocks,
        z_blocks,
        joint,
        py: leg_block_table(kernel.y_leg(), n, s0),
        pz: leg_block_table(kernel.z_leg(), n, s0),
    })
}

/// Only the Y and Z conditional marginals, for larger blocklengths.
pub fn marginal_block_tables(
    kernel: &FsbcKernel,
    n: usize,
    s0: usize,
    limits: &Limits,
) -> Result<MarginalTables> {
    check_args(kernel, n, s0)?;
    let d = kernel.dims();
    let cells = checked_pow(d.x * d.y.max(d.z), n);
    limits.check_cells("block marginals xⁿ·max(yⁿ, zⁿ)", cells)?;
    Ok(MarginalTables {
        n,
        s0,
        x_blocks: d.x.pow(n as u32),
        y_blocks: d.y.pow(n as u32),
        z_blocks: d.z.pow(n as u32),
        py: leg_block_table(kernel.y_leg(), n, s0),
        pz: leg_block_table(kernel.z_leg(), n, s0),
    })
}

impl BlockLaw {
    #[inline]
    pub fn p_yz(&self, xi: usize, yi: usize, zi: usize) -> f64 {
        self.joint[(xi * self.y_blocks + yi) * self.z_blocks + zi]
    }

    #[inline]
    pub fn p_y(&self, xi: usize, yi: usize) -> f64 {
        self.py[xi * self.y_blocks + yi]
    }

    #[inline]
    pub fn p_z(&self, xi: usize, zi: usize) -> f64 {
        self.pz[xi * self.z_blocks + zi]
    }

    /// Largest deviation from 1 of any conditional row sum, over all three tables.
    pub fn max_row_error(&self) -> f64 {
        let rows = |t: &[f64], w: usize| {
            t.chunks(w)
                .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
                .fold(0.0, f64::max)
        };
        rows(&self.joint, self.y_blocks * self.z_blocks)
            .max(rows(&self.py, self.y_blocks))
            .max(rows(&self.pz, self.z_blocks))
    }

    /// Largest gap between the stored marginals and marginals of the joint.
    pub fn max_marginal_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for xi in 0..self.x_blocks {
            for yi in 0..self.y_blocks {
                let s: f64 = (0..self.z_blocks).map(|zi| self.p_yz(xi, yi, zi)).sum();
                gap = gap.max((s - self.p_y(xi, yi)).abs());
            }
            for zi in 0..self.z_blocks {
                let s: f64 = (0..self.y_blocks).map(|yi| self.p_yz(xi, yi, zi)).sum();
                gap = gap.max((s - self.p_z(xi, zi)).abs());
            }
        }
        gap
    }
}

/// Largest gap in the factorization `p(yⁿ, zⁿ | xⁿ) = p(yⁿ | xⁿ) · p(zⁿ | yⁿ)`.
///
/// `p(zⁿ | yⁿ, s₀)` is formed under a uniform input law; only pairs with
/// `p(yⁿ | xⁿ, s₀) > 0` are compared. Physically degraded channels give zero
/// up to rounding.
pub fn factorization_deviation(law: &BlockLaw) -> f64 {
    let (ny, nz) = (law.y_blocks, law.z_blocks);
    let mut yz = vec![0.0; ny * nz];
    for xi in 0..law.x_blocks {
        for (i, v) in yz.iter_mut().enumerate() {
            *v += law.joint[xi * ny * nz + i];
        }
    }
    let mut worst: f64 = 0.0;
    for yi in 0..ny {
        let row = &yz[yi * nz..(yi + 1) * nz];
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            continue;
        }
        for xi in 0..law.x_blocks {
            let py = law.p_y(xi, yi);
            if py <= 0.0 {
                continue;
            }
            for (zi, &c) in row.iter().enumerate() {
                worst = worst.max((law.p_yz(xi, yi, zi) - py * c / total).abs());
            }
        }
    }
    worst
}

/// `p(s_n | xⁿ, s₀)` for every `s₀`: the product `T_{x1} ⋯ T_{xn}`, row-major
/// with the initial state as the row.
pub fn state_transition_products(kernel: &FsbcKernel, inputs: &[usize]) -> Result<Vec<f64>> {
    let d = kernel.dims();
    if inputs.is_empty() {
        return Err(Error::InvalidArgument(
            "input block must be non-empty".into(),
        ));
    }
    if let Some(&bad) = inputs.iter().find(|&&x| x >= d.x) {
        return Err(Error::InvalidArgument(format!(
            "input symbol {bad} out of range"
        )));
    }
    let ns = d.s;
    let mut acc = kernel.transition(inputs[0]).to_vec();
    for &x in &inputs[1..] {
        acc = mat_mul(&acc, kernel.transition(x), ns);
    }
    Ok(acc)
}

pub(crate) fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_bsbc_family, Alphabets, BsbcFamilySpec};
    use crate::math::decode_block;

    fn two_state() -> FsbcKernel {
        build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            eps1: vec![0.1, 0.18],
            eps12: vec![0.0625, 0.0625],
        })
        .unwrap()
    }

    /// Brute force over every state path s¹..sⁿ.
    fn path_sum(k: &FsbcKernel, xs: &[usize], ys: &[usize], zs: &[usize], s0: usize) -> f64 {
        let ns = k.dims().s;
        let n = xs.len();
        let paths = ns.pow(n as u32);
        (0..paths)
            .map(|p| {
                let states = decode_block(p, ns, n);
                let mut prev = s0;
                let mut prob = 1.0;
                for i in 0..n {
                    prob *= k.prob(prev, xs[i], ys[i], zs[i], states[i]);
                    prev = states[i];
                }
                prob
            })
            .sum()
    }

    #[test]
    fn bsc_single_letter() {
        let k = build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![1.0]],
            eps1: vec![0.1],
            eps12: vec![0.0],
        })
        .unwrap();
        let law = block_law(&k, 1, 0, &Limits::default()).unwrap();
        assert!((law.p_y(0, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn memoryless_block_is_product() {
        let k = build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![1.0]],
            eps1: vec![0.1],
            eps12: vec![0.2],
        })
        .unwrap();
        let one = block_law(&k, 1, 0, &Limits::default()).unwrap();
        let two = block_law(&k, 2, 0, &Limits::default()).unwrap();
        for xi in 0..4 {
            let x = decode_block(xi, 2, 2);
            for yi in 0..4 {
                let y = decode_block(yi, 2, 2);
                for zi in 0..4 {
                    let z = decode_block(zi, 2, 2);
                    let prod = one.p_yz(x[0], y[0], z[0]) * one.p_yz(x[1], y[1], z[1]);
                    assert!((two.p_yz(xi, yi, zi) - prod).abs() < 1e-12);
                }
                let prod = one.p_y(x[0], y[0]) * one.p_y(x[1], y[1]);
                assert!((two.p_y(xi, yi) - prod).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_recursion_matches_path_enumeration() {
        let k = two_state();
        for s0 in 0..2 {
            let law = block_law(&k, 2, s0, &Limits::default()).unwrap();
            for xi in 0..4 {
                for yi in 0..4 {
                    for zi in 0..4 {
                        let want = path_sum(
                            &k,
                            &decode_block(xi, 2, 2),
                            &decode_block(yi, 2, 2),
                            &decode_block(zi, 2, 2),
                            s0,
                        );
                        assert!((law.p_yz(xi, yi, zi) - want).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn tables_are_consistent() {
        let k = two_state();
        for n in 1..=3 {
            for s0 in 0..2 {
                let law = block_law(&k, n, s0, &Limits::default()).unwrap();
                assert!(law.max_row_error() < 1e-9);
                assert!(law.max_marginal_gap() < 1e-9);
                assert!(factorization_deviation(&law) < 1e-10);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let k = two_state();
        let tight = Limits {
            cell_budget: 63,
            ..Limits::default()
        };
        let err = block_law(&k, 2, 0, &tight).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { cells: 64, .. }));
        assert!(block_law(
            &k,
            2,
            0,
            &Limits {
                cell_budget: 64,
                ..tight
            }
        )
        .is_ok());
    }

    #[test]
    fn transition_products() {
        let k = two_state();
        let t = state_transition_products(&k, &[1]).unwrap();
        assert_eq!(t, vec![0.9, 0.1, 0.2, 0.8]);
        let xs = [0, 1, 1, 0, 1, 0, 0, 1];
        let t = state_transition_products(&k, &xs).unwrap();
        // Matrix-power oracle: P^8 computed by repeated squaring.
        let p = [0.9, 0.1, 0.2, 0.8];
        let p2 = mat_mul(&p, &p, 2);
        let p4 = mat_mul(&p2, &p2, 2);
        let p8 = mat_mul(&p4, &p4, 2);
        for i in 0..4 {
            assert!((t[i] - p8[i]).abs() < 1e-15);
        }
        for row in t.chunks(2) {
            assert!((row[0] - 2.0 / 3.0).abs() < 4e-2);
            assert!((row[1] - 1.0 / 3.0).abs() < 4e-2);
        }
    }

    #[test]
    fn frozen_chain_products_are_identity() {
        let k = build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            eps1: vec![0.1, 0.2],
            eps12: vec![0.1, 0.1],
        })
        .unwrap();
        for xi in 0..8 {
            let t = state_transition_products(&k, &decode_block(xi, 2, 3)).unwrap();
            assert_eq!(t, vec![1.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn bad_arguments() {
        let k = two_state();
        assert!(block_law(&k, 0, 0, &Limits::default()).is_err());
        assert!(block_law(&k, 1, 2, &Limits::default()).is_err());
        assert!(state_transition_products(&k, &[]).is_err());
        assert!(state_transition_products(&k, &[2]).is_err());
        let _ = Alphabets::new(2, 2, 2, 2);
    }
}
