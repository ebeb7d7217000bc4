//! Exact block mutual informations and their gradients in the joint law
//! `q(uⁿ, xⁿ)`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::JointInputLaw;
use crate::channel::{marginal_block_tables, FsbcKernel, Limits};
use crate::error::{Error, Result};
use crate::math::{entropy, log2};

/// Stand-in for `log2` of a vanishing ratio in gradients.
const LOG_FLOOR: f64 = -1.0e3;

/// Per-initial-state block channel `p(yⁿ | xⁿ, s₀)`, `p(zⁿ | xⁿ, s₀)` with
/// the conditional output entropies precomputed.
#[derive(Debug, Clone)]
pub(crate) struct BlockChannel {
    pub xb: usize,
    pub yb: usize,
    pub zb: usize,
    py: Vec<f64>,
    pz: Vec<f64>,
    hy_x: Vec<f64>,
}

/// Block-total information quantities in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Informations {
    pub u_z: f64,
    pub x_y_given_u: f64,
    pub u_y: f64,
}

impl BlockChannel {
    pub fn new(kernel: &FsbcKernel, n: usize, s0: usize, limits: &Limits) -> Result<Self> {
        let t = marginal_block_tables(kernel, n, s0, limits)?;
        let hy_x = t.py.chunks(t.y_blocks).map(entropy).collect();
        Ok(BlockChannel {
            xb: t.x_blocks,
            yb: t.y_blocks,
            zb: t.z_blocks,
            py: t.py,
            pz: t.pz,
            hy_x,
        })
    }

    /// `r[u][o] = Σ_x q(u, x) p(o | x)`.
    fn push(&self, q: &[f64], u_card: usize, table: &[f64], width: usize) -> Vec<f64> {
        let mut r = vec![0.0; u_card * width];
        for u in 0..u_card {
            let dst = &mut r[u * width..(u + 1) * width];
            for x in 0..self.xb {
                let w = q[u * self.xb + x];
                if w == 0.0 {
                    continue;
                }
                for (d, &p) in dst.iter_mut().zip(&table[x * width..(x + 1) * width]) {
                    *d += w * p;
                }
            }
        }
        r
    }

    fn column_sums(r: &[f64], width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for row in r.chunks(width) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    fn mutual(r: &[f64], qu: &[f64], marg: &[f64], width: usize) -> f64 {
        let mut acc = 0.0;
        for (u, row) in r.chunks(width).enumerate() {
            for (o, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    acc += v * log2(v / (qu[u] * marg[o]));
                }
            }
        }
        acc
    }

    pub fn informations(&self, q: &[f64], u_card: usize) -> Informations {
        let qu: Vec<f64> = q.chunks(self.xb).map(|r| r.iter().sum()).collect();
        let ruz = self.push(q, u_card, &self.pz, self.zb);
        let ruy = self.push(q, u_card, &self.py, self.yb);
        let rz = Self::column_sums(&ruz, self.zb);
        let ry = Self::column_sums(&ruy, self.yb);
        let mut h_y_given_u = 0.0;
        for (u, row) in ruy.chunks(self.yb).enumerate() {
            for &v in row {
                if v > 0.0 {
                    h_y_given_u -= v * log2(v / qu[u]);
                }
            }
        }
        let h_y_given_x: f64 = q
            .chunks(self.xb)
            .flat_map(|row| row.iter().zip(&self.hy_x).map(|(w, h)| w * h))
            .sum();
        Informations {
            u_z: Self::mutual(&ruz, &qu, &rz, self.zb),
            x_y_given_u: h_y_given_u - h_y_given_x,
            u_y: Self::mutual(&ruy, &qu, &ry, self.yb),
        }
    }

    /// Gradients of `I(Uⁿ; Zⁿ)` and `I(Xⁿ; Yⁿ | Uⁿ)` with respect to every
    /// `q(u, x)`, up to an additive constant common to all coordinates.
    pub fn gradients(&self, q: &[f64], u_card: usize, g_uz: &mut [f64], g_xyu: &mut [f64]) {
        let qu: Vec<f64> = q.chunks(self.xb).map(|r| r.iter().sum()).collect();
        let ruz = self.push(q, u_card, &self.pz, self.zb);
        let ruy = self.push(q, u_card, &self.py, self.yb);
        let rz = Self::column_sums(&ruz, self.zb);
        let ratio = |num: f64, den: f64| {
            if num > 0.0 && den > 0.0 {
                log2(num / den)
            } else {
                LOG_FLOOR
            }
        };
        for u in 0..u_card {
            for x in 0..self.xb {
                let pz = &self.pz[x * self.zb..(x + 1) * self.zb];
                let py = &self.py[x * self.yb..(x + 1) * self.yb];
                let mut a = 0.0;
                let mut b = -self.hy_x[x];
                if qu[u] > 0.0 {
                    for (z, &p) in pz.iter().enumerate() {
                        if p > 0.0 {
                            a += p * ratio(ruz[u * self.zb + z], qu[u] * rz[z]);
                        }
                    }
                    for (y, &p) in py.iter().enumerate() {
                        if p > 0.0 {
                            b -= p * ratio(ruy[u * self.yb + y], qu[u]);
                        }
                    }
                } else {
                    // Limit of an empty auxiliary symbol receiving mass at x.
                    for (z, &p) in pz.iter().enumerate() {
                        if p > 0.0 {
                            a += p * ratio(p, rz[z]);
                        }
                    }
                    b = 0.0;
                }
                g_uz[u * self.xb + x] = a;
                g_xyu[u * self.xb + x] = b;
            }
        }
    }
}

/// `(R_{1,n}, R_{2,n})` for one initial state, in bits per symbol, including
/// the `-log2|S| / n` penalty. Kept raw: values may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
    pub n: usize,
    pub s0: usize,
}

/// All per-state block channels of a kernel at one blocklength.
#[derive(Debug, Clone)]
pub struct RateEvaluator {
    pub(crate) n: usize,
    pub(crate) states: usize,
    pub(crate) u_cap: usize,
    pub(crate) channels: Vec<BlockChannel>,
}

impl RateEvaluator {
    pub fn new(kernel: &FsbcKernel, n: usize, limits: &Limits) -> Result<Self> {
        let d = kernel.dims();
        let channels = (0..d.s)
            .map(|s0| BlockChannel::new(kernel, n, s0, limits))
            .collect::<Result<Vec<_>>>()?;
        Ok(RateEvaluator {
            n,
            states: d.s,
            u_cap: JointInputLaw::cardinality_cap(d, n),
            channels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn x_blocks(&self) -> usize {
        self.channels[0].xb
    }

    /// Largest admissible auxiliary cardinality `min{|X|,|Y|,|Z|}ⁿ`.
    /// Largest output-block count over the two legs.
    pub fn max_output_blocks(&self) -> usize {
        self.channels[0].yb.max(self.channels[0].zb)
    }

    pub fn u_cap(&self) -> usize {
        self.u_cap
    }

    pub(crate) fn penalty(&self) -> f64 {
        log2(self.states as f64) / self.n as f64
    }

    fn check_law(&self, q: &JointInputLaw) -> Result<()> {
        if q.n() != self.n || q.x_blocks() != self.x_blocks() {
            return Err(Error::InvalidArgument(alloc::format!(
                "joint law is for n = {} with {} input blocks, evaluator has n = {} and {}",
                q.n(),
                q.x_blocks(),
                self.n,
                self.x_blocks()
            )));
        }
        if q.u_card() > self.u_cap {
            return Err(Error::InvalidArgument(alloc::format!(
                "auxiliary cardinality {} exceeds the cap {}",
                q.u_card(),
                self.u_cap
            )));
        }
        Ok(())
    }

    pub fn rate_pair(&self, q: &JointInputLaw, s0: usize) -> Result<RatePair> {
        self.check_law(q)?;
        let ch = self.channels.get(s0).ok_or_else(|| {
            Error::InvalidArgument(alloc::format!("initial state {s0} out of range"))
        })?;
        let info = ch.informations(q.probs(), q.u_card());
        let n = self.n as f64;
        Ok(RatePair {
            r1: info.x_y_given_u / n - self.penalty(),
            r2: info.u_z / n - self.penalty(),
            n: self.n,
            s0,
        })
    }

    /// Block-total `(I(Uⁿ;Zⁿ|s₀), I(Xⁿ;Yⁿ|Uⁿ,s₀), I(Uⁿ;Yⁿ|s₀))` in bits.
    pub fn informations(&self, q: &JointInputLaw, s0: usize) -> Result<(f64, f64, f64)> {
        self.check_law(q)?;
        let info = self.channels[s0].informations(q.probs(), q.u_card());
        Ok((info.u_z, info.x_y_given_u, info.u_y))
    }
}

/// `R_{1,n}(q, s₀)` and `R_{2,n}(q, s₀)` computed exactly from the block law.
pub fn rate_pair(
    kernel: &FsbcKernel,
    q: &JointInputLaw,
    s0: usize,
    limits: &Limits,
) -> Result<RatePair> {
    if s0 >= kernel.dims().s {
        return Err(Error::InvalidArgument(alloc::format!(
            "initial state {s0} out of range"
        )));
    }
    let ch = BlockChannel::new(kernel, q.n(), s0, limits)?;
    let eval = RateEvaluator {
        n: q.n(),
        states: kernel.dims().s,
        u_cap: JointInputLaw::cardinality_cap(kernel.dims(), q.n()),
        channels: vec![ch],
    };
    let mut pair = eval.rate_pair(q, 0)?;
    pair.s0 = s0;
    Ok(pair)
}
