use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{block_law, FsbcKernel, Limits};
use crate::error::{Error, Result};
use crate::math::decode_block;

/// Conditioning events below this probability are skipped.
const EVENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhysicalVerdict {
    Holds,
    Fails,
    BudgetExceeded,
}

/// Which of the two conditions a witness violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `p(y_i | xⁱ, yⁱ⁻¹, zⁱ⁻¹, s₀) = p(y_i | xⁱ, yⁱ⁻¹, s₀)`
    PastZIrrelevantToY,
    /// `p(z_i | xⁱ, yⁱ, zⁱ⁻¹, s₀) = p(z_i | yⁱ, zⁱ⁻¹, s₀)`
    ZThroughY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: Condition,
    pub i: usize,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z_past: Vec<usize>,
    /// The current weak-receiver output, for [`Condition::ZThroughY`].
    pub z_now: Option<usize>,
    pub s0: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalReport {
    pub verdict: PhysicalVerdict,
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    /// Largest blocklength actually checked. A `holds` verdict certifies the
    /// conditions only up to here.
    pub certified_through: usize,
    pub n_max: usize,
    pub tol: f64,
}

/// Checks both causal degradedness conditions at every `i <= n_max`, every
/// initial state and every positive-probability history.
///
/// Histories are generated by a uniform i.i.d. input; the conditions are
/// channel properties and any full-support input reaches the same histories.
pub fn check_physical_degraded(
    kernel: &FsbcKernel,
    n_max: usize,
    tol: f64,
    limits: &Limits,
) -> Result<PhysicalReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut report = PhysicalReport {
        verdict: PhysicalVerdict::Holds,
        worst_violation: 0.0,
        witness: None,
        certified_through: 0,
        n_max,
        tol,
    };
    for i in 1..=n_max {
        for s0 in 0..kernel.dims().s {
            let law = match block_law(kernel, i, s0, limits) {
                Ok(law) => law,
                Err(e @ Error::BudgetExceeded { .. }) if i == 1 => return Err(e),
                Err(Error::BudgetExceeded { .. }) => {
                    report.verdict = if report.worst_violation > tol {
                        PhysicalVerdict::Fails
                    } else {
                        PhysicalVerdict::BudgetExceeded
                    };
                    return Ok(report);
                }
                Err(e) => return Err(e),
            };
            check_step(kernel, &law, &mut report);
        }
        report.certified_through = i;
    }
    if report.worst_violation > tol {
        report.verdict = PhysicalVerdict::Fails;
    }
    Ok(report)
}

fn check_step(kernel: &FsbcKernel, law: &crate::channel::BlockLaw, report: &mut PhysicalReport) {
    let d = kernel.dims();
    let i = law.n;
    let (nxb, nyb, nzb) = (law.x_blocks, law.y_blocks, law.z_blocks);
    let (ny, nz) = (d.y, d.z);
    let (nyp, nzp) = (nyb / ny, nzb / nz);
    let w = 1.0 / nxb as f64;

    // a[x][y][zp] = P(xⁱ, yⁱ, zⁱ⁻¹); b[x][yp][zp] = P(xⁱ, yⁱ⁻¹, zⁱ⁻¹);
    // c[x][y] = P(xⁱ, yⁱ); dd[x][yp] = P(xⁱ, yⁱ⁻¹);
    // e[y][z] = P(yⁱ, zⁱ); f[y][zp] = P(yⁱ, zⁱ⁻¹).
    let mut a = vec![0.0; nxb * nyb * nzp];
    let mut b = vec![0.0; nxb * nyp * nzp];
    let mut c = vec![0.0; nxb * nyb];
    let mut dd = vec![0.0; nxb * nyp];
    let mut e = vec![0.0; nyb * nzb];
    let mut f = vec![0.0; nyb * nzp];
    for xi in 0..nxb {
        for yi in 0..nyb {
            for zi in 0..nzb {
                let p = w * law.p_yz(xi, yi, zi);
                let zp = zi / nz;
                a[(xi * nyb + yi) * nzp + zp] += p;
                b[(xi * nyp + yi / ny) * nzp + zp] += p;
                c[xi * nyb + yi] += p;
                dd[xi * nyp + yi / ny] += p;
                e[yi * nzb + zi] += p;
                f[yi * nzp + zp] += p;
            }
        }
    }

    let mut record = |gap: f64, condition, xi: usize, yi: usize, zi: usize, z_now| {
        if gap > report.worst_violation {
            report.worst_violation = gap;
            report.witness = Some(Witness {
                condition,
                i,
                x: decode_block(xi, d.x, i),
                y: decode_block(yi, ny, i),
                z_past: decode_block(zi, nz, i - 1),
                z_now,
                s0: law.s0,
            });
        }
    };

    for xi in 0..nxb {
        for yi in 0..nyb {
            let yp = yi / ny;
            for zp in 0..nzp {
                let cond = b[(xi * nyp + yp) * nzp + zp];
                if cond < EVENT_FLOOR {
                    continue;
                }
                let lhs = a[(xi * nyb + yi) * nzp + zp] / cond;
                let rhs = c[xi * nyb + yi] / dd[xi * nyp + yp];
                record(
                    (lhs - rhs).abs(),
                    Condition::PastZIrrelevantToY,
                    xi,
                    yi,
                    zp,
                    None,
                );
            }
        }
    }
    for xi in 0..nxb {
        for yi in 0..nyb {
            for zi in 0..nzb {
                let zp = zi / nz;
                let cond = a[(xi * nyb + yi) * nzp + zp];
                if cond < EVENT_FLOOR {
                    continue;
                }
                let lhs = w * law.p_yz(xi, yi, zi) / cond;
                let rhs = e[yi * nzb + zi] / f[yi * nzp + zp];
                record(
                    (lhs - rhs).abs(),
                    Condition::ZThroughY,
                    xi,
                    yi,
                    zp,
                    Some(zi % nz),
                );
            }
        }
    }
}
