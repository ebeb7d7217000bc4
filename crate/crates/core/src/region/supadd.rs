//! Sup-additivity `n F_n ≥ l F_l + m F_m` and the bound
//! `F_n(λ) ≤ log2|Z| + λ log2|X|`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::optimize::{RegionSolver, SupportPoint};
use super::{JointInputLaw, OptimizerConfig};
use crate::channel::FsbcKernel;
use crate::error::{Error, Result};
use crate::math::log2;

/// Allowance for optimizer error in `n F_n ≥ l F_l + m F_m`.
pub const SUPADD_SLACK: f64 = 2e-3;
/// Allowance in the alphabet bound.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupAddReport {
    pub lambda: f64,
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub f_n: f64,
    pub f_l: f64,
    pub f_m: f64,
    /// `n F_n - (l F_l + m F_m)`.
    pub excess: f64,
    pub slack: f64,
    pub holds: bool,
    /// `log2|Z| + λ log2|X|`.
    pub bound: f64,
    pub bound_holds: bool,
    /// For a single state: `|n F_n - (l F_l + m F_m)| ≤ slack`.
    pub equality: Option<bool>,
    pub converged: bool,
}

fn bound(kernel: &FsbcKernel, lambda: f64) -> f64 {
    let d = kernel.dims();
    log2(d.z as f64) + lambda * log2(d.x as f64)
}

fn optimize(
    kernel: &FsbcKernel,
    n: usize,
    lambda: f64,
    config: &OptimizerConfig,
    warm: &[JointInputLaw],
) -> Result<SupportPoint> {
    RegionSolver::new(kernel, n, config)?.optimize(lambda, None, warm)
}

/// Checks `(l + m) F_{l+m}(λ) ≥ l F_l(λ) + m F_m(λ) - 2e-3`, the alphabet
/// bound, and equality for single-state channels. The optimizer at `l + m`
/// is warm-started with the product of the optima at `l` and `m`.
pub fn supadditivity_check(
    kernel: &FsbcKernel,
    lambda: f64,
    l: usize,
    m: usize,
    config: &OptimizerConfig,
) -> Result<SupAddReport> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "partition parts must be positive".into(),
        ));
    }
    let pl = optimize(kernel, l, lambda, config, &[])?;
    let pm = if m == l {
        pl.clone()
    } else {
        optimize(kernel, m, lambda, config, &[])?
    };
    let warm = JointInputLaw::product(&pl.law, &pm.law);
    let n = l + m;
    let pn = optimize(kernel, n, lambda, config, &[warm])?;
    Ok(report(kernel, lambda, (l, &pl), (m, &pm), (n, &pn)))
}

fn report(
    kernel: &FsbcKernel,
    lambda: f64,
    (l, pl): (usize, &SupportPoint),
    (m, pm): (usize, &SupportPoint),
    (n, pn): (usize, &SupportPoint),
) -> SupAddReport {
    let excess = n as f64 * pn.value - (l as f64 * pl.value + m as f64 * pm.value);
    let b = bound(kernel, lambda);
    let bound_holds = [pl.value, pm.value, pn.value]
        .iter()
        .all(|&v| v <= b + BOUND_SLACK);
    SupAddReport {
        lambda,
        n,
        l,
        m,
        f_n: pn.value,
        f_l: pl.value,
        f_m: pm.value,
        excess,
        slack: SUPADD_SLACK,
        holds: excess >= -SUPADD_SLACK,
        bound: b,
        bound_holds,
        equality: (kernel.dims().s == 1).then_some(excess.abs() <= SUPADD_SLACK),
        converged: pl.converged && pm.converged && pn.converged,
    }
}

/// `F_n(λ)` for `n = 1..=n_max` and every sup-additivity check among them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub lambdas: Vec<f64>,
    /// `values[n - 1][k] = F_n(λ_k)`.
    pub values: Vec<Vec<f64>>,
    pub checks: Vec<SupAddReport>,
    /// Checks with `holds == false` or `bound_holds == false`.
    pub violations: usize,
}

/// Computes `F_1, ..., F_{n_max}` on the λ grid, warm-starting each `F_n`
/// with products of the lower-order optima, and flags violations of
/// sup-additivity over all partitions `n = l + m`. No limit is extrapolated.
pub fn convergence_trend(
    kernel: &FsbcKernel,
    lambdas: &[f64],
    n_max: usize,
    config: &OptimizerConfig,
) -> Result<TrendReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    if lambdas.is_empty() {
        return Err(Error::EmptySupport);
    }
    // points[n - 1][k]
    let mut points: Vec<Vec<SupportPoint>> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let solver = RegionSolver::new(kernel, n, config)?;
        let row = lambdas
            .iter()
            .enumerate()
            .map(|(k, &lambda)| {
                let warm: Vec<JointInputLaw> = (1..n)
                    .map(|l| {
                        JointInputLaw::product(&points[l - 1][k].law, &points[n - l - 1][k].law)
                    })
                    .collect();
                solver.optimize(lambda, None, &warm)
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(row);
    }
    let mut checks = Vec::new();
    for n in 2..=n_max {
        for l in 1..=n / 2 {
            let m = n - l;
            for (k, &lambda) in lambdas.iter().enumerate() {
                checks.push(report(
                    kernel,
                    lambda,
                    (l, &points[l - 1][k]),
                    (m, &points[m - 1][k]),
                    (n, &points[n - 1][k]),
                ));
            }
        }
    }
    let violations = checks.iter().filter(|c| !c.holds || !c.bound_holds).count();
    Ok(TrendReport {
        lambdas: lambdas.to_vec(),
        values: points
            .iter()
            .map(|r| r.iter().map(|p| p.value).collect())
            .collect(),
        checks,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_bsbc_family, BsbcFamilySpec};
    use alloc::vec;

    #[test]
    fn memoryless_equality() {
        let k = build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![1.0]],
            eps1: vec![0.1],
            eps12: vec![0.0625],
        })
        .unwrap();
        let r = supadditivity_check(&k, 1.0, 1, 1, &OptimizerConfig::default()).unwrap();
        assert!(r.holds && r.bound_holds, "{r:?}");
        assert_eq!(r.equality, Some(true));
        assert!(r.f_n <= 2.0);
    }

    #[test]
    fn rejects_empty_part() {
        let k = build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![1.0]],
            eps1: vec![0.1],
            eps12: vec![0.0625],
        })
        .unwrap();
        assert!(supadditivity_check(&k, 1.0, 2, 0, &OptimizerConfig::default()).is_err());
    }
}
