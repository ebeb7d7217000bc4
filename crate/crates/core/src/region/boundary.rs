//! Rate regions as intersections of half-planes `R₂ ≤ F(λ) - λ R₁`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SupportFunction;
use crate::error::{Error, Result};
use crate::math::log2;

/// Number of `R₁` samples on the default boundary grid.
pub const DEFAULT_R1_POINTS: usize = 101;

/// Supporting lines `{(λ_k, F_k)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportLines {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
}

impl SupportLines {
    pub fn new(lambdas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::EmptySupport);
        }
        if lambdas.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "supporting lines",
                expected: lambdas.len(),
                found: values.len(),
            });
        }
        Ok(SupportLines { lambdas, values })
    }

    /// Lines of the min-inside-max support function `F_n`.
    pub fn from_support(sf: &SupportFunction) -> Result<Self> {
        Self::new(sf.lambdas.clone(), sf.values())
    }

    /// Lines of the fixed-initial-state support function `F_n^{s₀}`.
    pub fn for_state(sf: &SupportFunction, s0: usize) -> Result<Self> {
        let values = sf.per_state_values(s0).ok_or_else(|| {
            Error::InvalidArgument(alloc::format!("no per-state support for s0 = {s0}"))
        })?;
        Self::new(sf.lambdas.clone(), values)
    }

    /// Some `F_k < 0`: not even `R₁ = R₂ = 0` is admitted.
    pub fn is_empty_region(&self) -> bool {
        self.values.iter().any(|&f| f < 0.0)
    }

    /// `max(0, min_k F_k - λ_k R₁)`.
    pub fn r2_at(&self, r1: f64) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.values)
            .map(|(l, f)| f - l * r1)
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Largest `R₁` not cut off by any line with `λ > 0`, capped at `cap`.
    pub fn r1_max(&self, cap: f64) -> f64 {
        if self.is_empty_region() {
            return 0.0;
        }
        self.lambdas
            .iter()
            .zip(&self.values)
            .filter(|(l, _)| **l > 0.0)
            .map(|(l, f)| f / l)
            .fold(cap, f64::min)
            .max(0.0)
    }
}

/// `points` equally spaced values on `[0, r1_max]`.
pub fn default_r1_grid(r1_max: f64, points: usize) -> Vec<f64> {
    if points <= 1 || r1_max <= 0.0 {
        return alloc::vec![0.0];
    }
    (0..points)
        .map(|i| r1_max * i as f64 / (points - 1) as f64)
        .collect()
}

/// The rate region at one blocklength: its supporting lines and the derived
/// boundary `R₂(R₁)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    pub n: usize,
    pub lines: SupportLines,
    /// No line admits the origin.
    pub empty: bool,
    /// Upper limit on `R₁` independent of the lines (`log2|X|`).
    pub r1_cap: f64,
    pub r1_max: f64,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl RateRegion {
    /// Builds the boundary on `r1_grid`, or on [`DEFAULT_R1_POINTS`] points
    /// over `[0, r1_max]` with `r1_max ≤ r1_cap`.
    pub fn from_lines(
        n: usize,
        lines: SupportLines,
        r1_cap: f64,
        r1_grid: Option<&[f64]>,
    ) -> Result<Self> {
        let r1_max = lines.r1_max(r1_cap);
        let r1 = match r1_grid {
            Some(g) => {
                if g.is_empty() {
                    return Err(Error::InvalidArgument("empty R1 grid".into()));
                }
                if g.iter().any(|&r| !(r >= 0.0 && r.is_finite()))
                    || g.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::DomainError(
                        "R1 grid must be ascending and nonnegative".into(),
                    ));
                }
                g.to_vec()
            }
            None => default_r1_grid(r1_max, DEFAULT_R1_POINTS),
        };
        let empty = lines.is_empty_region();
        let r2 = r1
            .iter()
            .map(|&r| if empty { 0.0 } else { lines.r2_at(r) })
            .collect();
        Ok(RateRegion {
            n,
            lines,
            empty,
            r1_cap,
            r1_max,
            r1,
            r2,
        })
    }

    /// `(R₁, R₂) ≥ 0` satisfies every supporting line within `tol`.
    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        !self.empty
            && r1 >= -tol
            && r2 >= -tol
            && self
                .lines
                .lambdas
                .iter()
                .zip(&self.lines.values)
                .all(|(l, f)| r2 + l * r1 <= f + tol)
    }

    /// Triple view: `R₀ + R₂ ≤ F(λ) - λ R₁` for every line, all rates `≥ 0`.
    pub fn contains_triple(&self, r0: f64, r1: f64, r2: f64, tol: f64) -> bool {
        r0 >= -tol && self.contains(r1, r0 + r2, tol)
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.r2.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    /// Successive chord slopes do not increase.
    pub fn is_concave(&self, tol: f64) -> bool {
        let slopes: Vec<f64> = self
            .r1
            .windows(2)
            .zip(self.r2.windows(2))
            .map(|(a, b)| (b[1] - b[0]) / (a[1] - a[0]))
            .collect();
        let width = self
            .r1
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        slopes
            .windows(2)
            .all(|s| s[1] <= s[0] + tol / width.max(f64::MIN_POSITIVE))
    }

    /// Every emitted boundary point satisfies every supporting line.
    pub fn points_satisfy_lines(&self, tol: f64) -> bool {
        self.empty
            || self
                .r1
                .iter()
                .zip(&self.r2)
                .all(|(&a, &b)| self.contains(a, b, tol))
    }
}

fn r1_cap(sf: &SupportFunction) -> f64 {
    let xb = sf.points.first().map_or(1, |p| p.law.x_blocks());
    log2(xb as f64) / sf.n as f64
}

/// `R₂(R₁) = max(0, min_k F_n(λ_k) - λ_k R₁)` for the min-inside-max `F_n`.
pub fn boundary_from_support(sf: &SupportFunction, r1_grid: Option<&[f64]>) -> Result<RateRegion> {
    RateRegion::from_lines(sf.n, SupportLines::from_support(sf)?, r1_cap(sf), r1_grid)
}

/// Intersection of regions sharing a λ grid: the pointwise minimum of their
/// supporting values.
pub fn intersect_regions(regions: &[RateRegion], r1_grid: Option<&[f64]>) -> Result<RateRegion> {
    let first = regions.first().ok_or(Error::EmptySupport)?;
    for r in regions {
        if r.lines.lambdas != first.lines.lambdas || r.n != first.n {
            return Err(Error::GridMismatch);
        }
    }
    let values = (0..first.lines.values.len())
        .map(|k| {
            regions
                .iter()
                .map(|r| r.lines.values[k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let cap = regions
        .iter()
        .map(|r| r.r1_cap)
        .fold(f64::INFINITY, f64::min);
    let lines = SupportLines::new(first.lines.lambdas.clone(), values)?;
    RateRegion::from_lines(first.n, lines, cap, r1_grid)
}

/// The intersection of the fixed-initial-state regions next to the region of
/// the min-inside-max `F_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub lambdas: Vec<f64>,
    pub min_inside_max: Vec<f64>,
    /// `min_s₀ F_n^{s₀}(λ)`.
    pub intersection: Vec<f64>,
    /// `intersection - min_inside_max` per λ.
    pub gap: Vec<f64>,
    /// `max_s₀ F_n^{s₀}(λ) - min_s₀ F_n^{s₀}(λ)` per λ.
    pub spread: Vec<f64>,
    pub max_gap: f64,
    pub max_spread: f64,
    pub per_state: Vec<RateRegion>,
    pub intersected: RateRegion,
    pub min_max_region: RateRegion,
}

/// Builds every per-state region, their intersection and the min-inside-max
/// region, and reports the gap and the spread over initial states.
pub fn compare_intersection(
    sf: &SupportFunction,
    r1_grid: Option<&[f64]>,
) -> Result<IntersectionReport> {
    let cap = r1_cap(sf);
    let per_state = (0..sf.states)
        .map(|s0| RateRegion::from_lines(sf.n, SupportLines::for_state(sf, s0)?, cap, r1_grid))
        .collect::<Result<Vec<_>>>()?;
    let intersected = intersect_regions(&per_state, r1_grid)?;
    let min_max_region = boundary_from_support(sf, r1_grid)?;
    let min_inside_max = min_max_region.lines.values.clone();
    let intersection = intersected.lines.values.clone();
    let gap: Vec<f64> = intersection
        .iter()
        .zip(&min_inside_max)
        .map(|(a, b)| a - b)
        .collect();
    let spread: Vec<f64> = (0..sf.lambdas.len())
        .map(|k| {
            let vals = per_state.iter().map(|r| r.lines.values[k]);
            let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    Ok(IntersectionReport {
        lambdas: sf.lambdas.clone(),
        max_gap: gap.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_spread: spread.iter().copied().fold(0.0, f64::max),
        min_inside_max,
        intersection,
        gap,
        spread,
        per_state,
        intersected,
        min_max_region,
    })
}
