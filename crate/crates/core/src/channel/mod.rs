//! Finite-state broadcast channel laws `p(y, z, s | x, s')`.
//!
//! Tensors are stored flat in the fixed index order `(s_prev, x, y, z, s_next)`.
//! Block indices encode symbol sequences big-endian (first symbol most
//! significant), see [`crate::math::encode_block`].

pub(crate) mod block;
pub(crate) mod sample;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

pub use block::{
    block_law, factorization_deviation, marginal_block_tables, state_transition_products, BlockLaw,
    MarginalTables,
};
pub use sample::{sample_block, BlockSample};

/// Row-sum tolerance for validated inputs.
pub const VALIDATION_TOL: f64 = 1e-12;
/// Row-sum tolerance for computed laws.
pub const ARITHMETIC_TOL: f64 = 1e-9;

/// Enumeration limits. Exceeding either is an error, never a truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub alphabet_cap: usize,
    pub cell_budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            alphabet_cap: 8,
            cell_budget: 1 << 24,
        }
    }
}

impl Limits {
    pub(crate) fn check_cells(&self, what: &'static str, cells: Option<u128>) -> Result<u128> {
        match cells {
            Some(c) if c <= self.cell_budget as u128 => Ok(c),
            other => Err(Error::BudgetExceeded {
                what,
                cells: other.unwrap_or(u128::MAX),
                budget: self.cell_budget,
            }),
        }
    }
}

/// Alphabet sizes |X|, |Y|, |Z|, |S|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub s: usize,
}

impl Alphabets {
    pub fn new(x: usize, y: usize, z: usize, s: usize) -> Self {
        Alphabets { x, y, z, s }
    }

    pub fn kernel_len(&self) -> usize {
        self.s * self.x * self.y * self.z * self.s
    }

    fn check(&self, cap: usize) -> Result<()> {
        for (name, size) in [("X", self.x), ("Y", self.y), ("Z", self.z), ("S", self.s)] {
            if size == 0 || size > cap {
                return Err(Error::AlphabetSize { name, size, cap });
            }
        }
        Ok(())
    }
}

fn check_entries(what: &'static str, probs: &[f64]) -> Result<()> {
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { what, index });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { what, index, value });
        }
    }
    Ok(())
}

fn check_rows(what: &'static str, probs: &[f64], row_len: usize, tol: f64) -> Result<()> {
    for (row, chunk) in probs.chunks(row_len).enumerate() {
        let sum: f64 = chunk.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotStochastic { what, row, sum });
        }
    }
    Ok(())
}

/// One-step law `p(o, s | x, s')` with a single output alphabet `o`.
///
/// A full kernel is a leg whose output is the pair `(y, z)`; its Y and Z
/// marginals are legs as well. Block laws of any leg come from the same
/// forward recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLeg {
    nx: usize,
    no: usize,
    ns: usize,
    probs: Vec<f64>,
}

impl StateLeg {
    /// Validates `probs` indexed `(s_prev, x, o, s_next)`.
    pub fn new(nx: usize, no: usize, ns: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = ns * nx * no * ns;
        if probs.len() != expected || nx == 0 || no == 0 || ns == 0 {
            return Err(Error::DimensionMismatch {
                what: "state leg",
                expected,
                found: probs.len(),
            });
        }
        check_entries("state leg", &probs)?;
        check_rows("state leg", &probs, no * ns, VALIDATION_TOL)?;
        Ok(StateLeg { nx, no, ns, probs })
    }

    pub fn inputs(&self) -> usize {
        self.nx
    }

    pub fn outputs(&self) -> usize {
        self.no
    }

    pub fn states(&self) -> usize {
        self.ns
    }

    #[inline]
    pub fn prob(&self, s_prev: usize, x: usize, o: usize, s_next: usize) -> f64 {
        self.probs[((s_prev * self.nx + x) * self.no + o) * self.ns + s_next]
    }

    /// The `(o, s_next)` block for one `(s_prev, x)`.
    #[inline]
    pub(crate) fn row(&self, s_prev: usize, x: usize) -> &[f64] {
        let w = self.no * self.ns;
        let start = (s_prev * self.nx + x) * w;
        &self.probs[start..start + w]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A validated finite-state broadcast channel kernel.
///
/// Validation is the only way to build one; see [`validate_kernel`].
#[derive(Debug, Clone, PartialEq)]
pub struct FsbcKernel {
    dims: Alphabets,
    label: String,
    joint: StateLeg,
    y_leg: StateLeg,
    z_leg: StateLeg,
    // transitions[x][s_prev][s_next]
    transitions: Vec<f64>,
}

/// Validates a raw tensor indexed `(s_prev, x, y, z, s_next)`.
pub fn validate_kernel(
    label: impl Into<String>,
    dims: Alphabets,
    probs: Vec<f64>,
    limits: &Limits,
) -> Result<FsbcKernel> {
    dims.check(limits.alphabet_cap)?;
    if probs.len() != dims.kernel_len() {
        return Err(Error::DimensionMismatch {
            what: "kernel",
            expected: dims.kernel_len(),
            found: probs.len(),
        });
    }
    check_entries("kernel", &probs)?;
    check_rows("kernel", &probs, dims.y * dims.z * dims.s, VALIDATION_TOL)?;
    Ok(FsbcKernel::from_validated(label.into(), dims, probs))
}

impl FsbcKernel {
    pub fn new(label: impl Into<String>, dims: Alphabets, probs: Vec<f64>) -> Result<Self> {
        validate_kernel(label, dims, probs, &Limits::default())
    }

    /// Kernels assembled from validated factors: rows only need to sum to 1
    /// within the post-arithmetic tolerance.
    fn derived(label: String, dims: Alphabets, probs: Vec<f64>) -> Result<Self> {
        dims.check(Limits::default().alphabet_cap)?;
        check_entries("kernel", &probs)?;
        check_rows("kernel", &probs, dims.y * dims.z * dims.s, ARITHMETIC_TOL)?;
        Ok(FsbcKernel::from_validated(label, dims, probs))
    }

    fn from_validated(label: String, dims: Alphabets, probs: Vec<f64>) -> Self {
        let Alphabets {
            x: nx,
            y: ny,
            z: nz,
            s: ns,
        } = dims;
        let mut y_probs = vec![0.0; ns * nx * ny * ns];
        let mut z_probs = vec![0.0; ns * nx * nz * ns];
        let mut transitions = vec![0.0; nx * ns * ns];
        for sp in 0..ns {
            for x in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        for s in 0..ns {
                            let p = probs[(((sp * nx + x) * ny + y) * nz + z) * ns + s];
                            y_probs[((sp * nx + x) * ny + y) * ns + s] += p;
                            z_probs[((sp * nx + x) * nz + z) * ns + s] += p;
                            transitions[(x * ns + sp) * ns + s] += p;
                        }
                    }
                }
            }
        }
        let leg = |no, probs| StateLeg { nx, no, ns, probs };
        FsbcKernel {
            dims,
            label,
            joint: leg(ny * nz, probs),
            y_leg: leg(ny, y_probs),
            z_leg: leg(nz, z_probs),
            transitions,
        }
    }

    pub fn dims(&self) -> Alphabets {
        self.dims
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Flat tensor in `(s_prev, x, y, z, s_next)` order.
    pub fn probs(&self) -> &[f64] {
        self.joint.probs()
    }

    #[inline]
    pub fn prob(&self, s_prev: usize, x: usize, y: usize, z: usize, s_next: usize) -> f64 {
        self.joint.prob(s_prev, x, y * self.dims.z + z, s_next)
    }

    /// The kernel as a leg with output `o = y * |Z| + z`.
    pub fn joint_leg(&self) -> &StateLeg {
        &self.joint
    }

    /// `p(y, s | x, s')`.
    pub fn y_leg(&self) -> &StateLeg {
        &self.y_leg
    }

    /// `p(z, s | x, s')`.
    pub fn z_leg(&self) -> &StateLeg {
        &self.z_leg
    }

    /// State transition matrix `T_x(s' -> s) = Σ_{y,z} p(y, z, s | x, s')`, row-major.
    pub fn transition(&self, x: usize) -> &[f64] {
        let w = self.dims.s * self.dims.s;
        &self.transitions[x * w..(x + 1) * w]
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// A memoryless, state-independent degrading channel `p̃(z | y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradingKernel {
    ny: usize,
    nz: usize,
    probs: Vec<f64>,
}

impl DegradingKernel {
    /// Validates a row-major `|Y| x |Z|` matrix.
    pub fn new(ny: usize, nz: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != ny * nz || ny == 0 || nz == 0 {
            return Err(Error::DimensionMismatch {
                what: "degrading kernel",
                expected: ny * nz,
                found: probs.len(),
            });
        }
        check_entries("degrading kernel", &probs)?;
        check_rows("degrading kernel", &probs, nz, VALIDATION_TOL)?;
        Ok(DegradingKernel { ny, nz, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ny = rows.len();
        let nz = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nz) {
            return Err(Error::DimensionMismatch {
                what: "degrading kernel rows",
                expected: nz,
                found: rows.iter().map(Vec::len).find(|&l| l != nz).unwrap_or(0),
            });
        }
        Self::new(ny, nz, rows.concat())
    }

    /// Binary symmetric degrading channel with crossover `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::DomainError(format!(
                "crossover {eps} outside [0, 1]"
            )));
        }
        Self::new(2, 2, vec![1.0 - eps, eps, eps, 1.0 - eps])
    }

    pub fn identity(size: usize) -> Self {
        let mut probs = vec![0.0; size * size];
        for i in 0..size {
            probs[i * size + i] = 1.0;
        }
        DegradingKernel {
            ny: size,
            nz: size,
            probs,
        }
    }

    pub(crate) fn from_projected(ny: usize, nz: usize, probs: Vec<f64>) -> Self {
        DegradingKernel { ny, nz, probs }
    }

    pub fn inputs(&self) -> usize {
        self.ny
    }

    pub fn outputs(&self) -> usize {
        self.nz
    }

    #[inline]
    pub fn prob(&self, y: usize, z: usize) -> f64 {
        self.probs[y * self.nz + z]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.nz).map(<[f64]>::to_vec).collect()
    }

    /// Largest elementwise gap to another kernel of the same shape.
    pub fn max_abs_diff(&self, other: &DegradingKernel) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for DegradingKernel {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.ny))?;
        for row in self.probs.chunks(self.nz) {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for DegradingKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        DegradingKernel::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Parameters of the K-state binary symmetric broadcast family: a Markov
/// state chain `p(s | s')`, and per next-state crossovers for the X→Y leg
/// (`eps1`) and the Y→Z degrading leg (`eps12`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsbcFamilySpec {
    pub state_chain: Vec<Vec<f64>>,
    pub eps1: Vec<f64>,
    pub eps12: Vec<f64>,
}

impl BsbcFamilySpec {
    pub fn states(&self) -> usize {
        self.state_chain.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.state_chain.len();
        if k == 0 {
            return Err(Error::InvalidSpec("state chain is empty".to_string()));
        }
        if self.eps1.len() != k || self.eps12.len() != k {
            return Err(Error::InvalidSpec(format!(
                "{k} states but {} eps1 and {} eps12 values",
                self.eps1.len(),
                self.eps12.len()
            )));
        }
        for (i, row) in self.state_chain.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSpec(format!(
                    "state_chain row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::InvalidSpec(format!(
                    "state_chain row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::InvalidSpec(format!(
                    "state_chain row {i} sums to {sum}"
                )));
            }
        }
        for (i, &e) in self.eps1.iter().enumerate() {
            if !(e > 0.0 && e < 0.5) {
                return Err(Error::InvalidSpec(format!(
                    "eps1[{i}] = {e} outside (0, 0.5)"
                )));
            }
        }
        for (i, &e) in self.eps12.iter().enumerate() {
            if !(0.0..=0.5).contains(&e) {
                return Err(Error::InvalidSpec(format!(
                    "eps12[{i}] = {e} outside [0, 0.5]"
                )));
            }
        }
        Ok(())
    }

    /// End-to-end X→Z crossover in each state.
    pub fn end_to_end(&self) -> Vec<f64> {
        self.eps1
            .iter()
            .zip(&self.eps12)
            .map(|(&a, &b)| a * (1.0 - b) + (1.0 - a) * b)
            .collect()
    }
}

#[inline]
fn bsc(eps: f64, input: usize, output: usize) -> f64 {
    if input == output {
        1.0 - eps
    } else {
        eps
    }
}

/// `p(y, z, s | x, s') = p(s | s') · BSC_{ε1(s)}(y | x) · BSC_{ε12(s)}(z | y)`.
pub fn build_bsbc_family(spec: &BsbcFamilySpec) -> Result<FsbcKernel> {
    spec.validate()?;
    let k = spec.states();
    let dims = Alphabets::new(2, 2, 2, k);
    let mut probs = vec![0.0; dims.kernel_len()];
    for sp in 0..k {
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    for s in 0..k {
                        probs[(((sp * 2 + x) * 2 + y) * 2 + z) * k + s] = spec.state_chain[sp][s]
                            * bsc(spec.eps1[s], x, y)
                            * bsc(spec.eps12[s], y, z);
                    }
                }
            }
        }
    }
    FsbcKernel::derived(format!("bsbc-family(K={k})"), dims, probs)
}

/// Effective crossover of two cascaded binary symmetric channels.
pub fn crossover_compose(eps_a: f64, eps_b: f64) -> Result<f64> {
    for e in [eps_a, eps_b] {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::DomainError(format!("crossover {e} outside [0, 1]")));
        }
    }
    Ok(eps_a * (1.0 - eps_b) + (1.0 - eps_a) * eps_b)
}

/// Crossover of the degrading leg that turns BSC(ε1) into BSC(ε2).
pub fn crossover_residual(eps1: f64, eps2: f64) -> Result<f64> {
    if !(eps1 > 0.0 && eps1 < 0.5) {
        return Err(Error::DomainError(format!(
            "eps1 = {eps1} outside (0, 0.5)"
        )));
    }
    if !(eps2 >= eps1 && eps2 < 0.5) {
        return Err(Error::DomainError(format!(
            "eps2 = {eps2} outside [eps1, 0.5) with eps1 = {eps1}"
        )));
    }
    Ok((eps2 - eps1) / (1.0 - 2.0 * eps1))
}

/// Full kernel `p(y, z, s | x, s') = p(y, s | x, s') · p̃(z | y)`.
pub fn compose_degraded(leg: &StateLeg, dk: &DegradingKernel) -> Result<FsbcKernel> {
    if leg.outputs() != dk.inputs() {
        return Err(Error::DimensionMismatch {
            what: "degrading kernel input alphabet",
            expected: leg.outputs(),
            found: dk.inputs(),
        });
    }
    let dims = Alphabets::new(leg.inputs(), leg.outputs(), dk.outputs(), leg.states());
    let Alphabets {
        x: nx,
        y: ny,
        z: nz,
        s: ns,
    } = dims;
    let mut probs = vec![0.0; dims.kernel_len()];
    for sp in 0..ns {
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    for s in 0..ns {
                        probs[(((sp * nx + x) * ny + y) * nz + z) * ns + s] =
                            leg.prob(sp, x, y, s) * dk.prob(y, z);
                    }
                }
            }
        }
    }
    FsbcKernel::derived("composed-degraded".to_string(), dims, probs)
}
