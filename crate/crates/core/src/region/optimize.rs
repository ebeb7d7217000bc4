//! Multistart maximization of `F_n(λ)` over the joint simplex of `q(uⁿ, xⁿ)`.
//!
//! Each start runs exponentiated-gradient (mirror) ascent with step halving.
//! The minimum over initial states is first replaced by a soft minimum whose
//! temperature is lowered in stages down to the exact minimum, where the
//! gradient of the lowest-index active state is used. The best exact value
//! seen at any accepted iterate is kept.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rates::RateEvaluator;
use super::{JointInputLaw, OptimizerConfig, RatePair};
use crate::channel::FsbcKernel;
use crate::error::{Error, Result};
use crate::math::{derive_seed, exp, ln, sample_flat_dirichlet};
use crate::par::map_range;

const TEMPERATURES: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 0.0];
const MIN_STEP: f64 = 1e-12;
const MAX_STEP: f64 = 1e3;
const STALL_GAIN: f64 = 1e-13;
const STALL_COUNT: usize = 3;
/// Largest number of free simplex coordinates the grid oracle enumerates.
const ORACLE_MAX_FREE: usize = 4;
const NOISY_U_STARTS: [f64; 3] = [0.1, 0.3, 0.6];

/// Optimizer result at one λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub lambda: f64,
    /// Best objective value found.
    pub value: f64,
    /// Maximizing joint law.
    pub law: JointInputLaw,
    /// `(R_{1,n}, R_{2,n})` of the maximizer for every initial state (only
    /// the fixed state for a per-state point).
    pub rates: Vec<RatePair>,
    /// Initial state attaining `min R_{2,n}` (lowest index on ties).
    pub r2_min_state: usize,
    /// Initial state attaining `min R_{1,n}` (lowest index on ties).
    pub r1_min_state: usize,
    /// Whether the winning start met the stopping rule before the iteration cap.
    pub converged: bool,
    pub best_start: usize,
    /// Best value on the exhaustive grid, when it was tractable.
    pub oracle: Option<f64>,
}

/// `F_n(λ)` on a λ grid, optionally with the fixed-initial-state variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportFunction {
    pub n: usize,
    pub states: usize,
    pub u_card: usize,
    pub lambdas: Vec<f64>,
    pub points: Vec<SupportPoint>,
    /// `per_state[s₀][k]` is `F_n^{s₀}(λ_k)`.
    pub per_state: Option<Vec<Vec<SupportPoint>>>,
}

impl SupportFunction {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn per_state_values(&self, s0: usize) -> Option<Vec<f64>> {
        self.per_state
            .as_ref()
            .and_then(|ps| ps.get(s0))
            .map(|pts| pts.iter().map(|p| p.value).collect())
    }

    pub fn all_converged(&self) -> bool {
        let per_state = self.per_state.iter().flatten().flatten();
        self.points.iter().chain(per_state).all(|p| p.converged)
    }

    /// Index of the argmax law whose guaranteed rates
    /// `(min_{s₀} R₁, min_{s₀} R₂)` clear `(r1, r2)` by the widest margin
    /// `min(R₁ - r1, R₂ - r2)`, with that margin. Ties go to the lowest index.
    pub fn select_law(&self, r1: f64, r2: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.points.iter().enumerate() {
            let g1 = p.rates.iter().map(|r| r.r1).fold(f64::INFINITY, f64::min);
            let g2 = p.rates.iter().map(|r| r.r2).fold(f64::INFINITY, f64::min);
            let margin = (g1 - r1).min(g2 - r2);
            if best.is_none_or(|(_, m)| margin > m) {
                best = Some((i, margin));
            }
        }
        best
    }
}

/// `count` equally spaced points on `[0, 1]`; a single point is `0.5`.
pub fn uniform_lambda_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

/// Soft minimum `-τ ln Σ exp(-v/τ)` and its weights; `τ = 0` is the exact
/// minimum with all weight on the lowest-index minimizer.
fn soft_min(values: &[f64], tau: f64, weights: &mut [f64]) -> f64 {
    let (arg, &m) =
        values.iter().enumerate().fold(
            (0, &values[0]),
            |acc, (i, v)| if *v < *acc.1 { (i, v) } else { acc },
        );
    if tau == 0.0 || values.len() == 1 {
        weights.iter_mut().for_each(|w| *w = 0.0);
        weights[arg] = 1.0;
        return m;
    }
    let mut z = 0.0;
    for (w, &v) in weights.iter_mut().zip(values) {
        *w = exp(-(v - m) / tau);
        z += *w;
    }
    weights.iter_mut().for_each(|w| *w /= z);
    m - tau * ln(z)
}

fn arg_min(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < values[best] { i } else { best })
}

/// The objective restricted to a set of initial states.
struct Objective<'a> {
    eval: &'a RateEvaluator,
    states: Vec<usize>,
    lambda: f64,
    u_card: usize,
}

impl Objective<'_> {
    /// Per-state `(R_{2,n}, R_{1,n})`.
    fn rates(&self, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.eval.n as f64;
        let pen = self.eval.penalty();
        self.states
            .iter()
            .map(|&s| {
                let info = self.eval.channels[s].informations(q, self.u_card);
                (info.u_z / n - pen, info.x_y_given_u / n - pen)
            })
            .unzip()
    }

    fn exact(&self, q: &[f64]) -> f64 {
        let (a, b) = self.rates(q);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        min(&a) + self.lambda * min(&b)
    }

    /// Smoothed value and its gradient (up to a common constant).
    fn smoothed(&self, q: &[f64], tau: f64, grad: &mut [f64]) -> f64 {
        let (a, b) = self.rates(q);
        let k = self.states.len();
        let mut wa = vec![0.0; k];
        let mut wb = vec![0.0; k];
        let value = soft_min(&a, tau, &mut wa) + self.lambda * soft_min(&b, tau, &mut wb);
        let n = self.eval.n as f64;
        let dim = q.len();
        let mut g_uz = vec![0.0; dim];
        let mut g_xyu = vec![0.0; dim];
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (j, &s) in self.states.iter().enumerate() {
            let (ca, cb) = (wa[j] / n, self.lambda * wb[j] / n);
            if ca == 0.0 && cb == 0.0 {
                continue;
            }
            self.eval.channels[s].gradients(q, self.u_card, &mut g_uz, &mut g_xyu);
            for i in 0..dim {
                grad[i] += ca * g_uz[i] + cb * g_xyu[i];
            }
        }
        value
    }
}

struct StartResult {
    value: f64,
    q: Vec<f64>,
    converged: bool,
}

fn mirror_step(q: &[f64], grad: &[f64], eta: f64, out: &mut [f64]) {
    let gmax = q
        .iter()
        .zip(grad)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &g)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for ((o, &w), &g) in out.iter_mut().zip(q).zip(grad) {
        *o = if w > 0.0 {
            w * exp(eta * (g - gmax))
        } else {
            0.0
        };
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

fn ascend(obj: &Objective<'_>, start: Vec<f64>, max_iters: usize) -> StartResult {
    let dim = start.len();
    let mut q = start;
    let mut best = StartResult {
        value: obj.exact(&q),
        q: q.clone(),
        converged: true,
    };
    let temperatures: &[f64] = if obj.states.len() == 1 {
        &TEMPERATURES[TEMPERATURES.len() - 1..]
    } else {
        &TEMPERATURES
    };
    let mut grad = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut eta: f64 = 1.0;
    for &tau in temperatures {
        let mut f = obj.smoothed(&q, tau, &mut grad);
        let mut stalls = 0;
        let mut done = false;
        for _ in 0..max_iters {
            mirror_step(&q, &grad, eta, &mut trial);
            let ft = obj.smoothed(&trial, tau, &mut trial_grad);
            if ft > f {
                let gain = ft - f;
                core::mem::swap(&mut q, &mut trial);
                core::mem::swap(&mut grad, &mut trial_grad);
                f = ft;
                eta = (eta * 1.5).min(MAX_STEP);
                let exact = if tau == 0.0 { ft } else { obj.exact(&q) };
                if exact > best.value {
                    best.value = exact;
                    best.q.copy_from_slice(&q);
                }
                stalls = if gain < STALL_GAIN { stalls + 1 } else { 0 };
                if stalls >= STALL_COUNT {
                    done = true;
                    break;
                }
            } else {
                eta *= 0.5;
                if eta < MIN_STEP {
                    done = true;
                    break;
                }
            }
        }
        if tau == 0.0 {
            best.converged = done;
        }
        eta = eta.max(1e-3);
    }
    best
}

/// All compositions of `total` into `parts` nonnegative integers, in
/// lexicographic order.
fn for_each_composition(parts: usize, total: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, parts: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if buf.len() + 1 == parts {
            buf.push(left);
            f(buf);
            buf.pop();
            return;
        }
        for k in 0..=left {
            buf.push(k);
            rec(buf, parts, left - k, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, parts, total, f);
}

fn grid_oracle(obj: &Objective<'_>, dim: usize, step: f64) -> Option<f64> {
    if dim == 0 || dim - 1 > ORACLE_MAX_FREE || !(step > 0.0 && step <= 1.0) {
        return None;
    }
    let m = libm::round(1.0 / step) as usize;
    let mut best = f64::NEG_INFINITY;
    let mut q = vec![0.0; dim];
    for_each_composition(dim, m, &mut |c| {
        for (w, &k) in q.iter_mut().zip(c) {
            *w = k as f64 / m as f64;
        }
        best = best.max(obj.exact(&q));
    });
    Some(best)
}

/// Reusable optimizer state: the per-state block channels at one blocklength.
#[derive(Debug, Clone)]
pub struct RegionSolver {
    eval: RateEvaluator,
    config: OptimizerConfig,
    u_card: usize,
}

impl RegionSolver {
    pub fn new(kernel: &FsbcKernel, n: usize, config: &OptimizerConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be positive".into(),
            ));
        }
        let eval = RateEvaluator::new(kernel, n, &config.limits)?;
        let u_card = config.u_card.unwrap_or(eval.u_cap());
        if u_card == 0 || u_card > eval.u_cap() {
            return Err(Error::InvalidArgument(alloc::format!(
                "auxiliary cardinality {u_card} outside 1..={}",
                eval.u_cap()
            )));
        }
        let dim = (u_card as u128) * (eval.x_blocks() as u128);
        config.limits.check_cells("joint input law", Some(dim))?;
        config.limits.check_cells(
            "rate evaluation",
            dim.checked_mul(eval.max_output_blocks() as u128),
        )?;
        Ok(RegionSolver {
            eval,
            config: *config,
            u_card,
        })
    }

    pub fn evaluator(&self) -> &RateEvaluator {
        &self.eval
    }

    pub fn u_card(&self) -> usize {
        self.u_card
    }

    fn objective(&self, lambda: f64, state: Option<usize>) -> Objective<'_> {
        Objective {
            eval: &self.eval,
            states: match state {
                Some(s) => vec![s],
                None => (0..self.eval.states()).collect(),
            },
            lambda,
            u_card: self.u_card,
        }
    }

    fn check_lambda(lambda: f64) -> Result<()> {
        if (0.0..=1.0).contains(&lambda) {
            Ok(())
        } else {
            Err(Error::DomainError(alloc::format!(
                "lambda = {lambda} outside [0, 1]"
            )))
        }
    }

    /// Exact objective of a given law, over all states or one fixed state.
    pub fn objective_value(
        &self,
        q: &JointInputLaw,
        lambda: f64,
        state: Option<usize>,
    ) -> Result<f64> {
        Self::check_lambda(lambda)?;
        if q.u_card() != self.u_card
            || q.x_blocks() != self.eval.x_blocks()
            || q.n() != self.eval.n()
        {
            return Err(Error::InvalidArgument(
                "joint law does not match the solver".into(),
            ));
        }
        if state.is_some_and(|s| s >= self.eval.states()) {
            return Err(Error::InvalidArgument("initial state out of range".into()));
        }
        Ok(self.objective(lambda, state).exact(q.probs()))
    }

    fn starts(&self, warm: &[JointInputLaw], tag: u64, lambda: f64) -> Vec<Vec<f64>> {
        let (n, u, xb) = (self.eval.n(), self.u_card, self.eval.x_blocks());
        let mut starts: Vec<Vec<f64>> = warm
            .iter()
            .filter(|w| w.u_card() == u && w.x_blocks() == xb)
            .map(|w| w.probs().to_vec())
            .collect();
        for law in [
            JointInputLaw::uniform(n, u, xb),
            JointInputLaw::u_equals_x(n, u, xb),
            JointInputLaw::u_constant(n, u, xb),
        ] {
            starts.push(law.probs);
        }
        // U = X seen through a symmetric channel of growing noise.
        let sharp = JointInputLaw::u_equals_x(n, u, xb).probs;
        let flat = 1.0 / (u * xb) as f64;
        for t in NOISY_U_STARTS {
            starts.push(sharp.iter().map(|&p| (1.0 - t) * p + t * flat).collect());
        }
        let total = self.config.starts.max(starts.len());
        let mut index = starts.len() as u64;
        while starts.len() < total {
            let seed = derive_seed(self.config.seed, &[n as u64, lambda.to_bits(), tag, index]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            starts.push(sample_flat_dirichlet(&mut rng, u * xb));
            index += 1;
        }
        starts
    }

    /// Maximize over all initial states (`state = None`) or one fixed state.
    pub fn optimize(
        &self,
        lambda: f64,
        state: Option<usize>,
        warm: &[JointInputLaw],
    ) -> Result<SupportPoint> {
        Self::check_lambda(lambda)?;
        if state.is_some_and(|s| s >= self.eval.states()) {
            return Err(Error::InvalidArgument("initial state out of range".into()));
        }
        let obj = self.objective(lambda, state);
        let tag = state.map_or(0, |s| s as u64 + 1);
        let starts = self.starts(warm, tag, lambda);
        let results = map_range(starts.len(), |i| {
            ascend(&obj, starts[i].clone(), self.config.max_iters)
        });
        let mut best = 0;
        for (i, r) in results.iter().enumerate() {
            if r.value > results[best].value {
                best = i;
            }
        }
        let winner = &results[best];
        let oracle = if self.config.grid_oracle {
            grid_oracle(&obj, winner.q.len(), self.config.oracle_step)
        } else {
            None
        };
        let law = JointInputLaw::from_weights(
            self.eval.n(),
            self.u_card,
            self.eval.x_blocks(),
            winner.q.clone(),
        );
        Ok(self.point(
            lambda,
            state,
            law,
            winner.value,
            winner.converged,
            best,
            oracle,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn point(
        &self,
        lambda: f64,
        state: Option<usize>,
        law: JointInputLaw,
        value: f64,
        converged: bool,
        best_start: usize,
        oracle: Option<f64>,
    ) -> SupportPoint {
        let obj = self.objective(lambda, state);
        let (a, b) = obj.rates(law.probs());
        let rates = obj
            .states
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(&s0, (&r2, &r1))| RatePair {
                r1,
                r2,
                n: self.eval.n(),
                s0,
            })
            .collect();
        SupportPoint {
            lambda,
            value,
            rates,
            r2_min_state: obj.states[arg_min(&a)],
            r1_min_state: obj.states[arg_min(&b)],
            law,
            converged,
            best_start,
            oracle,
        }
    }

    /// Re-scores every λ with every maximizer found on the grid and keeps the
    /// better law, so each value dominates all laws seen during the sweep.
    fn cross_check(&self, points: &mut [SupportPoint], state: Option<usize>) {
        let laws: Vec<JointInputLaw> = points.iter().map(|p| p.law.clone()).collect();
        let updates = map_range(points.len(), |k| {
            let obj = self.objective(points[k].lambda, state);
            let mut best: Option<(usize, f64)> = None;
            for (j, law) in laws.iter().enumerate() {
                let v = obj.exact(law.probs());
                if v > best.map_or(points[k].value, |b| b.1) {
                    best = Some((j, v));
                }
            }
            best
        });
        for (k, update) in updates.into_iter().enumerate() {
            if let Some((j, value)) = update {
                let p = &points[k];
                let replaced = self.point(
                    p.lambda,
                    state,
                    laws[j].clone(),
                    value,
                    p.converged,
                    p.best_start,
                    p.oracle,
                );
                points[k] = replaced;
            }
        }
    }

    /// `F_n` on a λ grid; with `per_state`, also `F_n^{s₀}` for every `s₀`.
    pub fn sweep(&self, lambdas: &[f64], per_state: bool) -> Result<SupportFunction> {
        if lambdas.is_empty() {
            return Err(Error::EmptySupport);
        }
        for w in lambdas.windows(2) {
            if w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less) {
                return Err(Error::DomainError(
                    "lambda grid must be strictly ascending".into(),
                ));
            }
        }
        lambdas.iter().try_for_each(|&l| Self::check_lambda(l))?;
        let ns = self.eval.states();
        let variants = if per_state { 1 + ns } else { 1 };
        let tasks = map_range(variants * lambdas.len(), |t| {
            let (v, k) = (t / lambdas.len(), t % lambdas.len());
            let state = if v == 0 { None } else { Some(v - 1) };
            self.optimize(lambdas[k], state, &[])
        });
        let mut tasks = tasks.into_iter().collect::<Result<Vec<_>>>()?;
        let mut rows: Vec<Vec<SupportPoint>> = Vec::with_capacity(variants);
        for _ in 0..variants {
            let rest = tasks.split_off(lambdas.len());
            rows.push(core::mem::replace(&mut tasks, rest));
        }
        for (v, row) in rows.iter_mut().enumerate() {
            self.cross_check(row, if v == 0 { None } else { Some(v - 1) });
        }
        let mut rows = rows.into_iter();
        let points = rows.next().unwrap_or_default();
        let per_state = per_state.then(|| rows.collect());
        Ok(SupportFunction {
            n: self.eval.n(),
            states: ns,
            u_card: self.u_card,
            lambdas: lambdas.to_vec(),
            points,
            per_state,
        })
    }
}

/// `F_n(λ) = max_q { min_s₀ R_{2,n}(q, s₀) + λ min_s₀ R_{1,n}(q, s₀) }`.
pub fn optimize_fn(
    kernel: &FsbcKernel,
    lambda: f64,
    n: usize,
    config: &OptimizerConfig,
) -> Result<SupportPoint> {
    RegionSolver::new(kernel, n, config)?.optimize(lambda, None, &[])
}

/// `F_n^{s₀}(λ)`: the same maximization with the initial state fixed.
pub fn optimize_fn_for_state(
    kernel: &FsbcKernel,
    lambda: f64,
    n: usize,
    s0: usize,
    config: &OptimizerConfig,
) -> Result<SupportPoint> {
    RegionSolver::new(kernel, n, config)?.optimize(lambda, Some(s0), &[])
}

/// λ-sweep of `F_n`, including the fixed-initial-state variants.
pub fn sweep_support(
    kernel: &FsbcKernel,
    n: usize,
    lambdas: &[f64],
    config: &OptimizerConfig,
) -> Result<SupportFunction> {
    RegionSolver::new(kernel, n, config)?.sweep(lambdas, true)
}
