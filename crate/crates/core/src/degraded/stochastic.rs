use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{marginal_block_tables, DegradingKernel, FsbcKernel, Limits};
use crate::error::{Error, Result};
use crate::math::{derive_seed, project_simplex, sample_flat_dirichlet, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StochasticVerdict {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticReport {
    pub verdict: StochasticVerdict,
    /// Best `p̃(z | y)` found, as rows over `z`.
    pub kernel: DegradingKernel,
    /// Max-norm violation of the one-step identity at `kernel`.
    pub residual: f64,
    pub tol: f64,
    pub converged: bool,
    pub starts: usize,
    pub used_grid: bool,
}

/// Solver settings for [`find_degrading_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradingSearch {
    pub tol: f64,
    pub starts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Exhaustive grid fallback when `|Y|·|Z|` is at most this.
    pub grid_max_cells: usize,
    /// Upper bound on the number of grid points visited.
    pub grid_points: usize,
}

impl Default for DegradingSearch {
    fn default() -> Self {
        DegradingSearch {
            tol: 1e-9,
            starts: 16,
            max_iters: 20_000,
            seed: 0,
            grid_max_cells: 9,
            grid_points: 1 << 21,
        }
    }
}

/// The linear map `p̃ ↦ Σ_y p(y, s | x, s') p̃(z | y) - p(z, s | x, s')`,
/// with one row per `(s', x, s)`.
struct Problem {
    rows: usize,
    ny: usize,
    nz: usize,
    m: Vec<f64>,
    l: Vec<f64>,
    gram: Vec<f64>,
    cross: Vec<f64>,
    lip: f64,
}

impl Problem {
    fn new(kernel: &FsbcKernel) -> Self {
        let d = kernel.dims();
        let rows = d.s * d.x * d.s;
        let (ny, nz) = (d.y, d.z);
        let mut m = vec![0.0; rows * ny];
        let mut l = vec![0.0; rows * nz];
        for sp in 0..d.s {
            for x in 0..d.x {
                for s in 0..d.s {
                    let r = (sp * d.x + x) * d.s + s;
                    for y in 0..ny {
                        m[r * ny + y] = kernel.y_leg().prob(sp, x, y, s);
                    }
                    for z in 0..nz {
                        l[r * nz + z] = kernel.z_leg().prob(sp, x, z, s);
                    }
                }
            }
        }
        let mut gram = vec![0.0; ny * ny];
        let mut cross = vec![0.0; ny * nz];
        for r in 0..rows {
            for a in 0..ny {
                let ma = m[r * ny + a];
                for b in 0..ny {
                    gram[a * ny + b] += ma * m[r * ny + b];
                }
                for z in 0..nz {
                    cross[a * nz + z] += ma * l[r * nz + z];
                }
            }
        }
        let lip = top_eigenvalue(&gram, ny).max(1e-12);
        Problem {
            rows,
            ny,
            nz,
            m,
            l,
            gram,
            cross,
            lip,
        }
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for r in 0..self.rows {
            for z in 0..self.nz {
                let mut acc = -self.l[r * self.nz + z];
                for y in 0..self.ny {
                    acc += self.m[r * self.ny + y] * p[y * self.nz + z];
                }
                out[r * self.nz + z] = acc;
            }
        }
    }

    fn max_residual(&self, p: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.rows * self.nz];
        self.residuals(p, &mut buf);
        buf.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    fn objective(&self, p: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.rows * self.nz];
        self.residuals(p, &mut buf);
        0.5 * buf.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        for a in 0..self.ny {
            for z in 0..self.nz {
                let mut acc = -self.cross[a * self.nz + z];
                for b in 0..self.ny {
                    acc += self.gram[a * self.ny + b] * p[b * self.nz + z];
                }
                out[a * self.nz + z] = acc;
            }
        }
    }

    fn project(&self, p: &mut [f64]) {
        for row in p.chunks_mut(self.nz) {
            project_simplex(row);
        }
    }

    /// Gradient step from `p`, projected. Returns the largest coordinate move.
    fn step(&self, p: &[f64], grad: &mut [f64], out: &mut [f64]) -> f64 {
        self.gradient(p, grad);
        for ((o, &v), &g) in out.iter_mut().zip(p).zip(grad.iter()) {
            *o = v - g / self.lip;
        }
        self.project(out);
        out.iter()
            .zip(p)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

fn top_eigenvalue(a: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                w[i] += a[i * n + j] * v[j];
            }
        }
        let norm = sqrt(w.iter().map(|x| x * x).sum());
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / sqrt(v.iter().map(|x| x * x).sum());
        v = w.into_iter().map(|x| x / norm).collect();
    }
    // Power iteration approaches from below; pad so 1/L stays a safe step.
    lambda * 1.01
}

/// Accelerated projected gradient on the least-squares residual, with
/// restart whenever the objective goes up. Returns the iterate and whether
/// the projected-gradient step vanished.
fn least_squares(problem: &Problem, start: Vec<f64>, max_iters: usize) -> (Vec<f64>, bool) {
    let len = start.len();
    let mut x = start;
    let mut y = x.clone();
    let mut t = 1.0;
    let mut grad = vec![0.0; len];
    let mut next = vec![0.0; len];
    let mut fx = problem.objective(&x);
    for _ in 0..max_iters {
        problem.step(&y, &mut grad, &mut next);
        let fnext = problem.objective(&next);
        if fnext > fx {
            if t == 1.0 {
                // Plain projected step from x failed to descend: stationary.
                return (x, true);
            }
            y.copy_from_slice(&x);
            t = 1.0;
            continue;
        }
        let tn = (1.0 + sqrt(1.0 + 4.0 * t * t)) / 2.0;
        let beta = (t - 1.0) / tn;
        let moved = next
            .iter()
            .zip(&x)
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
        for i in 0..len {
            y[i] = next[i] + beta * (next[i] - x[i]);
        }
        x.copy_from_slice(&next);
        fx = fnext;
        t = tn;
        if moved < 1e-15 {
            let mut probe = vec![0.0; len];
            if problem.step(&x, &mut grad, &mut probe) < 1e-14 {
                return (x, true);
            }
        }
    }
    let mut probe = vec![0.0; len];
    let stationary = problem.step(&x, &mut grad, &mut probe) < 1e-12;
    (x, stationary)
}

/// Projected subgradient descent on the max-norm residual; keeps the best iterate.
fn polish_max_norm(problem: &Problem, start: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let mut p = start.to_vec();
    let mut best = p.clone();
    let mut best_r = problem.max_residual(&p);
    let mut res = vec![0.0; problem.rows * problem.nz];
    for t in 0..iters {
        problem.residuals(&p, &mut res);
        let (idx, r) =
            res.iter().enumerate().fold(
                (0, 0.0),
                |acc, (i, &v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
            );
        if r == 0.0 {
            break;
        }
        let (row, z) = (idx / problem.nz, idx % problem.nz);
        let sign = res[idx].signum();
        let g2: f64 = (0..problem.ny)
            .map(|y| problem.m[row * problem.ny + y])
            .map(|v| v * v)
            .sum();
        if g2 == 0.0 {
            break;
        }
        let eta = 0.5 * r / (g2 * sqrt((t + 1) as f64));
        for y in 0..problem.ny {
            p[y * problem.nz + z] -= eta * sign * problem.m[row * problem.ny + y];
        }
        problem.project(&mut p);
        let cur = problem.max_residual(&p);
        if cur < best_r {
            best_r = cur;
            best.copy_from_slice(&p);
        }
    }
    (best, best_r)
}

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive search over products of row-simplex grids.
fn grid_search(problem: &Problem, max_points: usize) -> Option<(Vec<f64>, f64)> {
    let (ny, nz) = (problem.ny, problem.nz);
    let per_row = |m: usize| binomial(m + nz - 1, nz - 1);
    let fits = |m: usize| {
        per_row(m)
            .checked_pow(ny as u32)
            .is_some_and(|t| t <= max_points as u128)
    };
    if !fits(1) {
        return None;
    }
    let mut res = 1;
    while res < 1000 && fits(res + 1) {
        res += 1;
    }
    let rows: Vec<Vec<f64>> = compositions(res, nz)
        .into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / res as f64).collect())
        .collect();
    let cands = rows.len();
    // contrib[y][j][r * nz + z] = m[r][y] · rows[j][z]
    let w = problem.rows * nz;
    let mut contrib = vec![0.0; ny * cands * w];
    for y in 0..ny {
        for (j, row) in rows.iter().enumerate() {
            for r in 0..problem.rows {
                for z in 0..nz {
                    contrib[(y * cands + j) * w + r * nz + z] = problem.m[r * ny + y] * row[z];
                }
            }
        }
    }
    let mut choice = vec![0usize; ny];
    let mut best_choice = choice.clone();
    let mut best = f64::INFINITY;
    loop {
        let mut worst: f64 = 0.0;
        for i in 0..w {
            let mut acc = -problem.l[i];
            for (y, &j) in choice.iter().enumerate() {
                acc += contrib[(y * cands + j) * w + i];
            }
            worst = worst.max(acc.abs());
            if worst >= best {
                break;
            }
        }
        if worst < best {
            best = worst;
            best_choice.copy_from_slice(&choice);
        }
        let mut k = 0;
        loop {
            if k == ny {
                let p: Vec<f64> = best_choice.iter().flat_map(|&j| rows[j].clone()).collect();
                return Some((p, best));
            }
            choice[k] += 1;
            if choice[k] < cands {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Finds a row-stochastic `p̃(z | y)` minimizing the largest violation of
/// `p(z, s | x, s') = Σ_y p(y, s | x, s') p̃(z | y)`.
///
/// The identity is linear in `p̃`, so the least-squares problem over the
/// product of row simplices is convex: feasibility shows up as a zero
/// least-squares optimum. Infeasible instances are refined on the max norm,
/// with an exhaustive grid for small alphabets.
pub fn find_degrading_kernel(
    kernel: &FsbcKernel,
    search: &DegradingSearch,
) -> Result<StochasticReport> {
    let problem = Problem::new(kernel);
    let (ny, nz) = (problem.ny, problem.nz);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut converged = true;
    for start in 0..search.starts.max(1) {
        let init = match start {
            0 => vec![1.0 / nz as f64; ny * nz],
            1 if ny == nz => DegradingKernel::identity(ny).probs().to_vec(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(search.seed, &[start as u64]));
                (0..ny)
                    .flat_map(|_| sample_flat_dirichlet(&mut rng, nz))
                    .collect()
            }
        };
        let (p, ok) = least_squares(&problem, init, search.max_iters);
        let r = problem.max_residual(&p);
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((p, r));
            converged = ok;
        }
    }
    let (mut p, mut residual) = best.expect("at least one start");
    let mut used_grid = false;
    if residual >= search.tol {
        let (q, r) = polish_max_norm(&problem, &p, 5_000);
        if r < residual {
            p = q;
            residual = r;
        }
        if ny * nz <= search.grid_max_cells {
            if let Some((q, r)) = grid_search(&problem, search.grid_points) {
                used_grid = true;
                let (q, r) = {
                    let (qq, rr) = polish_max_norm(&problem, &q, 5_000);
                    if rr < r {
                        (qq, rr)
                    } else {
                        (q, r)
                    }
                };
                if r < residual {
                    p = q;
                    residual = r;
                }
            }
        }
    }
    let verdict = if residual < search.tol {
        StochasticVerdict::Feasible
    } else {
        StochasticVerdict::Infeasible
    };
    let report = StochasticReport {
        verdict,
        kernel: DegradingKernel::from_projected(ny, nz, p),
        residual,
        tol: search.tol,
        converged,
        starts: search.starts.max(1),
        used_grid,
    };
    if !converged && verdict == StochasticVerdict::Infeasible {
        return Err(Error::SolverStalled {
            best: Box::new(report),
        });
    }
    Ok(report)
}

/// Max gap between `p(zⁿ | xⁿ, s₀)` from the kernel's block law and the
/// same table obtained by passing `p(yⁿ | xⁿ, s₀)` through `p̃` symbol by symbol.
pub fn verify_block_degrading(
    kernel: &FsbcKernel,
    dk: &DegradingKernel,
    n: usize,
    s0: usize,
    limits: &Limits,
) -> Result<f64> {
    let d = kernel.dims();
    if dk.inputs() != d.y || dk.outputs() != d.z {
        return Err(Error::DimensionMismatch {
            what: "degrading kernel shape",
            expected: d.y * d.z,
            found: dk.inputs() * dk.outputs(),
        });
    }
    let tables = marginal_block_tables(kernel, n, s0, limits)?;
    let (nyb, nzb) = (tables.y_blocks, tables.z_blocks);
    limits.check_cells(
        "block degrading map yⁿ·zⁿ·xⁿ",
        Some((nyb * nzb) as u128 * tables.x_blocks as u128),
    )?;
    // Kronecker power of p̃, built one symbol at a time.
    let mut map = vec![1.0];
    let (mut rows, mut cols) = (1, 1);
    for _ in 0..n {
        let mut next = vec![0.0; rows * d.y * cols * d.z];
        for a in 0..rows {
            for y in 0..d.y {
                for b in 0..cols {
                    for z in 0..d.z {
                        next[(a * d.y + y) * cols * d.z + b * d.z + z] =
                            map[a * cols + b] * dk.prob(y, z);
                    }
                }
            }
        }
        map = next;
        rows *= d.y;
        cols *= d.z;
    }
    let mut worst: f64 = 0.0;
    for xi in 0..tables.x_blocks {
        for zi in 0..nzb {
            let composed: f64 = (0..nyb)
                .map(|yi| tables.py[xi * nyb + yi] * map[yi * nzb + zi])
                .sum();
            worst = worst.max((composed - tables.pz[xi * nzb + zi]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_bsbc_family, compose_degraded, BsbcFamilySpec, StateLeg};

    fn worked_example() -> FsbcKernel {
        build_bsbc_family(&BsbcFamilySpec {
            state_chain: vec![vec![0.95, 0.05], vec![0.3, 0.7]],
            eps1: vec![0.10, 0.18],
            eps12: vec![0.0625, 0.0625],
        })
        .unwrap()
    }

    fn single_leg(eps_y: f64, eps_z: f64) -> FsbcKernel {
        // Single state, Y = BSC(eps_y), Z = BSC(eps_z), conditionally independent.
        let f = |e: f64, a: usize, b: usize| if a == b { 1.0 - e } else { e };
        let mut probs = vec![0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    probs[(x * 2 + y) * 2 + z] = f(eps_y, x, y) * f(eps_z, x, z);
                }
            }
        }
        FsbcKernel::new("two-bsc", crate::channel::Alphabets::new(2, 2, 2, 1), probs).unwrap()
    }

    #[test]
    fn recovers_worked_example_kernel() {
        let r = find_degrading_kernel(&worked_example(), &DegradingSearch::default()).unwrap();
        assert_eq!(r.verdict, StochasticVerdict::Feasible);
        assert!(r.residual < 1e-9);
        let want = DegradingKernel::bsc(0.0625).unwrap();
        assert!(r.kernel.max_abs_diff(&want) < 1e-9, "{:?}", r.kernel);
    }

    #[test]
    fn identical_marginals_give_identity() {
        let k = single_leg(0.2, 0.2);
        let r = find_degrading_kernel(&k, &DegradingSearch::default()).unwrap();
        assert_eq!(r.verdict, StochasticVerdict::Feasible);
        assert!(r.kernel.max_abs_diff(&DegradingKernel::identity(2)) < 1e-9);
    }

    /// Exhaustive 2x2 grid at step 1e-3, written independently of the solver.
    fn grid_oracle(k: &FsbcKernel) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (a, b) = (i as f64 / 1000.0, j as f64 / 1000.0);
                let pt = [a, 1.0 - a, b, 1.0 - b];
                let mut worst: f64 = 0.0;
                for x in 0..2 {
                    for z in 0..2 {
                        let lhs = k.z_leg().prob(0, x, z, 0);
                        let rhs: f64 = (0..2)
                            .map(|y| k.y_leg().prob(0, x, y, 0) * pt[y * 2 + z])
                            .sum();
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
                best = best.min(worst);
            }
        }
        best
    }

    #[test]
    fn reversed_channel_is_infeasible() {
        let k = single_leg(0.15, 0.10);
        let oracle = grid_oracle(&k);
        assert!(oracle > 1e-3, "{oracle}");
        let r = find_degrading_kernel(&k, &DegradingSearch::default()).unwrap();
        assert_eq!(r.verdict, StochasticVerdict::Infeasible);
        assert!(r.residual > 1e-3);
        // The solver's max-norm optimum cannot be worse than the coarse grid.
        assert!(r.residual <= oracle + 1e-12, "{} vs {oracle}", r.residual);
    }

    #[test]
    fn compose_then_recover_round_trip() {
        let leg = StateLeg::new(
            2,
            3,
            2,
            vec![
                0.5, 0.1, 0.1, 0.1, 0.1, 0.1, //
                0.05, 0.05, 0.3, 0.3, 0.1, 0.2, //
                0.2, 0.2, 0.1, 0.1, 0.3, 0.1, //
                0.0, 0.4, 0.1, 0.2, 0.2, 0.1,
            ],
        )
        .unwrap();
        let dk = DegradingKernel::new(3, 2, vec![0.9, 0.1, 0.3, 0.7, 0.5, 0.5]).unwrap();
        let k = compose_degraded(&leg, &dk).unwrap();
        let r = find_degrading_kernel(&k, &DegradingSearch::default()).unwrap();
        assert_eq!(r.verdict, StochasticVerdict::Feasible);
        assert!(r.residual < 1e-9);
        assert!(r.kernel.max_abs_diff(&dk) < 1e-6, "{:?}", r.kernel);
    }

    #[test]
    fn block_identity() {
        let k = worked_example();
        let good = DegradingKernel::bsc(0.0625).unwrap();
        let limits = Limits::default();
        for n in 1..=3 {
            for s0 in 0..2 {
                assert!(verify_block_degrading(&k, &good, n, s0, &limits).unwrap() < 1e-10);
            }
        }
        let bad = DegradingKernel::bsc(0.2).unwrap();
        assert!(verify_block_degrading(&k, &bad, 2, 0, &limits).unwrap() > 1e-2);
        let z_is_y = single_leg(0.2, 0.2);
        // Z = Y in distribution per symbol, but the legs are separate noises:
        // the Z marginal still equals the Y marginal.
        let dev =
            verify_block_degrading(&z_is_y, &DegradingKernel::identity(2), 2, 0, &limits).unwrap();
        assert_eq!(dev, 0.0);
    }
}
