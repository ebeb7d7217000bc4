//! Subcommand drivers. Every output embeds the run configuration and the
//! tool version; timings go to stdout only so files stay byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use fsbc_core::coding::{message_set_size, MESSAGE_CAP};
use fsbc_core::degraded::{DegradingSearch, IndecomposabilityConfig, StochasticVerdict};
use fsbc_core::math::derive_seed;
use fsbc_core::region::{compare_intersection, IntersectionReport, RegionSolver, SupportFunction};
use fsbc_core::{
    block_law, build_codebook, check_indecomposable, check_physical_degraded, estimate_error,
    exact_error, fano_diagnostic, find_degrading_kernel, verify_block_degrading,
    Error as CoreError, FsbcKernel, Limits, OptimizerConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{
    parse_k_list, parse_lambdas, AnalyzeArgs, Common, OptimizerArgs, RegionArgs, SimulateArgs,
    SupaddArgs, ValidateArgs, DEFAULT_LAMBDAS, DEFAULT_N_MAX_INDEC, DEFAULT_N_MAX_PHYSICAL,
    DEFAULT_STARTS, DEFAULT_TRIALS,
};
use crate::error::CliError;
use crate::spec_io::ChannelSpec;

pub const TOOL: &str = "fsbc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const CODEBOOK_STREAM: u64 = 1;
const TRIAL_STREAM: u64 = 2;

/// Tolerance of the physical-degradedness conditions.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Settings recorded in every output file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub spec: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_card: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(rename = "N_max", skip_serializing_if = "Option::is_none")]
    pub big_n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_target: Option<f64>,
    pub limits: Limits,
}

impl RunConfig {
    fn new(command: &str, common: &Common) -> Self {
        RunConfig {
            command: command.to_string(),
            spec: common.spec.display().to_string(),
            seed: common.seed,
            limits: Limits::default(),
            ..RunConfig::default()
        }
    }
}

fn print_defaults() {
    println!(
        "defaults: lambdas={DEFAULT_LAMBDAS} starts={DEFAULT_STARTS} trials={DEFAULT_TRIALS} \
         N_max={DEFAULT_N_MAX_INDEC} n_max={DEFAULT_N_MAX_PHYSICAL} seed=0"
    );
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write_file(dir, name, &text)
}

fn envelope(config: &RunConfig, kernel: &FsbcKernel) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("tool".into(), json!(TOOL));
    map.insert("version".into(), json!(VERSION));
    map.insert("config".into(), json!(config));
    map.insert(
        "channel".into(),
        json!({ "label": kernel.label(), "dims": kernel.dims() }),
    );
    map
}

fn load(common: &Common) -> Result<FsbcKernel, CliError> {
    ChannelSpec::read(&common.spec)?.build(&Limits::default())
}

fn optimizer_config(args: &OptimizerArgs, seed: u64) -> Result<OptimizerConfig, CliError> {
    if args.starts == 0 {
        return Err(CliError::Usage("--starts must be positive".into()));
    }
    Ok(OptimizerConfig {
        starts: args.starts,
        seed,
        u_card: args.u_card,
        ..OptimizerConfig::default()
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    print_defaults();
    let start = Instant::now();
    let kernel = load(&args.common)?;
    let limits = Limits::default();
    let mut config = RunConfig::new("analyze", &args.common);
    config.n_max = Some(args.n_max);
    config.big_n_max = Some(args.big_n_max);
    config.eps_target = Some(args.eps_target);

    let physical = check_physical_degraded(&kernel, args.n_max, PHYSICAL_TOL, &limits)?;
    let mut factorization = Vec::new();
    for n in 1..=physical.certified_through.max(1).min(args.n_max) {
        for s0 in 0..kernel.dims().s {
            match block_law(&kernel, n, s0, &limits) {
                Ok(law) => factorization.push(json!({
                    "n": n,
                    "s0": s0,
                    "deviation": fsbc_core::channel::factorization_deviation(&law),
                })),
                Err(CoreError::BudgetExceeded { .. }) => break,
                Err(e) => return Err(e.into()),
            }
        }
    }

    let search = DegradingSearch {
        seed: args.common.seed,
        ..DegradingSearch::default()
    };
    let (stochastic, stalled) = match find_degrading_kernel(&kernel, &search) {
        Ok(r) => (r, false),
        Err(CoreError::SolverStalled { best }) => (*best, true),
        Err(e) => return Err(e.into()),
    };
    let mut block_identity = Vec::new();
    if stochastic.verdict == StochasticVerdict::Feasible {
        'outer: for n in 1..=args.n_max {
            for s0 in 0..kernel.dims().s {
                match verify_block_degrading(&kernel, &stochastic.kernel, n, s0, &limits) {
                    Ok(dev) => block_identity.push(json!({ "n": n, "s0": s0, "deviation": dev })),
                    Err(CoreError::BudgetExceeded { .. }) => break 'outer,
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    let indec_config = IndecomposabilityConfig {
        eps_target: args.eps_target,
        n_max: args.big_n_max,
    };
    let indecomposability = match check_indecomposable(&kernel, &indec_config, &limits) {
        Ok(r) => Some(r),
        Err(e @ CoreError::BudgetExceeded { .. }) => {
            println!("warning: indecomposability check skipped ({e}); lower --N-max");
            None
        }
        Err(e) => return Err(e.into()),
    };

    let mut out = envelope(&config, &kernel);
    out.insert("physical".into(), json!(physical));
    out.insert("factorization".into(), json!(factorization));
    out.insert("stochastic".into(), json!(stochastic));
    out.insert("block_identity".into(), json!(block_identity));
    out.insert("indecomposability".into(), json!(indecomposability));
    out.insert("stochastic_solver_stalled".into(), json!(stalled));
    write_json(&args.common.out, "analysis.json", &Value::Object(out))?;

    println!(
        "physical degradedness: {:?} (worst violation {:.3e}, checked through n = {})",
        physical.verdict, physical.worst_violation, physical.certified_through
    );
    let rows = stochastic.kernel.rows();
    let shown = if rows.len() <= 4 {
        format!("{rows:?}")
    } else {
        "written to analysis.json".to_string()
    };
    println!(
        "stochastic degradedness: {:?} (residual {:.3e}), degrading kernel {shown}",
        stochastic.verdict, stochastic.residual
    );
    if let Some(r) = &indecomposability {
        println!(
            "indecomposability: {:?} (N = {:?}, d(1..) = {:?})",
            r.verdict, r.n_reached, r.deviation
        );
    }
    println!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    if stalled {
        return Err(CoreError::SolverStalled {
            best: Box::new(stochastic),
        }
        .into());
    }
    Ok(())
}

struct RegionRun {
    solver: RegionSolver,
    sf: SupportFunction,
    report: IntersectionReport,
}

fn run_region(
    kernel: &FsbcKernel,
    n: usize,
    lambdas: &[f64],
    opt: &OptimizerConfig,
) -> Result<RegionRun, CliError> {
    let solver = RegionSolver::new(kernel, n, opt)?;
    let sf = solver.sweep(lambdas, true)?;
    let report = compare_intersection(&sf, None)?;
    Ok(RegionRun { solver, sf, report })
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn region_csv(run: &RegionRun) -> String {
    let sf = &run.sf;
    let region = &run.report.min_max_region;
    let inter = &run.report.intersected;
    let mut s = String::from("n,lambda,F_n");
    for s0 in 0..sf.states {
        let _ = write!(s, ",F_n_s0_{s0}");
    }
    s.push_str(",R1,R2_boundary,R2_intersection\n");
    let rows = sf.lambdas.len().max(region.r1.len());
    for i in 0..rows {
        let _ = write!(s, "{}", sf.n);
        match sf.points.get(i) {
            Some(p) => {
                let _ = write!(s, ",{},{}", fmt_num(p.lambda), fmt_num(p.value));
                for r in &run.report.per_state {
                    let _ = write!(s, ",{}", fmt_num(r.lines.values[i]));
                }
            }
            None => s.push_str(&",".repeat(2 + sf.states)),
        }
        match region.r1.get(i) {
            Some(&r1) => {
                let r2_inter = if inter.empty {
                    0.0
                } else {
                    inter.lines.r2_at(r1)
                };
                let _ = write!(
                    s,
                    ",{},{},{}",
                    fmt_num(r1),
                    fmt_num(region.r2[i]),
                    fmt_num(r2_inter)
                );
            }
            None => s.push_str(",,,"),
        }
        s.push('\n');
    }
    s
}

fn boundary_dat(run: &RegionRun) -> String {
    let region = &run.report.min_max_region;
    let mut s = format!("# n = {}\n# R1 R2\n", run.sf.n);
    for (a, b) in region.r1.iter().zip(&region.r2) {
        let _ = writeln!(s, "{} {}", fmt_num(*a), fmt_num(*b));
    }
    s
}

pub fn cmd_region(args: &RegionArgs) -> Result<(), CliError> {
    print_defaults();
    let start = Instant::now();
    let lambdas = parse_lambdas(&args.lambdas)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    if lambdas.len() == 1 {
        println!("warning: a single lambda gives a single supporting line");
    }
    let kernel = load(&args.common)?;
    let opt = optimizer_config(&args.optimizer, args.common.seed)?;
    let run = run_region(&kernel, args.n, &lambdas, &opt)?;
    let mut config = RunConfig::new("region", &args.common);
    config.n = Some(args.n);
    config.lambdas = Some(lambdas.clone());
    config.optimizer = Some(opt);
    config.u_card = Some(run.solver.u_card());

    write_file(&args.common.out, "region.csv", &region_csv(&run))?;
    write_file(&args.common.out, "boundary.dat", &boundary_dat(&run))?;
    let mut warnings = Vec::new();
    if lambdas.len() == 1 {
        warnings.push("single supporting line".to_string());
    }
    if !run.sf.all_converged() {
        warnings.push(
            "optimizer hit its iteration cap at some lambda; best iterates reported".to_string(),
        );
    }
    if run.report.min_max_region.empty {
        warnings.push(
            "some F_n(lambda) < 0: the -log2|S|/n penalty leaves no positive rates at this n"
                .to_string(),
        );
    }
    let mut meta = envelope(&config, &kernel);
    meta.insert("u_card".into(), json!(run.solver.u_card()));
    meta.insert("support".into(), json!(run.sf));
    meta.insert(
        "intersection".into(),
        json!({
            "lambdas": run.report.lambdas,
            "min_inside_max": run.report.min_inside_max,
            "intersection": run.report.intersection,
            "gap": run.report.gap,
            "max_gap": run.report.max_gap,
            "spread_over_initial_states": run.report.spread,
            "max_spread": run.report.max_spread,
            "per_state_r1_max": run.report.per_state.iter().map(|r| r.r1_max).collect::<Vec<_>>(),
            "intersection_r1_max": run.report.intersected.r1_max,
        }),
    );
    meta.insert(
        "boundary".into(),
        json!({
            "empty": run.report.min_max_region.empty,
            "r1_max": run.report.min_max_region.r1_max,
            "concave": run.report.min_max_region.is_concave(1e-9),
            "nonincreasing": run.report.min_max_region.is_nonincreasing(1e-9),
        }),
    );
    meta.insert("warnings".into(), json!(warnings));
    write_json(&args.common.out, "region.meta.json", &Value::Object(meta))?;

    let v = run.sf.values();
    println!("F_{}(lambda = {}) = {:.6}", args.n, lambdas[0], v[0]);
    if lambdas.len() > 1 {
        println!(
            "F_{}(lambda = {}) = {:.6}",
            args.n,
            lambdas[lambdas.len() - 1],
            v[v.len() - 1]
        );
    }
    println!(
        "spread over initial states: max {:.6}; intersection vs min-inside-max gap: max {:.3e}",
        run.report.max_spread, run.report.max_gap
    );
    for w in &warnings {
        println!("warning: {w}");
    }
    println!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    print_defaults();
    let start = Instant::now();
    let ks = parse_k_list(&args.k)?;
    let lambdas = parse_lambdas(&args.lambdas)?;
    if args.n == 0 || args.trials == 0 {
        return Err(CliError::Usage("--n and --trials must be positive".into()));
    }
    if !(args.r1 >= 0.0 && args.r2 >= 0.0 && args.r1.is_finite() && args.r2.is_finite()) {
        return Err(CliError::Usage(
            "--r1 and --r2 must be finite and nonnegative".into(),
        ));
    }
    // Message-set caps are checked before any computation.
    for &k in &ks {
        let total = (k * args.n) as f64;
        for (name, r) in [("Rx1 (M1)", args.r1), ("Rx2 (M2)", args.r2)] {
            let size = message_set_size(total * r).map_err(|_| CoreError::RateTooHigh {
                receiver: name,
                size: u128::MAX,
                cap: MESSAGE_CAP,
            })?;
            if size > MESSAGE_CAP {
                return Err(CoreError::RateTooHigh {
                    receiver: name,
                    size: size as u128,
                    cap: MESSAGE_CAP,
                }
                .into());
            }
        }
    }
    let kernel = load(&args.common)?;
    let limits = Limits::default();
    let opt = optimizer_config(&args.optimizer, args.common.seed)?;
    let run = run_region(&kernel, args.n, &lambdas, &opt)?;

    let (chosen, margin) = run
        .sf
        .select_law(args.r1, args.r2)
        .expect("sweep grid is nonempty");
    let point = &run.sf.points[chosen];
    let law_r1 = point
        .rates
        .iter()
        .map(|r| r.r1)
        .fold(f64::INFINITY, f64::min);
    let law_r2 = point
        .rates
        .iter()
        .map(|r| r.r2)
        .fold(f64::INFINITY, f64::min);

    let mut config = RunConfig::new("simulate", &args.common);
    config.n = Some(args.n);
    config.lambdas = Some(lambdas.clone());
    config.optimizer = Some(opt);
    config.u_card = Some(run.solver.u_card());
    config.trials = Some(args.trials);
    config.k = Some(ks.clone());
    config.r1 = Some(args.r1);
    config.r2 = Some(args.r2);

    // One codebook seed for every K: codebooks are nested across K.
    let cb_seed = derive_seed(args.common.seed, &[CODEBOOK_STREAM]);
    let trial_seed = derive_seed(args.common.seed, &[TRIAL_STREAM]);
    let mut runs = Vec::new();
    let mut trend = Vec::new();
    for &k in &ks {
        let cb = build_codebook(&point.law, k, args.r1, args.r2, cb_seed)?;
        let stats = estimate_error(&cb, &kernel, args.trials, trial_seed)?;
        let mut exact = Vec::new();
        let mut fano = Vec::new();
        let mut skipped = None;
        for s0 in 0..kernel.dims().s {
            match (
                exact_error(&cb, &kernel, s0, &limits),
                fano_diagnostic(&cb, &kernel, s0, &limits),
            ) {
                (Ok(e), Ok(f)) => {
                    exact.push(json!(e));
                    fano.push(json!(f));
                }
                (Err(CoreError::BudgetExceeded { what, .. }), _)
                | (_, Err(CoreError::BudgetExceeded { what, .. })) => {
                    skipped = Some(format!(
                        "exact enumeration skipped: {what} exceeds the cell budget"
                    ));
                    exact.clear();
                    fano.clear();
                    break;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            }
        }
        let total = cb.len() as f64;
        println!(
            "K = {k}: |M1| = {}, |M2| = {}, P_e per s0 = {:?}, max = {:.4}",
            cb.m1(),
            cb.m2(),
            stats.per_state.iter().map(|s| s.p_e).collect::<Vec<_>>(),
            stats.p_e
        );
        trend.push(stats.p_e);
        runs.push(json!({
            "K": k,
            "block_len": cb.len(),
            "m1": cb.m1(),
            "m2": cb.m2(),
            "effective_r1": (cb.m1() as f64).log2() / total,
            "effective_r2": (cb.m2() as f64).log2() / total,
            "codebook_seed": cb_seed,
            "trial_seed": trial_seed,
            "errors": stats,
            "exact": if skipped.is_some() { Value::Null } else { json!(exact) },
            "fano": if skipped.is_some() { Value::Null } else { json!(fano) },
            "note": skipped,
        }));
    }
    let mut out = envelope(&config, &kernel);
    out.insert("construction".into(), json!(
        "standard superposition random coding: i.i.d. cloud centers from q(u), satellites from q(x|u); \
         exact maximum-likelihood decoders that know the initial state"
    ));
    out.insert(
        "input_law".into(),
        json!({
            "lambda": point.lambda,
            "law": point.law,
            "rates": point.rates,
            "min_r1": law_r1,
            "min_r2": law_r2,
            "margin": margin,
        }),
    );
    out.insert("requested_inside_law_rates".into(), json!(margin >= 0.0));
    out.insert(
        "boundary_r2_at_r1".into(),
        json!(if run.report.min_max_region.empty {
            Value::Null
        } else {
            json!(run.report.min_max_region.lines.r2_at(args.r1))
        }),
    );
    out.insert("runs".into(), json!(runs));
    out.insert("p_e_by_K".into(), json!(trend));
    write_json(&args.common.out, "simulation.json", &Value::Object(out))?;
    if margin < 0.0 {
        println!("note: requested rates exceed what the selected input law guarantees (margin {margin:.4})");
    }
    println!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn cmd_supadd(args: &SupaddArgs) -> Result<(), CliError> {
    print_defaults();
    let start = Instant::now();
    let lambdas = parse_lambdas(&args.lambdas)?;
    if args.n < 2 {
        return Err(CliError::Usage(
            "--n must be at least 2 (n = l + m with l, m >= 1)".into(),
        ));
    }
    let kernel = load(&args.common)?;
    let opt = optimizer_config(&args.optimizer, args.common.seed)?;
    let trend = fsbc_core::region::convergence_trend(&kernel, &lambdas, args.n, &opt)?;
    let mut config = RunConfig::new("supadd", &args.common);
    config.n = Some(args.n);
    config.lambdas = Some(lambdas.clone());
    config.optimizer = Some(opt);
    let mut out = envelope(&config, &kernel);
    out.insert("trend".into(), json!(trend));
    out.insert(
        "note".into(),
        json!(
            "each F_n is optimized over its own auxiliary of cardinality min(|X|,|Y|,|Z|)^n; \
         no limit in n is extrapolated"
        ),
    );
    write_json(&args.common.out, "supadd.json", &Value::Object(out))?;
    for (i, row) in trend.values.iter().enumerate() {
        println!("F_{}: {:?}", i + 1, row);
    }
    for c in &trend.checks {
        println!(
            "lambda = {}: {} F_{} - ({} F_{} + {} F_{}) = {:.3e} [{}], bound {} [{}]",
            c.lambda,
            c.n,
            c.n,
            c.l,
            c.l,
            c.m,
            c.m,
            c.excess,
            if c.holds { "ok" } else { "VIOLATED" },
            c.bound,
            if c.bound_holds { "ok" } else { "VIOLATED" }
        );
    }
    println!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let spec = ChannelSpec::read(&args.spec)?;
    let kernel = spec.build(&Limits::default())?;
    let d = kernel.dims();
    println!(
        "{}: valid kernel with |X| = {}, |Y| = {}, |Z| = {}, |S| = {}",
        kernel.label(),
        d.x,
        d.y,
        d.z,
        d.s
    );
    if let Some(out) = &args.out {
        let mut text = spec.to_json();
        text.push('\n');
        write_file(out, "spec.normalized.json", &text)?;
    }
    Ok(())
}
