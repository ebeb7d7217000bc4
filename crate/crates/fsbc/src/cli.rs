use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

pub const DEFAULT_LAMBDAS: usize = 21;
pub const DEFAULT_STARTS: usize = 32;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_N_MAX_INDEC: usize = 12;
pub const DEFAULT_N_MAX_PHYSICAL: usize = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fsbc",
    version,
    about = "Degraded finite-state broadcast channel laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degradedness and indecomposability checks.
    Analyze(AnalyzeArgs),
    /// Support function F_n(lambda) and the rate-region boundary.
    Region(RegionArgs),
    /// Superposition-coding Monte Carlo at a requested rate pair.
    Simulate(SimulateArgs),
    /// Sup-additivity of n F_n and the alphabet bound.
    Supadd(SupaddArgs),
    /// Parse and validate a channel spec.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Channel spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "fsbc-out")]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Multistart count for the F_n optimizer.
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    pub starts: usize,
    /// Auxiliary cardinality (default: min(|X|,|Y|,|Z|)^n).
    #[arg(long = "u-card")]
    pub u_card: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Blocklength for the physical-degradedness and block-identity checks.
    #[arg(long = "n-max", default_value_t = DEFAULT_N_MAX_PHYSICAL)]
    pub n_max: usize,
    /// Horizon of the indecomposability test.
    #[arg(long = "N-max", default_value_t = DEFAULT_N_MAX_INDEC)]
    pub big_n_max: usize,
    /// Target deviation for the indecomposability test.
    #[arg(long = "eps-target", default_value_t = 0.05)]
    pub eps_target: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Blocklength n.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Grid size, or an explicit comma-separated list of lambdas.
    #[arg(long, default_value_t = DEFAULT_LAMBDAS.to_string())]
    pub lambdas: String,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Super-symbol blocklength n.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Lambda grid used to pick the input law.
    #[arg(long, default_value_t = DEFAULT_LAMBDAS.to_string())]
    pub lambdas: String,
    /// Strong-receiver rate R1 in bits per symbol.
    #[arg(long)]
    pub r1: f64,
    /// Weak-receiver rate R2 in bits per symbol.
    #[arg(long)]
    pub r2: f64,
    /// Outer lengths K, comma separated.
    #[arg(long = "K", default_value = "1,2,3,4")]
    pub k: String,
    /// Trials per initial state.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SupaddArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Largest blocklength; all partitions n = l + m up to it are checked.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Grid size, or an explicit comma-separated list of lambdas.
    #[arg(long, default_value = "0,0.5,1")]
    pub lambdas: String,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Channel spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Write the normalized spec here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A count of equally spaced points, or an explicit list when the text
/// holds a `.` or a `,`.
pub fn parse_lambdas(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    let grid = if text.contains('.') || text.contains(',') {
        let values = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("--lambdas: `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(CliError::Usage(
                "--lambdas: values must lie in [0, 1]".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage(
                "--lambdas: values must be strictly ascending".into(),
            ));
        }
        values
    } else {
        let count: usize = text
            .parse()
            .map_err(|e| CliError::Usage(format!("--lambdas: `{text}`: {e}")))?;
        fsbc_core::region::uniform_lambda_grid(count)
    };
    if grid.is_empty() {
        return Err(CliError::Usage("--lambdas: empty grid".into()));
    }
    Ok(grid)
}

pub fn parse_k_list(text: &str) -> Result<Vec<usize>, CliError> {
    let ks = text
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(CliError::Usage(format!(
                "--K: `{t}` is not a positive integer"
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_forms() {
        assert_eq!(parse_lambdas("3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_lambdas("1").unwrap(), vec![0.5]);
        assert_eq!(parse_lambdas("0.25").unwrap(), vec![0.25]);
        assert_eq!(parse_lambdas("0,1").unwrap(), vec![0.0, 1.0]);
        assert!(parse_lambdas("0").is_err());
        assert!(parse_lambdas("0.5,0.2").is_err());
        assert!(parse_lambdas("1.5").is_err());
        assert!(parse_lambdas("abc").is_err());
    }

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("1, 2,4").unwrap(), vec![1, 2, 4]);
        assert!(parse_k_list("0").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
