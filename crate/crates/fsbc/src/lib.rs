//! Command-line front end for `fsbc-core`: channel spec files, subcommand
//! drivers and their CSV / JSON outputs.

pub mod cli;
pub mod commands;
pub mod error;
pub mod spec_io;

use cli::{Cli, Command};
use error::CliError;

/// Runs one parsed invocation. `--threads` sizes the global rayon pool.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let threads = match &cli.command {
        Command::Analyze(a) => a.common.threads,
        Command::Region(a) => a.common.threads,
        Command::Simulate(a) => a.common.threads,
        Command::Supadd(a) => a.common.threads,
        Command::Validate(_) => None,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // A pool that already exists (repeated calls in one process) is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match &cli.command {
        Command::Analyze(a) => commands::cmd_analyze(a),
        Command::Region(a) => commands::cmd_region(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Supadd(a) => commands::cmd_supadd(a),
        Command::Validate(a) => commands::cmd_validate(a),
    }
}
