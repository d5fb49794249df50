//! Library side of the `flrw-dirac` command-line tool: configuration schemas
//! and subcommand implementations.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult, ExitKind};

/// Environment variable capping the rayon thread count.
pub const THREADS_ENV: &str = "FLRW_DIRAC_THREADS";

/// Configures the global rayon pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::validation(anyhow::anyhow!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::runtime)
}
