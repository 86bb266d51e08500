//! Verification suites and conjecture scans over families of weights, and
//! the plumbing behind the `steklov` binary.

pub mod config;
pub mod record;
pub mod scan;
pub mod verify;

use std::path::Path;

pub use config::{ExperimentConfig, Family};
pub use record::{Check, ResultRecord, Status};
pub use scan::{replay_bundle, run_scan, write_bundle, Bundle, ScanRow};
pub use verify::{run_verify, verify_weight};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "STEKLOV_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Numeric(#[from] steklov_core::Error),
}

impl HarnessError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`], or on the global pool.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match std::env::var(WORKERS_ENV).ok() {
        None => Ok(f()),
        Some(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("{WORKERS_ENV}={v} is not a count")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}
