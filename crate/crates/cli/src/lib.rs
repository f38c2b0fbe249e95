//! Experiment harness for `procure-learn`: JSON configs, seeded parallel
//! trials, CSV artifacts and the Monte-Carlo verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod harness;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "PROCURE_LEARN_SEED";

/// Applies seed overrides: an explicit flag wins over the environment, which
/// wins over the config file.
pub fn resolve_seed(config: &mut ExperimentConfig, flag: Option<u64>, env: Option<&str>) -> Result<()> {
    if let Some(seed) = flag {
        config.seed = seed;
    } else if let Some(text) = env {
        config.seed = text
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("{SEED_ENV}={text:?} is not a 64-bit unsigned integer")))?;
    }
    Ok(())
}
