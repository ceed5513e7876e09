//! Config-driven runner behind the `pathdep` binary.

pub mod check;
pub mod run;

use std::fmt;
use std::process::ExitCode;

use pathdep::experiments::ExperimentConfig;
use pathdep::Error;

/// Environment fallback for `--seed`.
pub const SEED_ENV: &str = "PATHDEP_SEED";

#[derive(Debug)]
pub enum CliError {
    /// Unparsable or invalid configuration: exit 2.
    Config(String),
    /// A solver left its growth envelope or stopped converging: exit 3.
    Divergence(String),
    /// I/O failures and failed checks: exit 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Divergence(m) => write!(f, "solver divergence: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::Sample { source, .. } = root {
            root = source;
        }
        match root {
            Error::Divergence { .. } | Error::NonFinite(_) | Error::NotConverged { .. } => {
                CliError::Divergence(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

/// Parses and validates a TOML config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn config_to_toml(config: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string(config).map_err(|e| CliError::Failure(e.to_string()))
}

/// SHA-256 of the canonical serialization, so formatting and comments do not
/// change it.
pub fn config_hash(config: &ExperimentConfig) -> Result<String, CliError> {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(config_to_toml(config)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// `--seed`, then `PATHDEP_SEED`, then `default`.
pub fn resolve_seed(flag: Option<u64>, default: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not a u64"))),
        Err(_) => Ok(default),
    }
}
