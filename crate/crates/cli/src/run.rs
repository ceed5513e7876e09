use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pathdep::experiments::{
    remainder_diagnostics, run_forward, run_grid_rate, run_reverse, ExperimentConfig, ExperimentKind,
};
use pathdep::Executor;
use serde::{Deserialize, Serialize};

use crate::{config_hash, config_to_toml, parse_config, resolve_seed, CliError};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub pathdep_version: String,
    pub cli_version: String,
    pub wall_time_secs: f64,
    /// Relative to the output directory.
    pub files: Vec<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

/// Runs every configured experiment and writes one CSV per experiment, the
/// resolved config and a manifest into `out`.
pub fn cmd_run(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let mut config = parse_config(&text)?;
    let hash = config_hash(&config)?;
    config.seed = resolve_seed(seed, config.seed)?;
    let exec = Executor::from_workers(workers);

    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut emit = |name: String, write: &dyn Fn(BufWriter<File>) -> pathdep::Result<()>| {
        let path: PathBuf = out.join(&name);
        write(create(&path)?)?;
        files.push(name);
        Ok::<_, CliError>(())
    };

    for kind in dedup(&config.experiments) {
        let name = format!("{}.csv", kind.name());
        match kind {
            ExperimentKind::Forward => {
                let t = run_forward(&config, &exec)?;
                emit(name, &|w| t.write_csv(w))?;
            }
            ExperimentKind::Reverse => {
                let t = run_reverse(&config, &exec)?;
                emit(name, &|w| t.write_csv(w))?;
            }
            ExperimentKind::GridRate => {
                let t = run_grid_rate(&config, &exec)?;
                emit(name, &|w| t.write_csv(w))?;
            }
            ExperimentKind::Remainder => {
                let t = remainder_diagnostics(&config, &exec)?;
                emit(name, &|w| t.write_csv(w))?;
                if let Ok(s) = t.slopes() {
                    println!("remainder log-log slopes vs mesh: {:.3} {:.3} {:.3}", s[0], s[1], s[2]);
                }
            }
        }
    }

    fs::write(out.join("config.toml"), config_to_toml(&config)?)?;
    files.push("config.toml".into());

    let manifest = RunManifest {
        config_hash: hash,
        seed: config.seed,
        workers: exec.workers(),
        pathdep_version: pathdep::VERSION.into(),
        cli_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        files,
    };
    let body = toml::to_string(&manifest).map_err(|e| CliError::Failure(e.to_string()))?;
    fs::write(out.join(MANIFEST), body)?;
    Ok(manifest)
}

fn dedup(kinds: &[ExperimentKind]) -> Vec<ExperimentKind> {
    let mut out: Vec<ExperimentKind> = Vec::new();
    for k in kinds {
        if !out.contains(k) {
            out.push(*k);
        }
    }
    out
}

/// Loads a config file without running it.
pub fn load(config_path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    parse_config(&text)
}
