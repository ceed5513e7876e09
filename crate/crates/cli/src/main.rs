use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pathdep::Executor;
use pathdep_cli::check::{run_suite, Suite};
use pathdep_cli::run::cmd_run;
use pathdep_cli::{resolve_seed, CliError};

#[derive(Parser)]
#[command(name = "pathdep", version, about = "Convergence experiments for path-dependent SDE approximations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments named in a TOML config.
    Run {
        config: PathBuf,
        /// Output directory for CSVs and the manifest.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the config seed; falls back to PATHDEP_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 1 runs sequentially.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run an invariant suite and print one PASS/FAIL line per check.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, out, seed, workers } => {
            let m = cmd_run(&config, &out, seed, workers)?;
            println!(
                "wrote {} files to {} (seed {}, {} workers, {:.2}s)",
                m.files.len(),
                out.display(),
                m.seed,
                m.workers,
                m.wall_time_secs
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { suite, seed, workers } => {
            let seed = resolve_seed(seed, 0)?;
            let outcomes = run_suite(suite, seed, &Executor::from_workers(workers))?;
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().all(|o| o.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}
