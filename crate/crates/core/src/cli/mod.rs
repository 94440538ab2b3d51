//! Command-line front end: `run --config <path>` and `check`.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{parse_config, parse_config_file, ConfigError, ExperimentKind, ExperimentParams, RunConfig};
pub use run::{execute, run, EXIT_ASSERTION, EXIT_ERROR, EXIT_PASS};

#[derive(Debug, Parser)]
#[command(name = "evolparam", version, about = "Spectral σ-evolution experiments and invariant checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the invariant suite.
    Check {
        /// Smaller grids and fewer random samples.
        #[arg(long)]
        quick: bool,
    },
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> u8 {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = match parse_config_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_ERROR;
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.out = out;
            }
            let dir = cfg.output_dir();
            run(&cfg, &dir)
        }
        Command::Check { quick } => match crate::checks::run_checks(quick, 0) {
            Ok(rep) => {
                run::print_assertions(&rep);
                if rep.passed() {
                    EXIT_PASS
                } else {
                    EXIT_ASSERTION
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
    }
}
