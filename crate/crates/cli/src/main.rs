// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! `sim`: run, validate and list readout experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jba_readout::io::{dispatch, init_threads, load_config, Experiment};

/// Worker-pool size. Never changes results.
const THREADS_ENV: &str = "SIM_THREADS";

#[derive(Parser)]
#[command(name = "sim", version, about = "Transmon readout with a bifurcation amplifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// List the experiment kinds.
    ListExperiments,
}

fn threads_from_env() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    init_threads(n).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for kind in Experiment::KINDS {
                println!("{kind:<16} {}", Experiment::describe(kind));
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}: ok ({}, seed {})", config.display(), cfg.experiment.kind(), cfg.seed);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                ExitCode::from(1)
            }
        },
        Command::Run { config, seed, out } => {
            if let Err(e) = threads_from_env() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            let mut cfg = match load_config(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            match dispatch(&cfg) {
                Ok(done) => {
                    print!("{}", done.summary);
                    println!("wrote {} files to {}", done.files.len(), cfg.output_dir.display());
                    match done.exit_code() {
                        0 => ExitCode::SUCCESS,
                        code => ExitCode::from(code as u8),
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
