//! `nlwr`: run experiment configs and describe the schema.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nonlocal_lwr_cli::catalog::{catalog, render_text};
use nonlocal_lwr_cli::runner::{run_config_path, RunOptions};

#[derive(Parser)]
#[command(
    name = "nlwr",
    version,
    about = "Finite-volume experiments for a traffic model with look-ahead averaging",
    after_help = "Exit codes: 0 verdict passed, 2 verdict failed, 1 error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its artifacts.
    Run {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the artifact directory name.
        #[arg(long)]
        label: Option<String>,
        /// Worker threads for the scale sweep.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
    /// Describe the experiment kinds and the config schema.
    List {
        /// Emit the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    match Cli::parse().command {
        Command::Run { config, label, jobs, quiet } => {
            let opts = RunOptions { label, jobs, quiet };
            match run_config_path(&config, &opts) {
                Ok(summary) => {
                    println!(
                        "{}: {}",
                        if summary.passed { "PASS" } else { "FAIL" },
                        summary.headline
                    );
                    println!("artifacts: {}", summary.dir.display());
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    let mut source = std::error::Error::source(&e);
                    while let Some(s) = source {
                        eprintln!("  caused by: {s}");
                        source = s.source();
                    }
                    ExitCode::from(1)
                }
            }
        }
        Command::List { json } => {
            let c = catalog();
            if json {
                match serde_json::to_string_pretty(&c) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                print!("{}", render_text(&c));
            }
            ExitCode::SUCCESS
        }
    }
}
