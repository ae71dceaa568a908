//! Configuration-driven experiment runner over the `nonlocal-lwr` library.
//!
//! A JSON file picks one of five experiment kinds (variation monotonicity,
//! its engineered break, a convergence-rate study, an entropy-dissipation
//! check, or a plain run), a scenario, a kernel, a speed law, and a sweep of
//! look-ahead scales; [`runner::run_config_path`] executes it and leaves a
//! self-describing artifact directory behind. The `nlwr` binary is a thin
//! wrapper mapping verdicts to exit codes: 0 pass, 2 verdict failure,
//! 1 error (a malformed config produces no artifacts at all).

pub mod catalog;
pub mod config;
pub mod error;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind, ScenarioSpec};
pub use error::{CliError, Result};
pub use runner::{run_config, run_config_path, RunOptions, RunSummary};
