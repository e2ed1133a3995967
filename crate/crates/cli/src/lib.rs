//! Configuration, orchestration and artifact output for the `cma` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{parse_config, parse_config_text, Command, ConfigError, Overrides, RunConfig};
pub use run::{run, RunOutcome, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER};
