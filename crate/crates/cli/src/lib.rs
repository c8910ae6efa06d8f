//! Experiment runner for the frequency-hopping game.

pub mod commands;
pub mod config;
pub mod figures;
pub mod table;

pub use config::{ConfigError, Experiment, ExperimentConfig, PolicyChoice};
pub use table::CsvDoc;

/// Exit status for a failed command: 2 for configuration problems,
/// 3 for numerical failures, 1 for anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<hopgame::Error>() {
        Some(e) if e.is_config() => 2,
        Some(_) => 3,
        None => 1,
    }
}
