//! Experiment configuration and the command-line subcommands.

mod cli;
mod commands;
mod config;

use thiserror::Error;

pub use cli::run_cli;
pub use commands::{
    build_env, cmd_compare, cmd_evaluate, cmd_oracle, cmd_sweep, cmd_train, compare_policy, prepare_run, CompareEpisode,
    CompareReport, CompareStep, DpRecord, EvaluationSummary, HourRow, OracleSummary, TrainSummary,
};
pub use config::{EnvSection, ExperimentConfig, InitialKind, InitialSetting, Overrides, RunSection, TrafficSection};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Runtime(_) => 3,
        }
    }
}
