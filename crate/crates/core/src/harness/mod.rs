//! Scenario files, strategy comparison and CSV artifacts.

mod compare;
mod config;
mod plot;

pub use compare::{prepare, report_row, run_compare, run_with, step_rows, write_csv, ComparisonReport, ReportRow, StepRow};
pub use config::{
    load_config, InitialSection, ReferenceSection, RobotSection, SamplingSection, ScenarioConfig, DEFAULT_SEED,
};
pub use plot::emit_plot_data;

use thiserror::Error;

use crate::controller::ControlError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("build: {0}")]
    Build(ControlError),
    #[error("run: {0}")]
    Run(ControlError),
    #[error("output: {0}")]
    Output(String),
}

impl HarnessError {
    /// Process exit status: 1 config, 2 build, 3 run and output.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Build(_) => 2,
            HarnessError::Run(_) | HarnessError::Output(_) => 3,
        }
    }
}
