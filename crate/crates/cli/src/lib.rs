//! Configuration, execution and reporting behind the `stiefel` binary.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{
    enumerate_critical, gradcheck, gradcheck_model, reproduce_reference_tables, run_experiment,
    CliError, GradcheckReport, ReferenceTables,
};
pub use config::{parse_config, ExperimentConfig, Overrides};
pub use report::RunReport;
