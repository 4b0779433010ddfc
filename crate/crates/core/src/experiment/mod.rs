//! Experiments: scenario files, trajectory output and the commands behind
//! the `neurotherm` binary.
//!
//! Every command writes its artifacts into an output directory: CSV files
//! are authoritative, SVG plots are drawn from the same data and `*.txt`
//! files hold `key = value` summaries.

mod commands;
mod config;
pub mod svg;
mod trajectory;

pub use commands::{
    calibrate_ntc, compare_models, fit, load_params, load_scenario, load_solver, ramp, run_averaged, run_model,
    simulate, sweep_u, write_averaged_csv, AveragedRow, Comparison, ExperimentError, ModelRun, RampOutcome, RunContext,
    SweepSpec,
};
pub use config::{load_toml, ConfigError, FeedforwardGain, ModelKind, Scenario};
pub use trajectory::{
    grid_indices, read_trajectory_csv, trajectory_rows, write_trajectory_csv, RunReport, TrajectoryRow, RATE_WINDOW,
    TRAJECTORY_COLUMNS,
};
