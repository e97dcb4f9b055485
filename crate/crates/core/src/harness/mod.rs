//! Configs, seeded experiments, `(d, T)` sweeps, CSV persistence and
//! reports.

pub mod config;
pub mod experiment;
pub mod report;
pub mod sweep;
pub mod verify;

pub use config::{load_config, load_config_file, ExperimentConfig};
pub use experiment::{
    read_summary_csv, run_experiment, run_seeds, SummaryRow, SUMMARY_COLUMNS, TRACE_COLUMNS,
};
pub use report::report;
pub use sweep::{sweep, sweep_in_memory, sweep_synthetic, SweepMetric, SweepSpec};
pub use verify::verify_suite;
