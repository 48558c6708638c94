//! Experiment harness for `metastable-core`: sigma sweeps, hitting-time
//! studies and assumption audits, written as CSV or JSON, plus SVG plots of
//! the results.
//!
//! ```no_run
//! use metastable_cli::{run, Experiment, ExperimentConfig};
//!
//! let config = ExperimentConfig {
//!     experiment: Experiment::GapSweep,
//!     sigmas: vec![0.4, 0.3],
//!     ..ExperimentConfig::default()
//! };
//! let outcome = run(&config).unwrap();
//! print!("{}", outcome.summary());
//! ```

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;

pub use config::{parse_sigmas, Experiment, ExperimentConfig, Format, Overrides, Tolerances};
pub use error::{CliError, Result};
pub use experiments::{
    analyse_grid, bracket, exit_code, grid_for, run, run_with_workers, Outcome, RunReport,
};
pub use output::{read_rows, ResultRow, CSV_COLUMNS, CSV_SCHEMA_VERSION};
pub use plot::{emit_plot, PlotKind};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "METASTABLE_WORKERS";

/// Exit code for configuration and IO errors.
pub const EXIT_CONFIG: i32 = 2;
