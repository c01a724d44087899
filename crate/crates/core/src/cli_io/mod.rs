//! Configuration, experiment orchestration and result files.

pub mod bundle;
pub mod config;
pub mod experiment;

pub use bundle::{emit_bundle, read_manifest, Manifest, ResultBundle, RunInfo, Table};
pub use config::{
    config_to_toml, parse_config, parse_config_str, parse_override, ConfigError, Override,
    RunConfig,
};
pub use experiment::{run_experiment, Experiment, RunError};

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad configuration, arguments or output location.
pub const EXIT_VALIDATION: i32 = 2;
/// The numerics failed (extinction, no convergence, non-finite values).
pub const EXIT_NUMERICAL: i32 = 3;
