//! Configuration, run orchestration, parameter scans and export for the
//! `fewboson` simulator.

pub mod analyze;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod scan;
pub mod simulate;

pub use config::{load_config, RunConfig};
pub use error::CliError;
pub use output::OUT_DIR_ENV;
pub use presets::preset;
pub use simulate::{simulate, RunOutput};
