//! Configuration, initial data, output files and the experiment driver.

pub mod config;
pub mod experiment;
pub mod initial;
pub mod output;

pub use config::{load_config, parse_config, InitialCondition, SimConfig, SnapshotFormat};
pub use experiment::{run_experiment, RunSummary};
pub use initial::build_initial;
pub use output::{read_snapshot, Snapshot};
