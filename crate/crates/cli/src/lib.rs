//! Command-line front end: configuration files, snapshots and run orchestration.

pub mod config;
pub mod run;
pub mod snapshot;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Outcome, SUBCOMMANDS};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotError};
