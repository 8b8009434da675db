//! Batch front end for `dobkit`: config parsing, CSV output and the
//! `analyze`, `sweep`, `simulate` and `bode` commands.

pub mod commands;
pub mod config;
pub mod csv;

pub use commands::Verdict;
pub use config::{ConfigError, ConfigFile};
pub use csv::CsvTable;
