//! Batch experiment runner behind the `aoi-lab` binary.
//!
//! An experiment is a TOML file plus a mode. [`run`] evaluates every grid
//! point and returns the rows; [`table::write_csv`] renders them.

pub mod config;
pub mod runner;
pub mod table;

use std::fmt;

pub use config::{ExperimentSpec, Mode, Overrides, SweepParam};
pub use runner::{run, Report, RunOptions};
pub use table::Row;

/// Problem with the experiment file or its values. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            field: None,
            message: message.into(),
        }
    }

    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    /// Prefixes the field path with `section`.
    pub fn within(mut self, section: &str) -> Self {
        self.field = Some(match self.field {
            Some(f) if f.contains('.') => f,
            Some(f) => format!("{section}.{f}"),
            None => section.to_string(),
        });
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "config error in `{field}`: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}
