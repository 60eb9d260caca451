//! Experiment runner around `ntdpc-core`: configuration files, parallel
//! Monte Carlo and sensitivity sweeps, timing, CSV and SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;
pub mod table;

pub use config::Config;
pub use error::{LabError, Result};
