//! Files and command line for `hkd-core`: TOML run configurations,
//! trajectory CSV, SVG plots and the `hkd` binary.

pub mod cli;
pub mod config;
mod error;
pub mod svg;
pub mod trajectory_csv;

pub use error::{Error, Result};
