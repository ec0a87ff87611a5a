//! Command-line front-end for the grey-box thermal-model toolkit.
//!
//! The binary wires a single TOML configuration to the core pipeline:
//! `generate` materializes weather and truth traces, `estimate` fits
//! reduced-order parameter sets, `forward-sim` rolls one fit over a test
//! window, `evaluate` runs the full robustness matrix, and `report`
//! renders the marginal-accuracy tables.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod fitio;
pub mod manifest;

pub use config::RunConfig;
pub use error::{CliError, CliResult, Completion};
