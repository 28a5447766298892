//! Command-line tools and the real-time server around `prosim_core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod fatigue_fit;
pub mod io;
pub mod protocol;
pub mod server;
pub mod svg;

pub use cli::{run, Cli};
pub use error::{exit, CliError, CliResult};
