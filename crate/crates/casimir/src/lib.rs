//! File formats, materials registry and command-line driver around
//! [`casimir_core`].

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod registry;

pub use cli::{run, Cli};
pub use error::{CliError, Result};
