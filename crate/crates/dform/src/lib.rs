//! File formats, random instance generation, self-tests and the `dform`
//! command-line tool built on [`dform_core`].

pub mod cli;
pub mod commands;
mod error;
pub mod generate;
pub mod instance;
pub mod selftest;

pub use error::{CliError, Context, ExitStatus, Result};
pub use generate::{generate, GenerateParams, Kind};
pub use instance::{Expected, Instance, Real, FORMAT_VERSION};
