//! File formats, timing and the `mvncd` command-line tool around
//! [`mvncd_core`].

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod report;
pub mod sweep;

pub use error::{CliError, Result};
