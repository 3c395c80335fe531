//! Library side of the `conecalc` binary: the document format, subcommand
//! bodies and the exit-code mapping.

pub mod commands;
pub mod document;
pub mod error;

pub use error::{CliError, Result};
