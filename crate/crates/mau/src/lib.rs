//! File formats and command-line front end for `mau-core`.

pub mod commands;
pub mod error;
pub mod format;
pub mod scope_expr;

pub use commands::{run, Outcome};
pub use error::CliError;
