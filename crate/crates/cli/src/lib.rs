//! Command-line front end for `trs-core`: scenario files, curve/TRS tables
//! and Monte-Carlo validation reports.

pub mod cli;
pub mod output;
pub mod scenario;

pub use cli::{run, Cli, CliError, Outcome};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
