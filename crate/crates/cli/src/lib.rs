//! Library side of the `mongeamp` command: configuration and expression
//! parsing, subcommand runners and CSV writers.

pub mod config;
pub mod expr;
pub mod run;
