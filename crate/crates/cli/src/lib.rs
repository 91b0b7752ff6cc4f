//! Library surface of the `lapwise` command-line tool: artifact schemas
//! and the subcommand implementations, kept out of `main` so integration
//! tests can drive them directly.

pub mod commands;
pub mod files;
