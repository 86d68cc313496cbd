//! Command implementations behind the `caputo-picard` binary.
//!
//! Each command writes its report to a caller-supplied writer and returns an
//! exit code, so the binary and the tests share one code path.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_check, run_depend, run_family, run_mlf, run_selftest, run_solve, CliError, ExitCode};
