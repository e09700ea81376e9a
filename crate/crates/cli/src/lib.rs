//! Command-line front end: argument types, command implementations and
//! report rendering. Exit codes: 0 pass, 1 failed verdict, 2 error.

pub mod args;
pub mod commands;
pub mod report;

use std::process::ExitCode;

pub use args::{Cli, Command};
pub use commands::{run, Verdict};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

pub fn exit_code(result: &anyhow::Result<Verdict>) -> ExitCode {
    ExitCode::from(match result {
        Ok(Verdict::Pass) => EXIT_PASS,
        Ok(Verdict::Fail) => EXIT_FAIL,
        Err(_) => EXIT_ERROR,
    })
}
