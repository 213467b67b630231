//! Verification harness for operational quantum reference frames.

pub mod config;
pub mod emit;
pub mod error;
pub mod inputs;
pub mod suite;

pub use config::SuiteConfig;
pub use emit::{emit, render, Emit, Format, VerifyReport};
pub use error::{CliError, Result};
pub use inputs::{parse_inputs, Input};
pub use suite::{run_suite, CheckRecord, SuiteName, SuiteReport};

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const CHECK_FAILURE: u8 = 1;
    pub const CONFIG_ERROR: u8 = 2;
}
