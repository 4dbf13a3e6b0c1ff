//! Command-line front end: configuration loading, experiment dispatch, CSV
//! emission, SVG rendering, and reproducible run manifests.

use std::fmt;

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod svg;
pub mod table;

pub use args::Cli;

/// Process exit codes.
pub mod exit_code {
    /// Success.
    pub const OK: u8 = 0;
    /// Configuration or argument error.
    pub const CONFIG: u8 = 1;
    /// Runtime, numeric, or I/O failure.
    pub const RUNTIME: u8 = 2;
    /// One or more verification checks failed.
    pub const VERIFY_FAILED: u8 = 3;
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    VerifyFailed,
}

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit_code::CONFIG,
            CliError::Runtime(_) => exit_code::RUNTIME,
            CliError::VerifyFailed => exit_code::VERIFY_FAILED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
            CliError::VerifyFailed => write!(f, "verification failed"),
        }
    }
}

impl std::error::Error for CliError {}
