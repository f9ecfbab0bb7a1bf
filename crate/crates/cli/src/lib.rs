//! Library behind the `gramwire` binary: corpus generation, comparison
//! reports, and the command implementations with their exit-code discipline.

pub mod commands;
pub mod planted;
pub mod report;

use std::fmt;

/// Command failure with the exit code it maps to: 1 contract violation,
/// 2 input error, 3 version or fingerprint mismatch.
#[derive(Debug)]
pub enum CliError {
    Contract(String),
    Input(String),
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Contract(_) => 1,
            CliError::Input(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> CliError {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Contract(m) | CliError::Input(m) | CliError::Mismatch(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}
