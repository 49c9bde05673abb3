// SPDX-License-Identifier: Apache-2.0

//! Configuration, orchestration and output for the `nvdyn` command.

pub mod config;
pub mod oracle;
pub mod output;
pub mod pipeline;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}
