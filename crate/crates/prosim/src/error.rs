use std::path::Path;

use prosim_core::Error as CoreError;

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OUTPUT: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const FIT: u8 = 3;
    pub const INSUFFICIENT_SIGNAL: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
#[error("{msg}")]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self {
            code: exit::INPUT,
            msg: msg.into(),
        }
    }

    pub fn output(msg: impl Into<String>) -> Self {
        Self {
            code: exit::OUTPUT,
            msg: msg.into(),
        }
    }

    pub fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::input(format!("{}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::output(format!("{}: {err}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Config(_) | CoreError::InvalidInput(_) => exit::INPUT,
            CoreError::SingularFit(_)
            | CoreError::UndefinedCorrelation(_)
            | CoreError::StiffnessInfeasible { .. }
            | CoreError::InfeasibleEquilibrium(_) => exit::FIT,
            CoreError::InsufficientData(_) | CoreError::EmptySweep => exit::INSUFFICIENT_SIGNAL,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}
