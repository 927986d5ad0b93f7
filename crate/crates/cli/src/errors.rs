//! Error-to-exit-code mapping for the binary.
//!
//! Exit codes: 0 success, 2 invalid input or parameters, 3 unreadable or
//! malformed files (including I/O failures), 4 a pipeline stage failed on
//! otherwise valid inputs. Usage errors from argument parsing also exit
//! with 2 (clap's default).

use std::fmt;

use canopy_core::Error;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// A named pipeline stage failed while running a multi-step command.
    Stage { stage: &'static str, source: Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Validation(_)) => 2,
            CliError::Core(Error::Format(_)) | CliError::Core(Error::Io(_)) => 3,
            CliError::Stage { .. } => 4,
        }
    }

    pub fn stage(stage: &'static str) -> impl FnOnce(Error) -> CliError {
        move |source| CliError::Stage { stage, source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Stage { stage, source } => write!(f, "stage {stage:?} failed: {source}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
