//! Exit-code classification: 2 for validation problems (bad flags, bad
//! scenario files, I/O), 3 for numerical failures inside the computation.

use onebit_spectral::Error as CoreError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::CorrelationOutOfRange { .. }
            | CoreError::IndefiniteCorrelation { .. }
            | CoreError::QuadratureBudget { .. }
            | CoreError::FourthMoment { .. }
            | CoreError::ClampActivated { .. }
            | CoreError::Factorization(_)
            | CoreError::SingularFisher { .. }
            | CoreError::TooManyTrialFailures { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
