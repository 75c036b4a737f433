use std::fmt;
use std::process::ExitCode;

use hdvar::Error;

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad input files, flags or config: exit 2.
    Input(String),
    /// Estimator used outside its regime: exit 3.
    Regime(String),
    /// Anything else: exit 1.
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Regime(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Regime(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_regime() {
            return CliError::Regime(e.to_string());
        }
        match e {
            Error::Dimension(_)
            | Error::Covariance(_)
            | Error::Pattern(_)
            | Error::Data(_)
            | Error::UnknownEstimator(_)
            | Error::Domain(_) => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
