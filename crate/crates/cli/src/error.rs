use std::fmt;
use std::process::ExitCode;

use qhgeo::QhError;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments, files or domain data. Exit code 3.
    Input(String),
    /// Solver failure or a failed numeric check. Exit code 2.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(3),
            CliError::Numeric(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<QhError> for CliError {
    fn from(e: QhError) -> Self {
        match e {
            QhError::Input(m) => CliError::Input(m),
            QhError::Domain(_) | QhError::Parameter { .. } | QhError::AmbiguousPosition { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}
