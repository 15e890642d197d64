use std::fmt;

/// CLI failure categories, mapped onto exit codes: data validation
/// errors exit 3, everything else at runtime exits 4. Usage errors are
/// handled by the argument parser and exit 2.
#[derive(Debug)]
pub enum CliError {
    Data(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(message) => write!(f, "{message}"),
            CliError::Runtime(message) => write!(f, "{message}"),
        }
    }
}

impl From<motifrank::Error> for CliError {
    fn from(err: motifrank::Error) -> Self {
        if err.is_data_error() {
            CliError::Data(err.to_string())
        } else {
            CliError::Runtime(err.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}
