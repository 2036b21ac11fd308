use std::fmt;

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters for the requested analysis.
    Domain(String),
    /// Solver failure, inconclusive oracle, or failed verification.
    Numerical(String),
    Usage(String),
    /// Input artifact missing, unreadable or malformed.
    Artifact(String),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Usage(_) => 64,
            CliError::Artifact(_) => 66,
            CliError::Output(_) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Artifact(m) => write!(f, "artifact error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fdde_stab::Error> for CliError {
    fn from(e: fdde_stab::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
