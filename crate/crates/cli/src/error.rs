//! Error classification for process exit codes.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad configuration or arguments (exit 1).
    Validation,
    /// Failure while running (exit 2).
    Runtime,
    /// A verification suite reported failing checks (exit 3).
    Verification,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Validation => 1,
            ExitKind::Runtime => 2,
            ExitKind::Verification => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Validation,
            source: e.into(),
        }
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Runtime,
            source: e.into(),
        }
    }

    pub fn verification(msg: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::Verification,
            source: anyhow::anyhow!(msg.into()),
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError {
            kind: self.kind,
            source: self.source.context(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for CliError {}

impl From<flrw_dirac::Error> for CliError {
    fn from(e: flrw_dirac::Error) -> Self {
        use flrw_dirac::Error as E;
        let kind = match e {
            E::InvalidParameter { .. }
            | E::Domain { .. }
            | E::Cfl { .. }
            | E::ConeViolation { .. }
            | E::PotentialFlag { .. } => ExitKind::Validation,
            _ => ExitKind::Runtime,
        };
        CliError {
            kind,
            source: e.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::runtime(e)
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::validation(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
