use std::fmt;

use fairrep_core::dataset::DatasetError;
use fairrep_core::evaluation::EvalError;
use fairrep_core::fair_projection::FairError;
use fairrep_core::linalg::LinalgError;
use fairrep_core::neuralnet::NetError;

/// Failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, config, missing inputs or missing upstream stages.
    Usage,
    /// Unreadable or malformed data and artifact files.
    Data,
    /// Divergence, rank deficiency and other numerical failures.
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub stage: Option<&'static str>,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, stage: None, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Numerical, message)
    }

    pub fn in_stage(mut self, stage: &'static str) -> Self {
        self.stage.get_or_insert(stage);
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(stage) => write!(f, "stage {stage} failed: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let kind = match e {
            DatasetError::MissingFile(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        let kind = match e {
            NetError::Config(_) => ErrorKind::Usage,
            NetError::Format(_) | NetError::Io(_) => ErrorKind::Data,
            _ => ErrorKind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        let kind = match e {
            LinalgError::RankOutOfRange { .. } => ErrorKind::Usage,
            LinalgError::Format(_) | LinalgError::Io(_) => ErrorKind::Data,
            _ => ErrorKind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<FairError> for CliError {
    fn from(e: FairError) -> Self {
        match e {
            FairError::Linalg(inner) => inner.into(),
            other => Self::config(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::numerical(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}
