use lakesim_core::LakeError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{experiment}: {source}")]
    Run {
        experiment: &'static str,
        source: LakeError,
    },
    #[error("{experiment}: check failed: {checks:?}")]
    ChecksFailed {
        experiment: &'static str,
        checks: Vec<String>,
    },
}

impl CliError {
    pub fn parse(e: serde_json::Error) -> Self {
        CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Run { .. } => "run",
            CliError::ChecksFailed { .. } => "check",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Run { .. } => 4,
            CliError::ChecksFailed { .. } => 5,
        }
    }

    pub fn record(&self) -> FailureRecord {
        FailureRecord {
            status: "failed",
            kind: self.kind(),
            message: self.to_string(),
        }
    }
}

/// Written as `failure.json` when a run does not complete cleanly.
#[derive(Debug, Serialize)]
pub struct FailureRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
}
