use std::path::PathBuf;

use thiserror::Error;

/// Failures reported by the command-line tool, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or malformed input files.
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The library rejected the request.
    #[error("{0}")]
    Model(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Io { .. } => "io",
            CliError::Model(_) => "model",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Model(_) => 4,
        }
    }

    pub fn model(e: impl std::fmt::Display) -> Self {
        CliError::Model(e.to_string())
    }

    pub fn parse(e: impl std::fmt::Display) -> Self {
        CliError::Parse(e.to_string())
    }

    /// One machine-readable line; newlines in the message are flattened.
    pub fn report_line(&self) -> String {
        let message = self.to_string().replace('\n', " ");
        format!("error: kind={}; message={message}", self.kind())
    }
}

impl From<polarq::CodecError> for CliError {
    fn from(e: polarq::CodecError) -> Self {
        match e {
            polarq::CodecError::Stream(_) => CliError::parse(e),
            other => CliError::model(other),
        }
    }
}

impl From<polarq::ConstructionError> for CliError {
    fn from(e: polarq::ConstructionError) -> Self {
        CliError::model(e)
    }
}

impl From<polarq::GainError> for CliError {
    fn from(e: polarq::GainError) -> Self {
        CliError::model(e)
    }
}

impl From<polarq::ChannelError> for CliError {
    fn from(e: polarq::ChannelError) -> Self {
        CliError::model(e)
    }
}
