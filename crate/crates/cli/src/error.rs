use thiserror::Error;

/// Anything that should end the process with exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("run failed: {0}")]
    Run(#[from] binary_povm::Error),
    #[error("cannot write report: {0}")]
    Output(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
