use std::path::PathBuf;

use sgdct_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: `{key}`: expected {expected}, got `{value}`")]
    Type {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("{}`{key}` out of range: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Range {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category for the report's error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } | Error::UnknownKey { .. } | Error::DuplicateKey { .. } => "config",
            Error::MissingKey(_) | Error::Type { .. } | Error::Range { .. } => "config",
            Error::Core(e) => core_kind(e),
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
        }
    }
}

fn core_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::Diverged { .. } | CoreError::ParameterDiverged { .. } => "divergence",
        CoreError::MomentBlowup { .. } => "moment-blowup",
        CoreError::AtStep { source, .. } => core_kind(source),
        CoreError::Unsupported(_) => "unsupported",
        _ => "numerical",
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
