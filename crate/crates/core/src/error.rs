use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PaseError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PaseError {
    /// Invalid parameters or a configuration that cannot produce a valid run.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller-supplied data violates an operation's preconditions.
    #[error("input error: {0}")]
    Input(String),

    /// A file did not match its expected format.
    #[error("format error in {path}{}: {message}", .row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Format {
        path: PathBuf,
        row: Option<usize>,
        message: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A pipeline stage failed; `stage` names which one.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PaseError>,
    },
}

impl PaseError {
    pub fn format(path: impl Into<PathBuf>, row: Option<usize>, message: impl Into<String>) -> Self {
        PaseError::Format {
            path: path.into(),
            row,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PaseError::Io {
            path: path.into(),
            source,
        }
    }

    /// The stage tag of a pipeline failure, if this error came from one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            PaseError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

/// Tag errors from a pipeline stage.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            already @ PaseError::Stage { .. } => already,
            other => PaseError::Stage {
                stage,
                source: Box::new(other),
            },
        })
    }
}
