use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A spec file or flag value failed validation.
    #[error("{field}: {reason}")]
    Spec { field: String, reason: String },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Sampler(#[from] xcghmc::Error),
}

impl HarnessError {
    pub fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Spec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 for usage and configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Spec { .. } | Self::Parse { .. } => 1,
            Self::Sampler(e) if is_usage(e) => 1,
            _ => 3,
        }
    }
}

fn is_usage(e: &xcghmc::Error) -> bool {
    use xcghmc::Error::*;
    matches!(
        e,
        DimensionMismatch { .. }
            | InvalidParameter { .. }
            | UnknownTarget(_)
            | UnknownObservable(_)
    )
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
