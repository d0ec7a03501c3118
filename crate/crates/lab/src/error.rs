use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Bad flags, unreadable or invalid configuration, bad input files.
    #[error("configuration error: {0}")]
    Config(String),
    /// An input that lies outside the domain of the numerics (e.g. a sample
    /// with v ≥ 3 handed to the inequality checks).
    #[error("domain error: {0}")]
    Domain(#[source] shrinker_core::Error),
    #[error(transparent)]
    Core(#[from] shrinker_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for anything the user can fix in the inputs, 1
    /// for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Domain(_) | LabError::Json { .. } => 2,
            _ => 1,
        }
    }
}
