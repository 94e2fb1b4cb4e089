use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] relutrap_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error("run {run_id} (seed {seed}) failed: {source}")]
    Run {
        run_id: usize,
        seed: u64,
        #[source]
        source: relutrap_core::Error,
    },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for everything
    /// that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        use relutrap_core::Error as E;
        match self {
            LabError::Config(_) => 1,
            LabError::Core(E::InvalidConfig(_) | E::TooManyComponents { .. } | E::HiddenTooNarrow { .. } | E::PoolTooSmall { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
