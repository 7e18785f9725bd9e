use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown plot kind '{0}'")]
    UnknownKind(String),
    #[error("dataset is missing column '{0}'")]
    MissingColumn(String),
    #[error(transparent)]
    Core(#[from] avgpg::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Config problems map to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::UnknownKind(_))
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
