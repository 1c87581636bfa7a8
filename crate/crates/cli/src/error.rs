use std::path::PathBuf;

use thiserror::Error;

use crate::pipeline::Stage;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("stage `{stage}` needs `{requires}`: request it or run it first so its cache exists")]
    StageDependency { stage: Stage, requires: Stage },
    #[error("{stage} stage failed: {source}")]
    Numerical {
        stage: Stage,
        #[source]
        source: nanorbit_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl PipelineError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::StageDependency { .. } => 2,
            Self::Numerical { .. } => 3,
            Self::Io { .. } | Self::Format { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>) -> impl FnOnce(String) -> Self {
        let path = path.into();
        move |message| Self::Format { path, message }
    }
}

/// Attaches the stage name to core errors.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageContext<T> for nanorbit_core::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError::Numerical { stage, source })
    }
}
