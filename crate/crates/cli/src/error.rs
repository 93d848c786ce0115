use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Pipeline stage, named in error messages and manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Ingest,
    Features,
    Train,
    Report,
    Plot,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Report => "report",
            Stage::Plot => "plot",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: canopyflux::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn config(path: &Path, reason: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    /// 2 for configuration problems, 3 for bad or missing data, 4 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Stage { source, .. } if !source.is_data_error() => 2,
            CliError::Stage { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageContext<T> for canopyflux::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
