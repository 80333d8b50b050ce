use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{0}")]
    NotConverged(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<dualmod::Error> for CliError {
    fn from(e: dualmod::Error) -> Self {
        match e {
            dualmod::Error::NotConverged(_) => CliError::NotConverged(e.to_string()),
            dualmod::Error::Parse { .. } => CliError::Parse(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}
