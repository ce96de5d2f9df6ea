use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] forest_renewal::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use forest_renewal::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Model(E::Domain(_) | E::InvalidParams(_)) => 1,
            CliError::Model(E::Numerical(_)) => 2,
            CliError::Model(E::Inconclusive(_)) => 3,
        }
    }
}

pub fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
