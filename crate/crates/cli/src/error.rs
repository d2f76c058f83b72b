use std::path::PathBuf;

/// Errors surfaced by the command-line driver.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration or command line is invalid; nothing was run.
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: mortcast_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn core(module: &'static str) -> impl FnOnce(mortcast_core::Error) -> CliError {
        move |source| CliError::Core { module, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 1 for validation errors, 2 for data errors, 3 for model errors.
    pub fn exit_code(&self) -> u8 {
        use mortcast_core::Error as E;
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core { source, .. } => match source {
                E::Config(_) | E::Schedule(_) => 1,
                e if e.is_data_error() => 2,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
