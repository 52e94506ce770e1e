use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    /// The run was declined before any work, e.g. over the dimension cap.
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Core(fewboson::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<fewboson::Error> for CliError {
    fn from(e: fewboson::Error) -> Self {
        match e {
            fewboson::Error::DimensionCap { .. } => CliError::Refused(e.to_string()),
            fewboson::Error::Io(io) => CliError::Io(io),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// Process exit status.
    pub fn status(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) | CliError::Usage(_) => 2,
            CliError::Refused(_) => 3,
            _ => 1,
        }
    }
}
