use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input files: exit code 2.
    #[error("validation failed: {0}")]
    Validation(String),
    /// The computation itself failed: exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<rotwave::Error> for CliError {
    fn from(e: rotwave::Error) -> Self {
        use rotwave::Error as E;
        let msg = e.to_string();
        match e {
            E::Invalid(_)
            | E::Dimension(_)
            | E::GridMismatch
            | E::UnknownKind(_)
            | E::NotSkew(_)
            | E::SingularDiffusion
            | E::BelowSpectralBound(_)
            | E::Io(_)
            | E::Json(_) => Self::Validation(msg),
            _ => Self::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
