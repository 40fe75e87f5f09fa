use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular linear system at row {row}")]
    Singular { row: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("parse error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Parse {
        message: String,
        location: Option<String>,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(message: impl Into<String>, location: Option<String>) -> Self {
        Error::Parse {
            message: message.into(),
            location,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
