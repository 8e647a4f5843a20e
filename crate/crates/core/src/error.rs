use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point must have at least one coordinate")]
    EmptyPoint,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{transform} is undefined at {value} (valid for {interval})")]
    Domain {
        transform: String,
        value: f64,
        interval: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value or gradient at iteration {iter}")]
    NonFiniteIterate { iter: usize },

    #[error("iterate diverged (norm {norm:e}) at iteration {iter}")]
    Diverged { iter: usize, norm: f64 },

    #[error("radial step is undefined at the origin")]
    UndefinedDirection,

    #[error("preferred state {index} is not first-order stationary (gradient norm {grad_norm:e})")]
    NotPreferred { index: usize, grad_norm: f64 },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("initialization {index}: {source}")]
    Initialization {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed trajectory file {path}: {msg}")]
    Csv { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by the user's configuration or arguments
    /// rather than by the numerics of a run.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config { .. } | Error::InvalidParameter(_) | Error::Io(_) | Error::Json(_) => {
                true
            }
            Error::Initialization { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
