use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Problem size beyond what the operation is willing to allocate.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A numerical routine failed a post-condition.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid configuration. `line` is 1-based when known.
    #[error("{}", match .line { Some(l) => format!("config error (line {l}): {msg}"), None => format!("config error: {msg}") })]
    Config { line: Option<usize>, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config { line, msg: msg.into() }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Domain(_) | Error::Capacity(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io(_) => 4,
        }
    }
}
