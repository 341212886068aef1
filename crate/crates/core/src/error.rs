use thiserror::Error;

/// Failure modes shared by every solver stage.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller handed in something outside the contract (bad ε, off-grid job, ...).
    #[error("input error: {0}")]
    Input(String),
    /// A configured cap (states, nodes, search nodes, sweeps) would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    /// A proven invariant failed to hold. Always an implementation bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Malformed or out-of-order message in the line protocol.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Protocol(_) | Error::Json(_) => 2,
            Error::Resource(_) => 3,
            Error::Invariant(_) | Error::Cache(_) => 4,
            Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invariant {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Invariant(format!($($arg)+)));
        }
    };
}
pub(crate) use invariant;
