use std::fmt;

/// Errors raised across the toolkit.
///
/// Each variant maps onto one process exit code of the `regen-verify` binary
/// (see [`Error::exit_code`]).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An invalid configuration or model parameter. `path` is the JSON-style
    /// location of the offending field, relative to whatever was validated.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A simulation exceeded its cycle or event budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The time-scaling hypotheses failed and no override was given.
    #[error("hypothesis gate: {0}")]
    HypothesisGate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A caller-side precondition was violated (sample sizes, horizons, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(path: impl fmt::Display, message: impl fmt::Display) -> Self {
        Error::Config { path: path.to_string(), message: message.to_string() }
    }

    /// Re-roots a configuration error under `prefix`; other variants pass through.
    pub fn under(self, prefix: &str) -> Self {
        match self {
            Error::Config { path, message } => {
                let path = if path.is_empty() {
                    prefix.to_string()
                } else if path.starts_with('[') {
                    format!("{prefix}{path}")
                } else {
                    format!("{prefix}.{path}")
                };
                Error::Config { path, message }
            }
            other => other,
        }
    }

    /// Exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) | Error::Dimension(_) => 2,
            Error::HypothesisGate(_) => 4,
            Error::Budget(_) => 5,
            Error::Numerical(_) | Error::Precondition(_) | Error::Io(_) => 1,
        }
    }
}
