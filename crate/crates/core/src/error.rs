use thiserror::Error;

/// Errors raised by the simulator kernels, the integrators and the file front-end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation
    /// (nonpositive width, nonpositive frequency, nonfinite value).
    #[error("domain error: {0}")]
    Domain(String),

    /// A state or moment set violates one of its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Wrong number or shape of inputs to a diagnostic.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed configuration text. `line` is 1-based; `None` for missing keys.
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("I/O error: {0}")]
    Io(String),

    /// The width of the Gaussian collapsed below the configured floor.
    #[error("singularity at t = {t}: {detail}")]
    Singularity { t: f64, detail: String },

    /// The adaptive controller asked for a step below the minimum.
    #[error("step size underflow at t = {t} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    /// A diagnostic could not produce a meaningful result.
    #[error("diagnostic failed: {0}")]
    Diagnostic(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
