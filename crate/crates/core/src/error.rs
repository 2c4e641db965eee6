use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Ambient dimension below the supported minimum of 4.
    #[error("dimension d = {0} is below the minimum of 4")]
    Dimension(usize),

    /// A scalar argument fell outside its admissible range.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Quadrature or a closed form produced a non-finite or inadmissible value.
    #[error("numeric failure at kappa = {kappa}, d = {d}: {what}")]
    Numeric { kappa: f64, d: usize, what: String },

    /// A rejection sampler exhausted its iteration budget.
    #[error("sampler failure after {iterations} proposals (replication {replication:?})")]
    Sampler {
        iterations: u64,
        replication: Option<u64>,
    },

    /// Inputs where the requested quantity is undefined (e.g. 0/0 tilt).
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    /// Experiment configuration problems, reported with the offending key.
    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Attach a replication index to a sampler failure.
    pub(crate) fn at_replication(self, replication: u64) -> Self {
        match self {
            Error::Sampler { iterations, .. } => Error::Sampler {
                iterations,
                replication: Some(replication),
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
