use thiserror::Error;

/// Errors raised across the library. Variants follow the failure classes
/// callers need to tell apart: bad input, points outside the state space,
/// parameter ranges, violated model hypotheses, quadrature that did not
/// converge, unsupported combinations, stalled samplers and bad configs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("accuracy error: {message} (partial value {partial:e}, error estimate {error:e})")]
    Accuracy {
        message: String,
        partial: f64,
        error: f64,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("sampler error: {0}")]
    Sampler(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    /// Same error with `ctx` prepended to its message.
    pub fn context(self, ctx: &str) -> Self {
        let pre = |m: String| format!("{ctx}: {m}");
        match self {
            Error::Input(m) => Error::Input(pre(m)),
            Error::Domain(m) => Error::Domain(pre(m)),
            Error::Range(m) => Error::Range(pre(m)),
            Error::Model(m) => Error::Model(pre(m)),
            Error::Accuracy { message, partial, error } => Error::Accuracy { message: pre(message), partial, error },
            Error::Unsupported(m) => Error::Unsupported(pre(m)),
            Error::Sampler(m) => Error::Sampler(pre(m)),
            Error::Config(m) => Error::Config(pre(m)),
        }
    }
}
