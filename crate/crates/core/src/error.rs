use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An activation was evaluated at a non-finite argument.
    #[error("activation domain error: argument {0} is not finite")]
    Domain(f64),

    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched lengths, shapes or pools between two inputs.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A parameter or state entry became non-finite during time stepping.
    #[error("divergence at step {step} (t = {time}): non-finite value in {group}")]
    Divergence {
        step: usize,
        time: f64,
        group: &'static str,
    },

    #[error("study error: {0}")]
    Study(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
