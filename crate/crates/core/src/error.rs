use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: expected {expected} values, got {actual}")]
    Shape {
        layer: usize,
        expected: usize,
        actual: usize,
    },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    TrainingDivergence { epoch: usize, learning_rate: f64 },
    #[error("belief update diverged (dt {dt}, gradient magnitude {gradient})")]
    InferenceDivergence { dt: f64, gradient: f64 },
    #[error("no stable dt among {tried} swept values")]
    NoStableStep { tried: usize },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
