use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A quantile level fell outside the open unit interval.
    #[error("quantile level {0} is outside (0, 1)")]
    Domain(f64),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Every coordinate was truncated away by the simplex projection.
    #[error("degenerate projection: no positive mass left after truncation")]
    DegenerateProjection,

    #[error("objective increased for {iterations} consecutive iterations at step size {eta:e}; retry with a smaller step size")]
    StepSize { eta: f64, iterations: usize },

    #[error("tuning failed: {0}")]
    Tuning(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("{}", match .line { Some(l) => format!("line {l}: {}", .message), None => .message.clone() })]
    Format { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
