use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("kernel was built for a different grid or Riesz order")]
    KernelMismatch,

    #[error("direct convolution is limited to M <= {limit} points per axis, got M = {m}")]
    DirectSumTooLarge { m: usize, limit: usize },

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("operation requires a single-term nonlinearity")]
    MultiTermNonlinearity,

    #[error("certification requires a converged solution, got status `{0}`")]
    NotConverged(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("field file format error: {0}")]
    FieldFormat(String),

    #[error("sweep requires a nonempty point list")]
    EmptySweep,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
