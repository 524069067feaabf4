use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha=1 excluded")]
    AlphaOne,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite Gibbs weight in cell (a={a}, b={b}); rescale N or the couplings")]
    NonFiniteWeight { a: usize, b: usize },

    #[error("exact enumeration refused for N={n} (limit {limit})")]
    CostGuard { n: usize, limit: usize },

    #[error("region {0} has a random limit; use the variational solvers")]
    RandomLimit(String),

    #[error("parameters are not classifiable into a proven region: {0}")]
    Unclassifiable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
