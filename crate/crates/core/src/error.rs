use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("channel matrix is numerically rank deficient (min/max |R_jj| = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("ML enumeration of {candidates} candidates exceeds the budget of {budget}")]
    BudgetExceeded { candidates: f64, budget: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
