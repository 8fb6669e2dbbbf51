use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The resolved scale constant `c*` was not strictly positive.
    #[error("degenerate scale: c* = {0} is not positive")]
    DegenerateScale(f64),

    #[error("design matrix is rank deficient (numerical rank {rank} < p = {p})")]
    RankDeficient { rank: usize, p: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}
