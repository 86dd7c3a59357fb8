use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid symbol word: {0}")]
    InvalidSymbols(String),

    #[error("invalid connection spec: {0}")]
    InvalidSpec(String),

    #[error("total collision: y = 0 at integer time {0}")]
    TotalCollision(f64),

    #[error("velocity of the drive requested at collision time {0}")]
    CollisionTime(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
