use thiserror::Error;

use crate::grid::Cube;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cube {0} is not a dyadic cube of the grid")]
    NotDyadic(Cube),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "family is not Carleson at {cube}: maximal children measure {children} exceeds {bound}"
    )]
    NotCarleson { cube: Cube, children: f64, bound: f64 },

    #[error("luxemburg bracketing failed: F({lo}) = {f_lo}, F({hi}) = {f_hi}")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
