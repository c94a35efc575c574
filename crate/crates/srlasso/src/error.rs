use thiserror::Error;

use crate::solver::SolveResult;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("group {group} has (numerically) zero norm")]
    ZeroGroup { group: usize },

    #[error("derivative of the feature map is rank deficient at {position:?}")]
    DegenerateDerivative { position: Vec<f64> },

    #[error("solver stopped after {} iterations with duality gap {:e}", .best.iterations, .best.final_gap)]
    NotConverged { best: Box<SolveResult> },

    #[error("atom at {position:?} lies farther than half a cell from every grid node")]
    OffGridTooFar { position: Vec<f64> },

    #[error("interpolation system is singular (condition number {condition:e})")]
    SingularGram { condition: f64 },

    #[error("sign pair has vanishing amplitude part")]
    DegenerateSign,

    #[error("operation supports only {supported}-dimensional operators, got {found}")]
    DimUnsupported { supported: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
