use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("elements belong to different algebras ({0} vs {1})")]
    AlgebraMismatch(String, String),
    #[error("matrix is not in the span of the algebra basis")]
    NotInSpan,
    #[error("element is not in {0}")]
    NotInSubgroup(&'static str),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported cochain degree {0}")]
    UnsupportedDegree(usize),
    #[error("cochain is not supported in {0}")]
    Support(String),
    #[error("point lies outside the affine chart")]
    OutsideChart,
    #[error("direction is tangent to the contact distribution")]
    NotTransverse,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
