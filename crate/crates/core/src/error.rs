use thiserror::Error;

use crate::expr::ExprError;
use crate::geometry::GeometryError;
use crate::linalg::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("not a submersion at p: Jacobian rank {rank}, expected {expected}")]
    NotSubmersion { rank: usize, expected: usize },
    #[error("not a Riemannian submersion: horizontal length residual {residual:.3e}")]
    NotRiemannian { residual: f64 },
    #[error("invalid map definition: {0}")]
    Invalid(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

impl Error {
    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Inconsistent(_) | Error::Linalg(LinalgError::NoConvergence))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
