use thiserror::Error;

use crate::expr::ExprError;

/// Errors raised by the numeric layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    /// A field was queried outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The condition Jacobian stayed singular after regularization.
    #[error("singular condition Jacobian at y = {y:?} (|det J| = {det:e})")]
    SingularJacobian { y: Vec<f64>, det: f64 },

    /// A Newton iterate left the domain of the parameter function.
    #[error("Newton iterate left the domain of phi near y = {y:?}: {reason}")]
    DomainEscape { y: Vec<f64>, reason: String },

    /// A finite-difference stencil could not be evaluated.
    #[error("stencil evaluation failed at {point:?}: {reason}")]
    Stencil { point: Vec<f64>, reason: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("scheme became unstable at t = {time}: max |u| = {max_abs:e}")]
    Unstable { time: f64, max_abs: f64 },

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
