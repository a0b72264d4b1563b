use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("in `{field}`: {source}")]
    Expr {
        field: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("reduced problem has no solution near t = {t}")]
    NoReducedSolution { t: f64 },
    #[error("assumption A2 violated: k - df/dy vanishes near t = {t}")]
    DegenerateLinearization { t: f64 },
    #[error("Newton iteration diverged: {0}")]
    Divergence(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn expr(field: &'static str) -> impl FnOnce(ExprError) -> Error {
        move |source| Error::Expr { field, source }
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Expr { .. } | Error::Invalid(_) | Error::Io(_) | Error::Json(_))
    }
}
