use thiserror::Error;

pub type Result<T> = std::result::Result<T, ArocError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArocError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value {value} in {what}")]
    NonFinite { what: String, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("degenerate knots for covariate `{covariate}`: {reason}")]
    DegenerateKnots { covariate: String, reason: String },

    #[error("covariate `{0}` is not present in the dataset")]
    MissingCovariate(String),

    #[error("factor `{covariate}` has value {value} outside its levels {{0, 1}}")]
    FactorLevel { covariate: String, value: f64 },

    #[error("numerical failure in mixture component {component}: {reason}")]
    ComponentFailure { component: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("evaluation grids differ: {0}")]
    GridMismatch(String),
}

impl ArocError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ArocError::InvalidArgument(msg.into())
    }

    /// True for errors caused by arithmetic breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ArocError::NotPositiveDefinite(_) | ArocError::ComponentFailure { .. } | ArocError::Numerical(_)
        )
    }
}

pub(crate) fn ensure_finite(what: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ArocError::NonFinite {
            what: what.to_string(),
            value,
        })
    }
}
