use thiserror::Error;

/// Failures raised by the deconvolution library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unsupported order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("arithmetic overflow: {0}")]
    ArithmeticOverflow(String),

    #[error("enumeration budget exceeded: {terms} terms requested, budget {budget}")]
    BudgetExceeded { terms: u128, budget: u64 },

    #[error("no closed form available for error model `{0}`")]
    NotClosedForm(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefix the field path of an invalid-parameter error, e.g. `theta` -> `error.theta`.
    pub fn with_field_prefix(self, prefix: &str) -> Self {
        match self {
            Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                field: format!("{prefix}.{field}"),
                reason,
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
