use thiserror::Error;

/// Errors raised by model construction and the analyses built on top of it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated one of its documented constraints.
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        constraint: &'static str,
    },

    /// An operation that needs two distinct strategies got the same one twice.
    #[error("strategies must differ, got {0} twice")]
    SameStrategy(crate::Strategy),

    #[error("unknown strategy label `{0}`")]
    UnknownStrategy(String),

    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),

    #[error("invalid axis `{name}`: {reason}")]
    InvalidAxis { name: String, reason: String },

    #[error("empty grid")]
    EmptyGrid,

    /// The linear system for the stationary distribution could not be solved
    /// or its solution failed the residual check.
    #[error("stationary distribution: {0}")]
    Singular(String),
}

impl Error {
    /// True for bad inputs, false for failures of a well-posed computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Singular(_))
    }

    pub(crate) fn param(
        name: &'static str,
        value: impl ToString,
        constraint: &'static str,
    ) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            constraint,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
