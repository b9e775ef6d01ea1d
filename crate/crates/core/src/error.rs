use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular design matrix: column `{column}` is linearly dependent on earlier columns")]
    SingularDesign { column: String },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("null model log-likelihood {null} exceeds full model {full}; models are not nested")]
    NestingViolation { full: f64, null: f64 },

    #[error(
        "imprinting direction is undefined when the parent-of-origin estimate is exactly zero"
    )]
    UndefinedDirection,

    #[error("{path}, line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
