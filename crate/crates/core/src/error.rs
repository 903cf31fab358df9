use thiserror::Error;

/// Errors raised by the chaos-calculus engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration document could not be parsed.
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    /// A value parsed correctly but violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called outside its documented preconditions.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The exact-expectation engine would need more states than allowed.
    #[error(
        "expectation budget exceeded: truncation level {required_k} needs {work} units of work, budget is {budget}"
    )]
    Budget {
        required_k: u32,
        work: f64,
        budget: f64,
    },

    /// The requested operation is refused (combinatorial blowup, non-finite input, ...).
    #[error("refused: {0}")]
    Refused(String),

    /// The functional carries chaos beyond the requested maximal order.
    #[error("residual chaos beyond max order {max_order}: {detail}")]
    ResidualChaos { max_order: usize, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
