use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes. The CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Load,
    Query,
    Limit,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("load error: {0}")]
    Load(String),

    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("ambiguous attribute `{0}`; qualify it with a table name")]
    AmbiguousAttribute(String),

    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),

    #[error("kind mismatch: {0}")]
    KindMismatch(String),

    #[error("subsets are drawn from different relations (`{0}` vs `{1}`)")]
    BaseMismatch(String, String),

    #[error("aggregate `{0}` is undefined over an empty subset")]
    UndefinedAggregate(String),

    #[error("unary intersection of an empty relation of subsets")]
    EmptyIntersection,

    #[error("cannot mix bare attributes with aggregates in a subset projection")]
    MixedProjection,

    #[error("disjunction mixes conditions of different kinds or sources: {0}")]
    CrossBucketDisjunction(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("{limit} exceeded (limit {value})")]
    LimitExceeded { limit: &'static str, value: u64 },

    #[error("{0}")]
    Semantic(String),
}

impl Error {
    pub fn semantic(msg: impl Into<String>) -> Self {
        Error::Semantic(msg.into())
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Load(_) => ErrorCategory::Load,
            Error::LimitExceeded { .. } => ErrorCategory::Limit,
            _ => ErrorCategory::Query,
        }
    }
}
