use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the engine.
///
/// The variants are grouped by how a caller is expected to react: parse
/// errors point at malformed input text, semantic errors at well-formed input
/// that does not fit the data or the tree, and budget errors at searches or
/// evaluations that ran out of time or space.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: line {line}, column {column}: {message}")]
    Parse {
        what: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{relation}: line {line}: expected {expected} values, found {found}")]
    Arity {
        relation: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{relation}.{column}: column mixes integer and string values")]
    MixedDomain { relation: String, column: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("invalid f-tree: {0}")]
    InvalidTree(String),

    #[error("operator precondition violated: {0}")]
    Precondition(String),

    #[error("missing statistics for {0}")]
    MissingStatistics(String),

    #[error("infeasible workload: {0}")]
    InfeasibleSpec(String),

    #[error("search budget of {0} states exhausted")]
    Budget(usize),

    #[error("result exceeds the limit of {0} values")]
    TooLarge(usize),

    #[error("timed out")]
    Timeout,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn parse(
        what: impl Into<String>,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            what: what.into(),
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input text.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Arity { .. } | Error::MixedDomain { .. }
        )
    }

    /// True for errors caused by exhausted time or space budgets.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget(_) | Error::TooLarge(_) | Error::Timeout)
    }
}
