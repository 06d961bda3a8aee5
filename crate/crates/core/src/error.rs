use thiserror::Error;

use crate::market::AgentId;

/// Errors raised by market construction, rank queries and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),

    #[error("agents {0} and {1} are on the same side")]
    SameSide(AgentId, AgentId),

    #[error("agent {0} is unmatched")]
    Unmatched(AgentId),

    #[error("instance has {agents} agents, above the brute-force bound of {bound}")]
    OracleBound { agents: usize, bound: usize },

    #[error("community {0} is unbalanced")]
    Unbalanced(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable identifier used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::UnknownAgent(_) => "unknown-agent",
            Error::SameSide(..) => "same-side",
            Error::Unmatched(_) => "unmatched-agent",
            Error::OracleBound { .. } => "size",
            Error::Unbalanced(_) => "unbalanced",
            Error::Domain(_) => "domain",
            Error::Parse { .. } => "parse",
            Error::UnknownFixture(_) => "unknown-fixture",
            Error::Invariant(_) => "invariant",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
