use thiserror::Error;

/// Errors shared by every engine in the crate.
///
/// Input problems (syntax, sorts, malformed configs, loops handed to the
/// loop-free engine) are kept apart from resource exhaustion so front ends can
/// map them to distinct exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("sort error: `{term}` has sort {found}, expected {expected}")]
    Sort {
        term: String,
        expected: String,
        found: String,
    },

    #[error("invalid grammar: {}", .0.join("; "))]
    InvalidGrammar(Vec<String>),

    #[error("unknown nonterminal `{0}`")]
    UnknownNonterminal(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("loop reachable from `{nonterminal}` in production `{production}`; the loop-free engine cannot evaluate it")]
    LoopDetected {
        nonterminal: String,
        production: String,
    },

    #[error("resource limit exceeded: {what} (limit {limit})")]
    Resource { what: String, limit: u64 },
}

impl Error {
    pub fn resource(what: impl Into<String>, limit: impl TryInto<u64>) -> Self {
        Error::Resource {
            what: what.into(),
            limit: limit.try_into().unwrap_or(u64::MAX),
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
