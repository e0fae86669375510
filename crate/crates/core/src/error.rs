use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed interval [{lo}, {hi}]: lower end exceeds upper end")]
    MalformedInterval { lo: String, hi: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("agent index {index} out of range for {agents} agents")]
    AgentOutOfRange { index: usize, agents: usize },

    #[error("agent group must be nonempty")]
    InvalidGroup,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("construction parameter violated: {0}")]
    ConstructionParameter(String),

    #[error("tie-break script rejected at round {round}: {reason}")]
    Script { round: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }
}
