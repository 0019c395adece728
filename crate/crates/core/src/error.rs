use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("agent {agent} is out of range for a population of {n}")]
    AgentOutOfRange { agent: usize, n: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("exact enumeration requires rational arithmetic")]
    ExactArithmeticRequired,

    #[error("state support grew to {reached} states, above the cap of {cap}")]
    SupportCapExceeded { cap: usize, reached: usize },

    #[error("no closed-form limit law for n={n}, a={a}, tau={tau}: {reason}")]
    Uncovered {
        n: usize,
        a: String,
        tau: String,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("probability vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("closed-form law has a negative mass {mass} on {atom}")]
    NegativeMass { atom: String, mass: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
