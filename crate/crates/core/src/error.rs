use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid occupancy chain: {0}")]
    InvalidChain(String),
    #[error("no unique stationary distribution: chain is frozen (p = 0 and q = 0)")]
    NoUniqueStationary,
    #[error("band cannot ever satisfy demand: demand {demand} exceeds capacity {capacity}")]
    DemandExceedsCapacity { demand: u32, capacity: u32 },
    #[error("no spectrum configured")]
    NoSpectrum,
    #[error("session never completes; absorption undefined against Completed (c = 0)")]
    NeverCompletes,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("linear system is singular")]
    Singular,
    #[error("PU cannot yield more than it uses (requested {requested}, in use {in_use})")]
    GrantExceedsUsage { requested: u32, in_use: u32 },
    #[error("session {session} is in terminal state {state}")]
    TerminalSession { session: u64, state: &'static str },
    #[error("session {session} is {state}, expected {expected}")]
    WrongState {
        session: u64,
        state: &'static str,
        expected: &'static str,
    },
    #[error("node {node} out of range for {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("phase {0} does not exist (expected 1 or 2)")]
    InvalidPhase(u32),
    #[error("{0}")]
    Validation(ValidationErrors),
    #[error("{0}")]
    Assumption(String),
}

/// One violated scenario field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Every violation found while validating an input document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for v in &self.0 {
            write!(f, "\n  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}
