use thiserror::Error;

use crate::treecore::BinStr;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A string was looked up in a set that does not contain it.
    #[error("string {0} is not a member of the set")]
    MemberNotFound(BinStr),

    /// The input violates a documented precondition of the operation.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// A step budget ran out; the question is undecided, not answered negatively.
    #[error("budget of {0} steps exceeded")]
    BudgetExceeded(u64),

    /// The question cannot be decided for this kind of input.
    #[error("unverifiable: {0}")]
    Unverifiable(String),

    /// A structurally invalid object (bad coloring, bad rake, ...).
    #[error("invalid object: {0}")]
    Invalid(String),

    /// A text artifact could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::PreconditionViolated(msg.into()))
}

/// A countdown of computation steps.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    /// Charge `n` steps, failing once the limit is passed.
    pub fn charge(&mut self, n: u64) -> Result<()> {
        self.used = self.used.saturating_add(n);
        if self.used > self.limit {
            Err(Error::BudgetExceeded(self.limit))
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }
}
