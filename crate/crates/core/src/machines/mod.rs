//! Compilers from classic machine models into grammars.
//!
//! [`tm`] turns a Turing machine state table into a node-adding grammar whose
//! runs simulate the machine on an encoded tape; [`bc`] turns a Boolean
//! circuit into a nodeless grammar that evaluates it by edge rewriting.

pub mod bc;
pub mod tm;

use thiserror::Error;

use crate::matching::DeriveError;
use crate::text::ParseError;

#[derive(Debug, Error)]
pub enum MachineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Derive(#[from] DeriveError),
    #[error("invalid row: {0}")]
    InvalidRow(String),
    #[error("malformed encoded state: {0}")]
    Decode(String),
    #[error("circuit is not a dag: cycle through `{0}`")]
    Cyclic(String),
    #[error("gate arity violation: {0}")]
    Arity(String),
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("assignment missing input `{0}`")]
    MissingInput(String),
    #[error("stuck circuit: halted with output `{0}` unassigned")]
    Stuck(String),
    #[error("step budget of {0} exceeded")]
    BudgetExceeded(usize),
}
