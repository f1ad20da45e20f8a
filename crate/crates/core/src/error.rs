use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid format: {0}")]
    InvalidFormat(String),
    #[error("float ({n}, {e}) is not bounded in this format")]
    Unbounded { n: String, e: i64 },
    #[error("result does not fit the target format: {0}")]
    Overflow(String),
    #[error("operation requires radix 2{}, got radix {beta}", if *.allow_three { " or 3" } else { "" })]
    UnsupportedRadix { beta: u32, allow_three: bool },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("stream is frozen waiting for input")]
    Frozen,
    #[error("evaluation budget of {0} components exhausted")]
    Budget(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
