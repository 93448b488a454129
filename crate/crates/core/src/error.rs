use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::spaces::SequenceTrace;

/// Location of a syntax or domain problem inside an expression text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was violated by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: SourcePos, message: String },

    /// The expression parsed but is outside the allowed domain for its kind.
    #[error("domain error at {pos}: {message}")]
    Domain { pos: SourcePos, message: String },

    #[error("F(0)=0 violated: constant term {constant} in coordinate {coordinate}")]
    NonzeroConstant {
        coordinate: usize,
        constant: String,
    },

    #[error("sequence did not converge ({which}): verdict {verdict}")]
    Divergence {
        which: &'static str,
        verdict: String,
        trace: Box<SequenceTrace>,
    },

    /// A p-power fell outside the range of binary64.
    #[error("value p^(-{exponent}) is out of floating-point range")]
    Range { exponent: BigRational },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
