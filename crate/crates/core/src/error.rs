use std::fmt;

use crate::search::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the supported domain (e.g. `n > 64`, a level above `n`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {}", ViolationList(.0))]
    Validation(Vec<Violation>),

    /// The requested computation exceeds a configured resource bound.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A mathematical guarantee failed to hold. Always an implementation bug.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
