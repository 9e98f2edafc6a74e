//! The `.gmc` experiment format.
//!
//! One statement per line, `#` starts a comment, blank lines are ignored:
//!
//! ```text
//! experiment NAME
//! modes INT
//! source mode INT                    # or: source amps (re,im) ... (re,im)
//! H INT INT [t=FLOAT]                # beam splitter, default t = 1/sqrt(2)
//! R INT INT                          # reflector
//! X INT INT                          # cross
//! PHASE INT [INT] phi=FLOAT          # e^{i phi} on one mode, or diag(1, e^{i phi})
//! OP INT... (re,im)...               # custom k x k, row-major
//! DETECT NAME@MODES [NAME@MODES ...] # MODES is INT or INT,INT,...
//! ```
//!
//! The header statements come first, in the order shown; stages follow and
//! get ordering times in file order.

mod parse;
mod write;

use std::fmt;

use thiserror::Error;

use crate::apparatus::Apparatus;

pub use parse::parse;
pub use write::serialize;

/// Tolerance on the squared norm of an `amps` source.
pub const SOURCE_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDoc {
    pub name: String,
    pub apparatus: Apparatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based character column of the offending token.
    pub column: usize,
    pub message: String,
    pub snippet: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "line {}, column {}: {}", self.line, self.column, self.message)?;
        writeln!(f, "  {}", self.snippet)?;
        write!(f, "  {}^", " ".repeat(self.column.saturating_sub(1)))
    }
}
