//! Chain program languages.
//!
//! Two small line-oriented languages describe the logic of the redundant
//! chains:
//!
//! * `.rung` files hold relay-ladder programs (Chain B): `input`, `coil`,
//!   `timer` and `rung` lines, evaluated top to bottom every scan.
//! * `.state` files hold state-logic programs (Chain A): `task` blocks made of
//!   `state` blocks with `emit`, `when … goto` and `timeout … goto` lines.
//!
//! Both share the boolean expression syntax (`AND`, `OR`, `NOT`, parentheses),
//! `#` comments, lowercase keywords and uppercase point names. The full
//! grammar lives in `docs/chain-dsl.md`.

mod expr;
mod lex;
pub mod lint;
pub mod rung;
pub mod state;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use expr::Expr;
pub use lint::{lint_program, ProgramRef};
pub use rung::{parse_rung_program, Rung, RungProgram, TimerDecl};
pub use state::{parse_state_program, State, StateProgram, StateTask, Transition, TransitionGuard};

/// Longest permitted point name.
pub const MAX_NAME_LEN: usize = 64;

const RESERVED: [&str; 3] = ["AND", "OR", "NOT"];

/// Name of an I/O point, coil, timer, task or state.
///
/// Uppercase letters, digits and underscore, 1 to 64 characters. The
/// expression operators `AND`, `OR` and `NOT` are reserved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PointName(String);

impl PointName {
    pub fn new(name: impl Into<String>) -> Result<Self, InvalidName> {
        let name = name.into();
        if Self::is_valid(&name) {
            Ok(PointName(name))
        } else {
            Err(InvalidName(name))
        }
    }

    pub fn is_valid(name: &str) -> bool {
        !name.is_empty()
            && name.len() <= MAX_NAME_LEN
            && name
                .bytes()
                .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
            && !RESERVED.contains(&name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for PointName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PointName {
    type Error = InvalidName;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        PointName::new(value)
    }
}

impl From<PointName> for String {
    fn from(value: PointName) -> Self {
        value.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid point name {0:?}")]
pub struct InvalidName(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A located message produced by parsing or linting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based source line; 0 when the finding is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn error(line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line,
            message: message.into(),
        }
    }

    pub fn warning(line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            line,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: line {}: {}", sev, self.line, self.message)
    }
}

/// A non-empty list of diagnostics that prevented a program from loading.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn iter(&self) -> std::slice::Iter<'_, Diagnostic> {
        self.0.iter()
    }

    pub fn has_errors(&self) -> bool {
        self.0.iter().any(Diagnostic::is_error)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Splits source into logical lines, dropping comments and the CR of CRLF
/// endings. Yields `(line_number, content)`.
pub(crate) fn source_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n').enumerate().map(|(i, raw)| {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        (i + 1, content.trim())
    })
}

/// Number of lines `source_lines` reports, i.e. the largest valid line number.
pub(crate) fn line_count(text: &str) -> usize {
    text.split('\n').count().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_name_grammar() {
        assert!(PointName::new("DOOR_CLOSED_1").is_ok());
        assert!(PointName::new("1A").is_ok());
        assert!(PointName::new("door").is_err());
        assert!(PointName::new("").is_err());
        assert!(PointName::new("A-B").is_err());
        assert!(PointName::new("A".repeat(64)).is_ok());
        assert!(PointName::new("A".repeat(65)).is_err());
        assert!(PointName::new("AND").is_err());
    }

    #[test]
    fn comments_and_crlf_are_stripped() {
        let lines: Vec<_> = source_lines("input A # note\r\n\r\n# only\n").collect();
        assert_eq!(lines, vec![(1, "input A"), (2, ""), (3, ""), (4, "")]);
    }
}
