use std::fmt;

use thiserror::Error;

/// Error classes of the scenario language.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownDirective,
    UndeclaredSystem,
    NonUnitary,
    NonHermitian,
    Unnormalized,
    TimeOrdering,
    Syntax,
    Invalid,
}

impl ParseErrorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParseErrorKind::UnknownDirective => "unknown-directive",
            ParseErrorKind::UndeclaredSystem => "undeclared-system",
            ParseErrorKind::NonUnitary => "non-unitary",
            ParseErrorKind::NonHermitian => "non-hermitian",
            ParseErrorKind::Unnormalized => "unnormalized",
            ParseErrorKind::TimeOrdering => "time-ordering",
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::Invalid => "invalid",
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A scenario error with a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub reason: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, kind: ParseErrorKind, reason: impl Into<String>) -> Self {
        Self { line, column, kind, reason: reason.into() }
    }
}
