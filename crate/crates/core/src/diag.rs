//! Shared diagnostic type returned by parsers and validators.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// One finding against a source document or an in-memory model.
///
/// `line` is 1-based and present only when the finding maps back to a
/// source line; diagnostics raised against programmatically constructed
/// models carry no line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: Option<u32>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(line: impl Into<Option<u32>>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: line.into(),
            message: message.into(),
        }
    }

    pub fn warning(line: impl Into<Option<u32>>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            line: line.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} {} {}", self.severity, line, self.message),
            None => write!(f, "{} {}", self.severity, self.message),
        }
    }
}

/// True when at least one diagnostic in the slice is an error.
pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
