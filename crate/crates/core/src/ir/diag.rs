use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    SyntaxError,
    UnresolvedReference,
    UseBeforeDef,
    MissingLabel,
    DuplicateLabel,
    ArityMismatch,
    DuplicateThis,
    BadParamIndex,
    DuplicateParamIndex,
    FrameworkOverlap,
    InvalidName,
    DuplicateMethod,
}

/// Where a diagnostic points: a source position for syntax errors, or a
/// class/method/statement coordinate for semantic ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Locus {
    pub line: Option<usize>,
    pub col: Option<usize>,
    pub class: Option<String>,
    pub method: Option<String>,
    pub stmt: Option<usize>,
}

impl Locus {
    pub fn at(line: usize, col: usize) -> Self {
        Self { line: Some(line), col: Some(col), ..Default::default() }
    }

    pub fn stmt(class: &str, method: &str, stmt: usize) -> Self {
        Self {
            class: Some(class.to_string()),
            method: Some(method.to_string()),
            stmt: Some(stmt),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub locus: Locus,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>, locus: Locus) -> Self {
        Self { kind, message: message.into(), locus }
    }

    pub fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self::new(DiagnosticKind::SyntaxError, message, Locus::at(line, col))
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.locus;
        if let (Some(line), Some(col)) = (l.line, l.col) {
            write!(f, "{line}:{col}: ")?;
        }
        if let Some(m) = &l.method {
            write!(f, "{m}")?;
            if let Some(s) = l.stmt {
                write!(f, " stmt {s}")?;
            }
            write!(f, ": ")?;
        } else if let Some(c) = &l.class {
            write!(f, "class {c}: ")?;
        }
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}
