use std::fmt;

use serde::Serialize;

/// Byte range into the source text, `start <= end <= len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DiagnosticCode {
    UnexpectedToken,
    UnterminatedBlock,
    UnknownKeyword,
    UnknownStageName,
    UnterminatedString,
    InvalidEscape,
    InvalidCharacter,
    InvalidInteger,
    DuplicateStage,
    ArrowMismatch,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::UnexpectedToken => "UnexpectedToken",
            DiagnosticCode::UnterminatedBlock => "UnterminatedBlock",
            DiagnosticCode::UnknownKeyword => "UnknownKeyword",
            DiagnosticCode::UnknownStageName => "UnknownStageName",
            DiagnosticCode::UnterminatedString => "UnterminatedString",
            DiagnosticCode::InvalidEscape => "InvalidEscape",
            DiagnosticCode::InvalidCharacter => "InvalidCharacter",
            DiagnosticCode::InvalidInteger => "InvalidInteger",
            DiagnosticCode::DuplicateStage => "DuplicateStage",
            DiagnosticCode::ArrowMismatch => "ArrowMismatch",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, message: impl Into<String>, span: Span) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn warning(code: DiagnosticCode, message: impl Into<String>, span: Span) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Source text plus an optional path, with line lookup for diagnostics.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: Option<String>,
    pub text: String,
    line_starts: Vec<usize>,
}

impl SourceFile {
    pub fn new(path: Option<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let line_starts = std::iter::once(0)
            .chain(text.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        Self {
            path,
            text,
            line_starts,
        }
    }

    pub fn anonymous(text: impl Into<String>) -> Self {
        Self::new(None, text)
    }

    /// 1-based line and column (in characters) of a byte offset.
    pub fn line_col(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        let line = self.line_starts.partition_point(|&s| s <= offset) - 1;
        let start = self.line_starts[line];
        let col = self
            .text
            .get(start..offset)
            .map(|s| s.chars().count())
            .unwrap_or(offset - start);
        (line + 1, col + 1)
    }

    pub fn render(&self, diag: &Diagnostic) -> String {
        let (line, col) = self.line_col(diag.span.start);
        let sev = match diag.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{}:{line}:{col}: {sev}[{}]: {}",
            self.path.as_deref().unwrap_or("<input>"),
            diag.code,
            diag.message
        )
    }
}
