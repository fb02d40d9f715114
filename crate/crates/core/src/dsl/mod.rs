//! Textual declaration language for flow systems (`.fm` files).
//!
//! ```text
//! kind information
//! sphere source {
//!   scheme info: information { stages: create process release transfer }
//! }
//! flow source.info.create -> source.info.process
//! trigger source.info.transfer ~> source.signal.create
//! ```
//!
//! `#` starts a comment. `gateway` declares a trigger that marks use of a
//! flowthing; it takes `~>` (writing it with `->` yields a flow arc with the
//! gateway flag, which the validator rejects).

mod diagnostic;
mod format;
mod lexer;
mod parser;

use thiserror::Error;

pub use diagnostic::{Diagnostic, DiagnosticCode, Severity, SourceFile, Span};
pub use format::{format, serialize, FormatError, HEADER};
pub use lexer::{lex, Token, TokenKind};
pub use parser::{parse, Declaration, ParseOutput};

pub(crate) use format::quote;

use crate::model::{build_system, BuildError, SystemModel};

pub fn parse_source(src: &SourceFile) -> ParseOutput {
    parse(&src.text)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("{} parse error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Parse(Vec<Diagnostic>),
    #[error("{} model error(s)", .0.len())]
    Build(Vec<BuildError>),
}

/// Parses and builds in one step.
pub fn load(text: &str) -> Result<SystemModel, LoadError> {
    let parsed = parse(text);
    if parsed.has_errors() {
        return Err(LoadError::Parse(parsed.diagnostics));
    }
    build_system(parsed.decls()).map_err(LoadError::Build)
}
