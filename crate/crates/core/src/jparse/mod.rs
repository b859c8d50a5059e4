//! Lexing, parsing and byte-exact editing of the supported Java subset.

mod ast;
mod edit;
mod lexer;
mod parser;
mod types;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{Ast, Node, NodeId, NodeKind};
pub use edit::{apply_edits, Edit, EditError};
pub use lexer::{is_keyword, tokenize, tokenize_with, LexMode, Token, TokenKind};
pub(crate) use parser::binary_precedence;
pub use parser::{parse_compilation_unit, parse_expression, parse_type, ParsedFile};
pub use types::{builtin_qualified_name, ImportTable, TypeRef};

/// Half-open byte interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: Span) -> bool {
        if self.is_empty() || other.is_empty() {
            // An insertion conflicts only with a span that strictly surrounds it,
            // or with another insertion at the same point.
            let (point, span) = if self.is_empty() { (self.start, other) } else { (other.start, *self) };
            return if span.is_empty() { span.start == point } else { span.start < point && point < span.end };
        }
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// 1-based line and column (column counted in characters).
pub fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[line_start..].chars().count() + 1)
}

/// Inverse of [`line_col`]; `None` when the position is past the end of its line.
pub fn offset_of(source: &str, line: usize, col: usize) -> Option<usize> {
    let line_start = if line == 1 {
        0
    } else {
        source.match_indices('\n').nth(line.checked_sub(2)?).map(|(i, _)| i + 1)?
    };
    let line_text = source[line_start..].split('\n').next().unwrap_or("");
    let mut chars = line_text.char_indices();
    match chars.nth(col.checked_sub(1)?) {
        Some((i, _)) => Some(line_start + i),
        None if col - 1 == line_text.chars().count() => Some(line_start + line_text.len()),
        None => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at byte {offset}: {message}")]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

impl LexError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        Self { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("parse error at {line}:{column} (byte {offset}): found {found}, expected {}", expected.join(" | "))]
    Unexpected {
        offset: usize,
        line: usize,
        column: usize,
        found: String,
        expected: Vec<String>,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Lex(e) => e.offset,
            ParseError::Unexpected { offset, .. } => *offset,
        }
    }
}
