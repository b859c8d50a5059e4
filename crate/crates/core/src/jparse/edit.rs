use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub file: PathBuf,
    pub span: Span,
    pub replacement: String,
}

impl Edit {
    pub fn new(file: impl Into<PathBuf>, span: Span, replacement: impl Into<String>) -> Self {
        Self { file: file.into(), span, replacement: replacement.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("overlapping edits at {first} and {second}")]
    Overlap { first: Span, second: Span },
    #[error("edit span {span} out of bounds for {len}-byte source")]
    Bounds { span: Span, len: usize },
}

/// Replace every edit span in `source`; bytes outside the spans are copied verbatim.
pub fn apply_edits(source: &str, edits: &[Edit]) -> Result<String, EditError> {
    let mut order: Vec<&Edit> = edits.iter().collect();
    for e in &order {
        let Span { start, end } = e.span;
        if start > end || end > source.len() || !source.is_char_boundary(start) || !source.is_char_boundary(end) {
            return Err(EditError::Bounds { span: e.span, len: source.len() });
        }
    }
    order.sort_by_key(|e| (e.span.start, e.span.end));
    for pair in order.windows(2) {
        if pair[0].span.overlaps(pair[1].span) {
            return Err(EditError::Overlap { first: pair[0].span, second: pair[1].span });
        }
    }
    // Sorting by (start, end) can place an insertion after a span that strictly contains it
    // without the two being adjacent, so check every pair that starts inside a previous span.
    for (i, a) in order.iter().enumerate() {
        for b in order[i + 1..].iter().take_while(|b| b.span.start < a.span.end.max(a.span.start + 1)) {
            if a.span.overlaps(b.span) {
                return Err(EditError::Overlap { first: a.span, second: b.span });
            }
        }
    }

    let grow: usize = order.iter().map(|e| e.replacement.len()).sum();
    let mut out = String::with_capacity(source.len() + grow);
    let mut cursor = 0;
    for e in order {
        out.push_str(&source[cursor..e.span.start]);
        out.push_str(&e.replacement);
        cursor = e.span.end;
    }
    out.push_str(&source[cursor..]);
    Ok(out)
}
