//! Import maintenance: add what after-templates and target types need, drop the source
//! type's import once nothing names it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::jparse::{tokenize, Edit, ImportTable, NodeKind, Span, TokenKind};
use crate::refgraph::SourceFile;
use crate::template::Template;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ImportAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportEdit {
    pub edit: Edit,
    pub action: ImportAction,
    pub imports: Vec<String>,
}

/// Qualified names of capitalized identifiers the after-template introduces that the
/// file cannot name yet.
pub(crate) fn introduced_types(before: &Template, after: &Template, imports: &ImportTable, out: &mut BTreeSet<String>) {
    let existing: BTreeSet<&str> = before.tokens().iter().map(|t| t.text.as_str()).collect();
    let toks = after.tokens();
    for (i, t) in toks.iter().enumerate() {
        let capital = t.text.starts_with(|c: char| c.is_ascii_uppercase());
        let member = i > 0 && toks[i - 1].is(".");
        if t.kind != TokenKind::Identifier || !capital || member || existing.contains(t.text.as_str()) {
            continue;
        }
        let q = imports.qualify(&t.text);
        if q != t.text && !imports.is_visible(&q) && !imports.simple_name_clashes(&q) {
            out.insert(q);
        }
    }
}

fn line_start(src: &str, at: usize) -> usize {
    src[..at].rfind('\n').map_or(0, |i| i + 1)
}

fn next_line_start(src: &str, at: usize) -> usize {
    src[at..].find('\n').map_or(src.len(), |i| at + i + 1)
}

/// Whether `simple` still appears as an identifier outside import declarations.
fn still_named(text: &str, simple: &str) -> bool {
    let Ok(tokens) = tokenize(text) else { return true };
    let mut in_import = false;
    for t in &tokens {
        if t.is("import") {
            in_import = true;
        } else if in_import && t.is(";") {
            in_import = false;
        } else if !in_import && t.kind == TokenKind::Identifier && t.text == simple {
            return true;
        }
    }
    false
}

pub(crate) fn import_edits(file: &SourceFile, add: &BTreeSet<String>, source_type: &str, after: &str) -> Vec<ImportEdit> {
    let src = &file.parsed.source;
    let ast = &file.parsed.ast;
    let mut imports = Vec::new();
    let mut package = None;
    for &c in ast.children(ast.root) {
        match ast.kind(c) {
            NodeKind::Import { path, is_static, wildcard } => imports.push((path.clone(), *is_static, *wildcard, ast.span(c))),
            NodeKind::Package(_) => package = Some(ast.span(c)),
            _ => {}
        }
    }
    let mut out = Vec::new();

    if !add.is_empty() {
        let mut at_point: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let sorted: Vec<&(String, bool, bool, Span)> = imports.iter().filter(|i| !i.1).collect();
        for q in add {
            let point = if let Some(next) = sorted.iter().find(|i| i.0.as_str() > q.as_str()) {
                line_start(src, next.3.start)
            } else if let Some(last) = sorted.last().or(imports.last().as_ref()) {
                next_line_start(src, last.3.end)
            } else if let Some(pkg) = package {
                pkg.end
            } else {
                0
            };
            at_point.entry(point).or_default().push(q.clone());
        }
        for (point, names) in at_point {
            let lines: Vec<String> = names.iter().map(|q| format!("import {q};")).collect();
            let text = if imports.is_empty() {
                match package {
                    Some(_) => format!("\n\n{}", lines.join("\n")),
                    None => format!("{}\n\n", lines.join("\n")),
                }
            } else if point == src.len() && !src.ends_with('\n') {
                format!("\n{}", lines.join("\n"))
            } else {
                lines.iter().map(|l| format!("{l}\n")).collect()
            };
            out.push(ImportEdit { edit: Edit::new(file.path.clone(), Span::new(point, point), text), action: ImportAction::Add, imports: names });
        }
    }

    let simple = source_type.rsplit('.').next().unwrap_or(source_type);
    if let Some(imp) = imports.iter().find(|i| i.0 == source_type && !i.1 && !i.2) {
        if !still_named(after, simple) {
            let span = Span::new(line_start(src, imp.3.start), next_line_start(src, imp.3.end));
            out.push(ImportEdit {
                edit: Edit::new(file.path.clone(), span, ""),
                action: ImportAction::Remove,
                imports: vec![source_type.to_string()],
            });
        }
    }
    out
}
