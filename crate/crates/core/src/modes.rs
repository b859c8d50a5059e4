//! Proactive front doors: inspection of discouraged declared types, and suggestions after
//! a manual type edit.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::render_type;
use crate::jparse::{line_col, NodeKind, Span};
use crate::refgraph::{ElementKind, NodeRef, Project, RootElement};
use crate::specmodel::{Catalog, Mode, TypeChangePattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub file: PathBuf,
    /// The flagged declaration's TypeRef.
    pub span: Span,
    pub line: usize,
    pub col: usize,
    pub pattern_id: u32,
    pub message: String,
    pub severity: Severity,
    pub element: String,
    pub declared: String,
    pub suggested: String,
    /// Declaration to migrate when the quick fix is taken.
    #[serde(skip)]
    pub root: NodeRef,
    /// `file:line:col` of the declared name, usable as a root selector.
    pub root_selector: String,
}

/// Every declaration whose type matches an Inspection-mode pattern, by file and offset;
/// several matching patterns yield one diagnostic each in priority order.
pub fn inspect(project: &Project, catalog: &Catalog) -> Vec<Diagnostic> {
    let mut patterns: Vec<&TypeChangePattern> = catalog.patterns_with_mode(Mode::Inspection).collect();
    patterns.sort_by_key(|p| (p.priority, p.id));
    let mut out: Vec<Diagnostic> = (0..project.files().len())
        .into_par_iter()
        .flat_map_iter(|fid| {
            let ast = &project.file(fid).parsed.ast;
            let mut found = Vec::new();
            for n in ast.descendants(ast.root) {
                let Some(e) = project.element(NodeRef::new(fid, n)) else { continue };
                for p in &patterns {
                    if let Some(d) = diagnostic(project, &e, p) {
                        found.push(d);
                    }
                }
            }
            found
        })
        .collect();
    let rank: HashMap<u32, usize> = patterns.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    out.sort_by(|a, b| (&a.file, a.span.start, a.root, rank[&a.pattern_id]).cmp(&(&b.file, b.span.start, b.root, rank[&b.pattern_id])));
    out
}

fn diagnostic(project: &Project, e: &RootElement, pattern: &TypeChangePattern) -> Option<Diagnostic> {
    let bindings = pattern.bind_from(&e.declared)?;
    let file = project.file(e.decl.file);
    let type_node = NodeRef::new(e.decl.file, file.parsed.ast.declared_type_node(e.decl.node)?);
    let span = project.span(type_node);
    let (line, col) = line_col(&file.parsed.source, span.start);
    let suggested = render_type(&pattern.to, &bindings, &file.parsed.imports, &mut BTreeSet::new());
    Some(Diagnostic {
        file: file.path.clone(),
        span,
        line,
        col,
        pattern_id: pattern.id,
        message: pattern.message().to_string(),
        severity: Severity::Warning,
        element: e.name.clone(),
        declared: project.text(type_node).to_string(),
        suggested,
        root: e.decl,
        root_selector: root_selector(project, e),
    })
}

/// Byte offset of the declared name of an element.
pub fn name_offset(project: &Project, e: &RootElement) -> usize {
    let file = project.file(e.decl.file);
    let toks = &file.parsed.tokens[file.parsed.ast.node(e.decl.node).tokens.clone()];
    let found = match file.parsed.ast.kind(e.decl.node) {
        NodeKind::Param { .. } => toks.iter().rev().find(|t| t.text == e.name),
        NodeKind::MethodDecl { .. } => toks.windows(2).find(|w| w[0].text == e.name && w[1].is("(")).map(|w| &w[0]),
        _ => None,
    };
    found.map_or(project.span(e.decl).start, |t| t.span.start)
}

/// `path:line:col` of an element's declared name.
pub fn root_selector(project: &Project, e: &RootElement) -> String {
    let file = project.file(e.decl.file);
    let (line, col) = line_col(&file.parsed.source, name_offset(project, e));
    format!("{}:{line}:{col}", file.path.display())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Suggestion {
    pub file: PathBuf,
    pub element: String,
    pub kind: ElementKind,
    pub container: String,
    pub pattern_id: u32,
    pub old_type: String,
    pub new_type: String,
    /// References to the element in the new version.
    pub remaining_usages: usize,
    pub line: usize,
    pub col: usize,
    pub root_selector: String,
}

/// Declaration identity across versions: kind, name, and the enclosing class and method names.
fn identity(project: &Project, e: &RootElement) -> (ElementKind, String, String) {
    let ast = &project.file(e.decl.file).parsed.ast;
    let mut parts: Vec<&str> = ast
        .ancestors(e.decl.node)
        .filter(|&a| matches!(ast.kind(a), NodeKind::ClassDecl { .. } | NodeKind::MethodDecl { .. }) && a != e.decl.node)
        .filter_map(|a| ast.decl_name(a))
        .collect();
    parts.reverse();
    (e.kind, e.name.clone(), parts.join("."))
}

fn elements(project: &Project) -> Vec<RootElement> {
    if project.files().is_empty() {
        return Vec::new();
    }
    let ast = &project.file(0).parsed.ast;
    ast.descendants(ast.root).into_iter().filter_map(|n| project.element(NodeRef::new(0, n))).collect()
}

/// Suggestions for declarations whose type was changed by hand from a Suggested
/// Refactoring pattern's source type to its target type. Returns warnings instead of
/// suggestions when a version does not parse.
pub fn detect_manual_type_edit(path: &Path, old_source: &str, new_source: &str, catalog: &Catalog) -> (Vec<Suggestion>, Vec<String>) {
    let old = Project::from_sources(".", vec![(path.to_path_buf(), old_source.to_string())]);
    let new = Project::from_sources(".", vec![(path.to_path_buf(), new_source.to_string())]);
    let warnings: Vec<String> = old
        .skipped()
        .iter()
        .map(|(_, e)| format!("old version does not parse: {e}"))
        .chain(new.skipped().iter().map(|(_, e)| format!("new version does not parse: {e}")))
        .collect();
    if !warnings.is_empty() {
        return (Vec::new(), warnings);
    }
    let mut patterns: Vec<&TypeChangePattern> = catalog.patterns_with_mode(Mode::SuggestedRefactoring).collect();
    patterns.sort_by_key(|p| (p.priority, p.id));

    let mut before: HashMap<(ElementKind, String, String), RootElement> = HashMap::new();
    for e in elements(&old) {
        before.entry(identity(&old, &e)).or_insert(e);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in elements(&new) {
        let key = identity(&new, &e);
        if !seen.insert(key.clone()) {
            continue;
        }
        let Some(prev) = before.get(&key) else { continue };
        if prev.declared == e.declared {
            continue;
        }
        for p in &patterns {
            let (Some(from), Some(to)) = (p.bind_from(&prev.declared), p.bind_to(&e.declared)) else { continue };
            if from.iter().any(|(k, v)| to.get(k).is_some_and(|w| w != v)) {
                continue;
            }
            let (line, col) = line_col(new_source, name_offset(&new, &e));
            out.push(Suggestion {
                file: path.to_path_buf(),
                element: e.name.clone(),
                kind: e.kind,
                container: key.2.clone(),
                pattern_id: p.id,
                old_type: prev.declared.raw.clone(),
                new_type: e.declared.raw.clone(),
                remaining_usages: new.references_to(e.decl).len() + new.opaque_references_to(e.decl).len(),
                line,
                col,
                root_selector: root_selector(&new, &e),
            });
        }
    }
    (out, Vec::new())
}
