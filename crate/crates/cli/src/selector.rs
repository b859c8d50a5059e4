//! Root-element selectors: `file:line:col` and `file#Class.member[.var]`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use retype_core::jparse::{offset_of, NodeId, NodeKind};
use retype_core::modes::name_offset;
use retype_core::refgraph::{NodeRef, Project, RootElement};

/// Resolve a selector against a loaded project. Paths are relative to the project root.
pub fn resolve_root(project: &Project, selector: &str) -> Result<RootElement> {
    if let Some((file, member)) = selector.split_once('#') {
        let fid = file_id(project, file)?;
        return by_member(project, fid, member).map_err(|e| anyhow!("{selector}: {e}"));
    }
    let mut parts = selector.rsplitn(3, ':');
    let (col, line, file) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(l), Some(f)) => (c, l, f),
        _ => bail!("invalid root selector `{selector}`: expected file:line:col or file#Class.member"),
    };
    let (Ok(line), Ok(col)) = (line.parse::<usize>(), col.parse::<usize>()) else {
        bail!("invalid root selector `{selector}`: line and column must be numbers");
    };
    let fid = file_id(project, file)?;
    let source = &project.file(fid).parsed.source;
    let offset = offset_of(source, line, col).ok_or_else(|| anyhow!("{selector}: position is outside the file"))?;
    by_position(project, fid, offset).ok_or_else(|| anyhow!("{selector}: no declaration or reference at this position"))
}

fn file_id(project: &Project, file: &str) -> Result<usize> {
    let path = PathBuf::from(file);
    let rel = path.strip_prefix(project.root()).unwrap_or(&path);
    let rel = rel.strip_prefix(".").unwrap_or(rel);
    if let Some(id) = project.file_id(rel) {
        return Ok(id);
    }
    if let Some((_, e)) = project.skipped().iter().find(|(p, _)| p == rel) {
        bail!("{file} does not parse: {e}");
    }
    bail!("{file} is not a Java file of project {}", project.root().display())
}

fn elements_in(project: &Project, fid: usize) -> Vec<RootElement> {
    let ast = &project.file(fid).parsed.ast;
    ast.descendants(ast.root).into_iter().filter_map(|n| project.element(NodeRef::new(fid, n))).collect()
}

fn by_position(project: &Project, fid: usize, offset: usize) -> Option<RootElement> {
    let elements = elements_in(project, fid);
    if let Some(e) = elements.iter().find(|e| {
        let start = name_offset(project, e);
        (start..start + e.name.len()).contains(&offset)
    }) {
        return Some(e.clone());
    }

    // A reference to an element: the innermost name under the position.
    let ast = &project.file(fid).parsed.ast;
    let reference = ast
        .descendants(ast.root)
        .into_iter()
        .filter(|&n| matches!(ast.kind(n), NodeKind::NameRef(_) | NodeKind::FieldAccess { .. } | NodeKind::MethodCall { .. }))
        .filter(|&n| {
            let s = ast.span(n);
            s.start <= offset && offset < s.end
        })
        .min_by_key(|&n| ast.span(n).len());
    if let Some(e) = reference.and_then(|n| project.resolve(NodeRef::new(fid, n))).and_then(|d| project.element(d)) {
        return Some(e);
    }

    // The declared type of a declaration.
    elements
        .into_iter()
        .filter(|e| {
            ast.declared_type_node(e.decl.node).is_some_and(|t| {
                let s = ast.span(t);
                s.start <= offset && offset < s.end
            })
        })
        .min_by_key(|e| ast.span(e.decl.node).len())
}

fn by_member(project: &Project, fid: usize, member: &str) -> Result<RootElement> {
    let ast = &project.file(fid).parsed.ast;
    let segments: Vec<&str> = member.split('.').collect();
    if segments.len() < 2 || segments.iter().any(|s| s.is_empty()) {
        bail!("expected Class.member or Class.method.variable");
    }
    let named = |n: NodeId, name: &str| ast.decl_name(n) == Some(name);
    let mut current = ast
        .descendants(ast.root)
        .into_iter()
        .filter(|&n| matches!(ast.kind(n), NodeKind::ClassDecl { .. }) && ast.enclosing_class(n).is_none() && named(n, segments[0]))
        .collect::<Vec<_>>();
    let mut i = 1;
    while i < segments.len() {
        let [node] = current[..] else {
            return Err(if current.is_empty() {
                anyhow!("`{}` not found", segments[..i].join("."))
            } else {
                anyhow!("`{}` is ambiguous", segments[..i].join("."))
            });
        };
        let seg = segments[i];
        current = match ast.kind(node) {
            NodeKind::ClassDecl { .. } => {
                let mut found = Vec::new();
                for &c in ast.children(node) {
                    match ast.kind(c) {
                        NodeKind::FieldDecl => found.extend(ast.children(c).iter().copied().filter(|&d| named(d, seg))),
                        NodeKind::MethodDecl { is_constructor: false, .. } | NodeKind::ClassDecl { .. } if named(c, seg) => found.push(c),
                        _ => {}
                    }
                }
                found
            }
            NodeKind::MethodDecl { .. } => ast
                .descendants(node)
                .into_iter()
                .filter(|&d| matches!(ast.kind(d), NodeKind::Param { .. } | NodeKind::Declarator { .. }) && named(d, seg))
                .filter(|&d| ast.enclosing_method(d) == Some(node) || ast.parent(d) == Some(node))
                .collect(),
            _ => bail!("`{}` has no members", segments[..i].join(".")),
        };
        i += 1;
    }
    match current[..] {
        [node] => project
            .element(NodeRef::new(fid, node))
            .ok_or_else(|| anyhow!("`{member}` is not a typed variable, parameter, field or method")),
        [] => bail!("`{member}` not found"),
        _ => bail!("`{member}` is ambiguous; select it by file:line:col"),
    }
}

/// Path of `file` relative to `root` when it lies under it.
pub fn relative_to(root: &Path, file: &Path) -> PathBuf {
    if let (Ok(r), Ok(f)) = (root.canonicalize(), file.canonicalize()) {
        if let Ok(rel) = f.strip_prefix(&r) {
            return rel.to_path_buf();
        }
    }
    file.to_path_buf()
}
