//! Project snapshot: parsed files plus name and member resolution indexes.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::jparse::{parse_compilation_unit, NodeId, NodeKind, ParseError, ParsedFile, Span, TokenKind, TypeRef};

pub type FileId = usize;

/// A node in a specific file of the project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeRef {
    pub file: FileId,
    pub node: NodeId,
}

impl NodeRef {
    pub const fn new(file: FileId, node: NodeId) -> Self {
        Self { file, node }
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Path relative to the project root.
    pub path: PathBuf,
    pub parsed: ParsedFile,
}

/// Target of a name, field access, call or constructor invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Decl(NodeRef),
    /// Several overloads fit and argument types do not decide between them.
    Ambiguous(Vec<NodeRef>),
}

/// An identifier inside an opaque node that resolves to a declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpaqueRef {
    pub opaque: NodeRef,
    pub span: Span,
    pub decl: NodeRef,
}

#[derive(Debug)]
pub struct Project {
    root: PathBuf,
    files: Vec<SourceFile>,
    skipped: Vec<(PathBuf, ParseError)>,
    classes: HashMap<String, NodeRef>,
    resolution: HashMap<NodeRef, Resolution>,
    references: HashMap<NodeRef, Vec<NodeRef>>,
    opaque_refs: HashMap<NodeRef, Vec<OpaqueRef>>,
}

impl Project {
    /// Parse every `.java` file under `root`, skipping hidden directories and `target`.
    pub fn load(root: &Path) -> io::Result<Self> {
        let mut sources = Vec::new();
        let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
            let name = e.file_name().to_string_lossy();
            e.depth() == 0 || !(name.starts_with('.') || (e.file_type().is_dir() && name == "target"))
        });
        for entry in walker {
            let entry = entry.map_err(io::Error::other)?;
            if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "java") {
                let rel = entry.path().strip_prefix(root).unwrap_or(entry.path()).to_path_buf();
                sources.push((rel, fs::read_to_string(entry.path())?));
            }
        }
        Ok(Self::from_sources(root, sources))
    }

    /// Build a project from in-memory sources; `root` is where edits would be written.
    pub fn from_sources(root: impl Into<PathBuf>, sources: Vec<(PathBuf, String)>) -> Self {
        let parsed: Vec<(PathBuf, Result<ParsedFile, ParseError>)> =
            sources.into_par_iter().map(|(path, text)| { let r = parse_compilation_unit(&text); (path, r) }).collect();
        let mut files = Vec::new();
        let mut skipped = Vec::new();
        for (path, r) in parsed {
            match r {
                Ok(parsed) => files.push(SourceFile { path, parsed }),
                Err(e) => skipped.push((path, e)),
            }
        }
        files.sort_by(|a, b| a.path.cmp(&b.path));

        // Same-package types are visible without imports.
        let mut by_package: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for f in &files {
            by_package.entry(f.parsed.package().unwrap_or_default().to_string()).or_default().extend(f.parsed.declared_types());
        }
        files.par_iter_mut().for_each(|f| {
            let pkg = f.parsed.package().unwrap_or_default().to_string();
            f.parsed.add_package_types(&by_package[&pkg]);
        });

        let mut classes = HashMap::new();
        for (fid, f) in files.iter().enumerate() {
            let ast = &f.parsed.ast;
            for &c in ast.children(ast.root) {
                if let NodeKind::ClassDecl { name, .. } = ast.kind(c) {
                    let q = f.parsed.package().map_or_else(|| name.clone(), |p| format!("{p}.{name}"));
                    classes.entry(q).or_insert(NodeRef::new(fid, c));
                }
            }
        }

        let mut project = Self {
            root: root.into(),
            files,
            skipped,
            classes,
            resolution: HashMap::new(),
            references: HashMap::new(),
            opaque_refs: HashMap::new(),
        };
        project.index();
        project
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }

    pub fn file(&self, id: FileId) -> &SourceFile {
        &self.files[id]
    }

    pub fn file_id(&self, path: &Path) -> Option<FileId> {
        self.files.iter().position(|f| f.path == path)
    }

    pub fn skipped(&self) -> &[(PathBuf, ParseError)] {
        &self.skipped
    }

    pub fn kind(&self, n: NodeRef) -> &NodeKind {
        self.files[n.file].parsed.ast.kind(n.node)
    }

    pub fn span(&self, n: NodeRef) -> Span {
        self.files[n.file].parsed.ast.span(n.node)
    }

    pub fn text(&self, n: NodeRef) -> &str {
        self.files[n.file].parsed.text(n.node)
    }

    pub fn parent(&self, n: NodeRef) -> Option<NodeRef> {
        self.files[n.file].parsed.ast.parent(n.node).map(|p| NodeRef::new(n.file, p))
    }

    pub fn class(&self, qualified: &str) -> Option<NodeRef> {
        self.classes.get(qualified).copied()
    }

    pub fn resolution(&self, n: NodeRef) -> Option<&Resolution> {
        self.resolution.get(&n)
    }

    /// Declaration a name, field access, call or `new` refers to, if unambiguous.
    pub fn resolve(&self, n: NodeRef) -> Option<NodeRef> {
        match self.resolution.get(&n) {
            Some(Resolution::Decl(d)) => Some(*d),
            _ => None,
        }
    }

    /// Sites resolving to `decl`, in file then offset order.
    pub fn references_to(&self, decl: NodeRef) -> &[NodeRef] {
        self.references.get(&decl).map_or(&[], Vec::as_slice)
    }

    pub fn opaque_references_to(&self, decl: NodeRef) -> &[OpaqueRef] {
        self.opaque_refs.get(&decl).map_or(&[], Vec::as_slice)
    }

    /// Declared type of a declarator, parameter or method (return type).
    pub fn declared_type(&self, decl: NodeRef) -> Option<&TypeRef> {
        self.files[decl.file].parsed.ast.declared_type(decl.node)
    }

    pub fn qualified_class_name(&self, class: NodeRef) -> Option<String> {
        let name = self.files[class.file].parsed.ast.decl_name(class.node)?;
        Some(match self.files[class.file].parsed.package() {
            Some(p) => format!("{p}.{name}"),
            None => name.to_string(),
        })
    }

    /// Static type of an expression when it can be read off declarations.
    pub fn expr_type(&self, n: NodeRef) -> Option<TypeRef> {
        let ast = &self.files[n.file].parsed.ast;
        match ast.kind(n.node) {
            NodeKind::NameRef(_) | NodeKind::FieldAccess { .. } | NodeKind::MethodCall { .. } => {
                self.resolve(n).and_then(|d| self.declared_type(d)).cloned()
            }
            NodeKind::This => {
                let class = ast.enclosing_class(n.node)?;
                self.qualified_class_name(NodeRef::new(n.file, class)).map(|q| TypeRef::simple(&q))
            }
            NodeKind::New | NodeKind::Cast => ast.type_child(n.node).and_then(|t| ast.type_ref(t)).cloned(),
            NodeKind::Paren => self.expr_type(NodeRef::new(n.file, ast.children(n.node)[0])),
            NodeKind::Literal(text) => literal_type(text),
            _ => None,
        }
    }

    // ----- indexing ----------------------------------------------------------

    fn index(&mut self) {
        let lexical: Vec<(HashMap<NodeId, NodeId>, Vec<(NodeId, Span, NodeId)>)> =
            self.files.par_iter().map(|f| lexical_pass(&f.parsed)).collect();
        for (fid, (names, opaque)) in lexical.into_iter().enumerate() {
            for (site, decl) in names {
                self.resolution.insert(NodeRef::new(fid, site), Resolution::Decl(NodeRef::new(fid, decl)));
            }
            for (node, span, decl) in opaque {
                let decl = NodeRef::new(fid, decl);
                self.opaque_refs.entry(decl).or_default().push(OpaqueRef { opaque: NodeRef::new(fid, node), span, decl });
            }
        }

        // Member resolution depends on receiver types, which may themselves be member
        // accesses; resolve in pre-order so receivers are always done first.
        for fid in 0..self.files.len() {
            let ast = &self.files[fid].parsed.ast;
            let mut members: Vec<NodeId> = ast
                .descendants(ast.root)
                .into_iter()
                .filter(|&n| matches!(ast.kind(n), NodeKind::FieldAccess { .. } | NodeKind::MethodCall { .. } | NodeKind::New))
                .collect();
            // Arena ids are post-order (children are pushed before parents).
            members.sort_unstable();
            for n in members {
                let r = self.resolve_member(NodeRef::new(fid, n));
                if let Some(r) = r {
                    self.resolution.insert(NodeRef::new(fid, n), r);
                }
            }
        }

        for (&site, res) in &self.resolution {
            if let Resolution::Decl(d) = res {
                self.references.entry(*d).or_default().push(site);
            }
        }
        let spans: HashMap<NodeRef, usize> =
            self.references.values().flatten().map(|&s| (s, self.span(s).start)).collect();
        for sites in self.references.values_mut() {
            sites.sort_by_key(|s| (s.file, spans[s], s.node));
        }
        for refs in self.opaque_refs.values_mut() {
            refs.sort_by_key(|r| (r.opaque.file, r.span.start));
        }
    }

    /// Class a receiver expression denotes, either through its static type or as a type name.
    fn receiver_class(&self, recv: NodeRef) -> Option<NodeRef> {
        let f = &self.files[recv.file].parsed;
        if let NodeKind::NameRef(name) = f.ast.kind(recv.node) {
            if self.resolve(recv).is_none() {
                return self.class(&f.imports.qualify(name));
            }
        }
        let t = self.expr_type(recv)?;
        if t.dims > 0 {
            return None;
        }
        self.class(&t.qualified)
    }

    fn resolve_member(&self, n: NodeRef) -> Option<Resolution> {
        let ast = &self.files[n.file].parsed.ast;
        match ast.kind(n.node) {
            NodeKind::FieldAccess { name } => {
                let class = self.receiver_class(NodeRef::new(n.file, ast.children(n.node)[0]))?;
                self.field_of(class, name).map(Resolution::Decl)
            }
            NodeKind::MethodCall { name, has_receiver } => {
                let class = if *has_receiver {
                    self.receiver_class(NodeRef::new(n.file, ast.children(n.node)[0]))?
                } else {
                    NodeRef::new(n.file, ast.enclosing_class(n.node)?)
                };
                let candidates = self.methods_of(class, |m| matches!(m, NodeKind::MethodDecl { name: mn, is_constructor: false } if mn == name));
                self.pick_overload(n, candidates)
            }
            NodeKind::New => {
                let ty = ast.type_ref(ast.type_child(n.node)?)?;
                let class = self.class(&ty.qualified)?;
                let candidates = self.methods_of(class, |m| matches!(m, NodeKind::MethodDecl { is_constructor: true, .. }));
                self.pick_overload(n, candidates)
            }
            _ => None,
        }
    }

    fn field_of(&self, class: NodeRef, name: &str) -> Option<NodeRef> {
        let ast = &self.files[class.file].parsed.ast;
        ast.children(class.node)
            .iter()
            .filter(|&&m| matches!(ast.kind(m), NodeKind::FieldDecl))
            .flat_map(|&m| ast.children(m).iter().copied())
            .find(|&d| matches!(ast.kind(d), NodeKind::Declarator { name: dn } if dn == name))
            .map(|d| NodeRef::new(class.file, d))
    }

    fn methods_of(&self, class: NodeRef, pred: impl Fn(&NodeKind) -> bool) -> Vec<NodeRef> {
        let ast = &self.files[class.file].parsed.ast;
        ast.children(class.node).iter().filter(|&&m| pred(ast.kind(m))).map(|&m| NodeRef::new(class.file, m)).collect()
    }

    /// Overloads are chosen by arity, then by exact declared type of arguments whose type is known.
    fn pick_overload(&self, call: NodeRef, candidates: Vec<NodeRef>) -> Option<Resolution> {
        let args: Vec<NodeRef> =
            self.files[call.file].parsed.ast.call_args(call.node).iter().map(|&a| NodeRef::new(call.file, a)).collect();
        let by_arity: Vec<NodeRef> = candidates
            .into_iter()
            .filter(|&m| self.files[m.file].parsed.ast.params(m.node).len() == args.len())
            .collect();
        if by_arity.len() <= 1 {
            return by_arity.first().map(|&m| Resolution::Decl(m));
        }
        let arg_types: Vec<Option<TypeRef>> = args.iter().map(|&a| self.expr_type(a)).collect();
        let fitting: Vec<NodeRef> = by_arity
            .iter()
            .copied()
            .filter(|&m| {
                let ast = &self.files[m.file].parsed.ast;
                ast.params(m.node).iter().zip(&arg_types).all(|(&p, at)| match (ast.declared_type(p), at) {
                    (Some(pt), Some(at)) => pt == at,
                    _ => true,
                })
            })
            .collect();
        match fitting.as_slice() {
            [one] => Some(Resolution::Decl(*one)),
            [] => None,
            _ => Some(Resolution::Ambiguous(fitting)),
        }
    }
}

fn literal_type(text: &str) -> Option<TypeRef> {
    let q = if text.starts_with('"') {
        "java.lang.String"
    } else if text.starts_with('\'') {
        "char"
    } else if text == "true" || text == "false" {
        "boolean"
    } else if text == "null" {
        return None;
    } else if text.ends_with(['l', 'L']) && !text.starts_with("0x") {
        "long"
    } else if text.contains(['.', 'e', 'E']) && !text.starts_with("0x") || text.ends_with(['d', 'D', 'f', 'F']) && !text.starts_with("0x") {
        if text.ends_with(['f', 'F']) { "float" } else { "double" }
    } else {
        "int"
    };
    Some(TypeRef::simple(q))
}

/// Lexical scoping: locals and parameters shadow fields of the enclosing class.
/// Returns resolved name sites and opaque-identifier references.
fn lexical_pass(file: &ParsedFile) -> (HashMap<NodeId, NodeId>, Vec<(NodeId, Span, NodeId)>) {
    let mut walker = Lexical { file, frames: Vec::new(), fields: Vec::new(), names: HashMap::new(), opaque: Vec::new() };
    walker.walk(file.ast.root);
    (walker.names, walker.opaque)
}

struct Lexical<'a> {
    file: &'a ParsedFile,
    frames: Vec<Vec<(String, NodeId)>>,
    /// Field frames of the enclosing classes, innermost last.
    fields: Vec<Vec<(String, NodeId)>>,
    names: HashMap<NodeId, NodeId>,
    opaque: Vec<(NodeId, Span, NodeId)>,
}

impl Lexical<'_> {
    fn lookup(&self, name: &str) -> Option<NodeId> {
        self.frames.iter().rev().flat_map(|f| f.iter().rev()).find(|(n, _)| n == name).map(|&(_, d)| d)
    }

    fn lookup_field(&self, name: &str) -> Option<NodeId> {
        self.fields.last()?.iter().find(|(n, _)| n == name).map(|&(_, d)| d)
    }

    fn declare(&mut self, decl: NodeId) {
        if let Some(name) = self.file.ast.decl_name(decl) {
            let name = name.to_string();
            if let Some(frame) = self.frames.last_mut() {
                frame.push((name, decl));
            }
        }
    }

    fn declare_declarators(&mut self, decl_stmt: NodeId) {
        let ast = &self.file.ast;
        for &d in ast.children(decl_stmt) {
            if matches!(ast.kind(d), NodeKind::Declarator { .. }) {
                for &init in ast.children(d) {
                    self.walk(init);
                }
                self.declare(d);
            }
        }
    }

    fn walk(&mut self, id: NodeId) {
        let ast = &self.file.ast;
        match ast.kind(id) {
            NodeKind::ClassDecl { .. } => {
                let fields: Vec<(String, NodeId)> = ast
                    .children(id)
                    .iter()
                    .filter(|&&m| matches!(ast.kind(m), NodeKind::FieldDecl))
                    .flat_map(|&m| ast.children(m).iter().copied())
                    .filter_map(|d| match ast.kind(d) {
                        NodeKind::Declarator { name } => Some((name.clone(), d)),
                        _ => None,
                    })
                    .collect();
                self.fields.push(fields.clone());
                self.frames.push(fields);
                for &c in ast.children(id) {
                    self.walk(c);
                }
                self.frames.pop();
                self.fields.pop();
            }
            NodeKind::FieldDecl => {
                for &d in ast.children(id) {
                    for &init in ast.children(d) {
                        self.walk(init);
                    }
                }
            }
            NodeKind::MethodDecl { .. } | NodeKind::Lambda => {
                self.frames.push(Vec::new());
                for &c in ast.children(id) {
                    if matches!(ast.kind(c), NodeKind::Param { .. }) {
                        self.declare(c);
                    } else {
                        self.walk(c);
                    }
                }
                self.frames.pop();
            }
            NodeKind::Block => {
                self.frames.push(Vec::new());
                for &c in ast.children(id) {
                    self.walk(c);
                }
                self.frames.pop();
            }
            NodeKind::LocalVarDecl => self.declare_declarators(id),
            NodeKind::For { enhanced } => {
                self.frames.push(Vec::new());
                let ch = ast.children(id);
                if *enhanced {
                    self.walk(ch[1]);
                    self.declare_declarators(ch[0]);
                    self.walk(ch[2]);
                } else {
                    for &c in ch {
                        self.walk(c);
                    }
                }
                self.frames.pop();
            }
            NodeKind::NameRef(name) => {
                if let Some(d) = self.lookup(name) {
                    self.names.insert(id, d);
                }
            }
            NodeKind::FieldAccess { name } => {
                let recv = ast.children(id)[0];
                if matches!(ast.kind(recv), NodeKind::This) {
                    if let Some(d) = self.lookup_field(name) {
                        self.names.insert(id, d);
                    }
                } else {
                    self.walk(recv);
                }
            }
            NodeKind::Opaque => self.scan_opaque(id),
            _ => {
                for &c in ast.children(id) {
                    self.walk(c);
                }
            }
        }
    }

    /// Identifiers in an opaque span that name a visible variable. Member names after `.`
    /// and method names before `(` are skipped, except `this.name`.
    fn scan_opaque(&mut self, id: NodeId) {
        let toks = &self.file.tokens;
        let range = self.file.ast.node(id).tokens.clone();
        for i in range.clone() {
            let t = &toks[i];
            if t.kind != TokenKind::Identifier {
                continue;
            }
            let prev = i.checked_sub(1).filter(|p| *p >= range.start).map(|p| &toks[p]);
            let next = toks.get(i + 1);
            if next.is_some_and(|n| n.is("(")) {
                continue;
            }
            let decl = if prev.is_some_and(|p| p.is(".")) {
                let this_dot = i >= range.start + 2 && toks[i - 2].is("this");
                if !this_dot {
                    continue;
                }
                self.lookup_field(&t.text)
            } else {
                self.lookup(&t.text)
            };
            if let Some(d) = decl {
                self.opaque.push((id, t.span, d));
            }
        }
    }
}
