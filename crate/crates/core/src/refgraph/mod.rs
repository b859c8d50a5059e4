//! Reference graph: root elements, their usages, and type-change propagation.

mod project;

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::jparse::{NodeKind, Span, TypeRef};

pub use project::{FileId, NodeRef, OpaqueRef, Project, Resolution, SourceFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ElementKind {
    LocalVar,
    Parameter,
    Field,
    MethodReturn,
}

/// A declaration whose type can be changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootElement {
    pub kind: ElementKind,
    pub name: String,
    pub decl: NodeRef,
    pub declared: TypeRef,
    pub method: Option<NodeRef>,
    pub class: Option<NodeRef>,
}

impl Project {
    /// The element declared at `decl`; `None` for untyped lambda parameters, constructors,
    /// `void` methods and non-declarations.
    pub fn element(&self, decl: NodeRef) -> Option<RootElement> {
        let ast = &self.file(decl.file).parsed.ast;
        let kind = match ast.kind(decl.node) {
            NodeKind::Declarator { .. } => match ast.parent(decl.node).map(|p| ast.kind(p)) {
                Some(NodeKind::FieldDecl) => ElementKind::Field,
                Some(NodeKind::LocalVarDecl) => ElementKind::LocalVar,
                _ => return None,
            },
            NodeKind::Param { .. } => match ast.parent(decl.node).map(|p| ast.kind(p)) {
                Some(NodeKind::MethodDecl { .. }) => ElementKind::Parameter,
                _ => return None,
            },
            NodeKind::MethodDecl { is_constructor: false, .. } => ElementKind::MethodReturn,
            _ => return None,
        };
        let declared = ast.declared_type(decl.node)?.clone();
        if declared.qualified == "void" && declared.dims == 0 {
            return None;
        }
        let method = match kind {
            ElementKind::Field => None,
            _ => ast.enclosing_method(decl.node).map(|m| NodeRef::new(decl.file, m)),
        };
        Some(RootElement {
            kind,
            name: ast.decl_name(decl.node)?.to_string(),
            decl,
            declared,
            method,
            class: ast.enclosing_class(decl.node).map(|c| NodeRef::new(decl.file, c)),
        })
    }

    /// The declaration an expression denotes when it is a plain reference, looking through parentheses.
    pub fn referenced_decl(&self, expr: NodeRef) -> Option<NodeRef> {
        let expr = self.unparen(expr);
        match self.kind(expr) {
            NodeKind::NameRef(_) | NodeKind::FieldAccess { .. } | NodeKind::MethodCall { .. } => self.resolve(expr),
            _ => None,
        }
    }

    pub fn unparen(&self, mut expr: NodeRef) -> NodeRef {
        while matches!(self.kind(expr), NodeKind::Paren) {
            expr = NodeRef::new(expr.file, self.file(expr.file).parsed.ast.children(expr.node)[0]);
        }
        expr
    }

    fn children_of(&self, n: NodeRef) -> Vec<NodeRef> {
        self.file(n.file).parsed.ast.children(n.node).iter().map(|&c| NodeRef::new(n.file, c)).collect()
    }
}

/// One occurrence of an element in the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Usage {
    pub element: NodeRef,
    /// The referencing node; for opaque occurrences, the opaque node.
    pub site: NodeRef,
    pub span: Span,
    pub parent: Option<NodeRef>,
    pub method: Option<NodeRef>,
    pub opaque: bool,
}

impl Usage {
    pub fn at(project: &Project, element: NodeRef, site: NodeRef) -> Self {
        let ast = &project.file(site.file).parsed.ast;
        Usage {
            element,
            site,
            span: ast.span(site.node),
            parent: project.parent(site),
            method: ast.enclosing_method(site.node).map(|m| NodeRef::new(site.file, m)),
            opaque: false,
        }
    }

    fn opaque(project: &Project, r: &OpaqueRef) -> Self {
        Usage { span: r.span, opaque: true, ..Usage::at(project, r.decl, r.opaque) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ScopeKind {
    Local,
    File,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Scope {
    pub kind: ScopeKind,
    /// Enclosing method for `Local`, any node of the file for `File`.
    pub anchor: Option<NodeRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("local scope needs a local variable or parameter, found a {0:?}")]
    NotLocal(ElementKind),
}

impl Scope {
    pub const PROJECT: Scope = Scope { kind: ScopeKind::Project, anchor: None };

    pub fn for_root(kind: ScopeKind, root: &RootElement) -> Result<Self, ScopeError> {
        let anchor = match kind {
            ScopeKind::Local => match (root.kind, root.method) {
                (ElementKind::LocalVar | ElementKind::Parameter, Some(m)) => Some(m),
                _ => return Err(ScopeError::NotLocal(root.kind)),
            },
            ScopeKind::File => Some(root.decl),
            ScopeKind::Project => None,
        };
        Ok(Scope { kind, anchor })
    }

    pub fn contains(&self, project: &Project, n: NodeRef) -> bool {
        match (self.kind, self.anchor) {
            (ScopeKind::Project, _) | (_, None) => true,
            (ScopeKind::File, Some(a)) => a.file == n.file,
            (ScopeKind::Local, Some(a)) => {
                a.file == n.file && project.file(n.file).parsed.ast.is_ancestor_or_self(a.node, n.node)
            }
        }
    }
}

/// Usages of `root` inside `scope`, ordered by file and offset.
pub fn find_references(project: &Project, root: &RootElement, scope: &Scope) -> Vec<Usage> {
    all_references(project, root.decl).into_iter().filter(|u| scope.contains(project, u.site)).collect()
}

/// Usages of `root` that `scope` excludes.
pub fn references_outside(project: &Project, root: &RootElement, scope: &Scope) -> Vec<Usage> {
    all_references(project, root.decl).into_iter().filter(|u| !scope.contains(project, u.site)).collect()
}

fn all_references(project: &Project, decl: NodeRef) -> Vec<Usage> {
    let mut out: Vec<Usage> = project.references_to(decl).iter().map(|&s| Usage::at(project, decl, s)).collect();
    out.extend(project.opaque_references_to(decl).iter().map(|r| Usage::opaque(project, r)));
    out.sort_by_key(|u| (u.site.file, u.span.start, u.span.end));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeReason {
    Assignment,
    ArgumentPassing,
    ReturnFlow,
    FieldAccess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Link {
    Decl(NodeRef),
    /// The value reaches one of several overloads' parameters.
    Ambiguous(Vec<NodeRef>),
}

/// A value flow between a reference and another declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub target: Link,
    pub reason: EdgeReason,
    /// The expression on the other side of the flow (or the reference itself).
    pub witness: NodeRef,
}

/// Where the value at a reference site flows to or comes from.
pub fn usage_connection(project: &Project, site: NodeRef) -> Option<Connection> {
    let mut cur = site;
    let mut ctx = project.parent(cur)?;
    while matches!(project.kind(ctx), NodeKind::Paren) {
        cur = ctx;
        ctx = project.parent(cur)?;
    }
    let field_side = |n: NodeRef| matches!(project.kind(project.unparen(n)), NodeKind::FieldAccess { .. });
    match project.kind(ctx) {
        NodeKind::Declarator { .. } => Some(Connection {
            target: Link::Decl(ctx),
            reason: if field_side(site) { EdgeReason::FieldAccess } else { EdgeReason::Assignment },
            witness: site,
        }),
        NodeKind::Assignment(op) if op == "=" => {
            let ch = project.children_of(ctx);
            let other = if ch[1] == cur { ch[0] } else { ch[1] };
            let target = project.referenced_decl(other)?;
            let reason = if field_side(other) || field_side(site) { EdgeReason::FieldAccess } else { EdgeReason::Assignment };
            Some(Connection { target: Link::Decl(target), reason, witness: other })
        }
        NodeKind::MethodCall { .. } | NodeKind::New => {
            let ast = &project.file(ctx.file).parsed.ast;
            let index = ast.call_args(ctx.node).iter().position(|&a| a == cur.node)?;
            let param_of = |m: NodeRef| {
                project.file(m.file).parsed.ast.params(m.node).get(index).map(|&p| NodeRef::new(m.file, p))
            };
            let target = match project.resolution(ctx)? {
                Resolution::Decl(m) => Link::Decl(param_of(*m)?),
                Resolution::Ambiguous(ms) => Link::Ambiguous(ms.iter().filter_map(|&m| param_of(m)).collect()),
            };
            Some(Connection { target, reason: EdgeReason::ArgumentPassing, witness: ctx })
        }
        NodeKind::Return => {
            let method = returning_method(project, ctx)?;
            Some(Connection { target: Link::Decl(method), reason: EdgeReason::ReturnFlow, witness: ctx })
        }
        _ => None,
    }
}

/// The method a `return` statement belongs to, unless it sits inside a lambda.
fn returning_method(project: &Project, ret: NodeRef) -> Option<NodeRef> {
    let ast = &project.file(ret.file).parsed.ast;
    for a in ast.ancestors(ret.node) {
        match ast.kind(a) {
            NodeKind::Lambda => return None,
            NodeKind::MethodDecl { .. } => return Some(NodeRef::new(ret.file, a)),
            _ => {}
        }
    }
    None
}

/// An expression whose value flows into an element: an initializer, a returned value
/// or a call-site argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inflow {
    pub element: NodeRef,
    pub expr: NodeRef,
    pub reason: EdgeReason,
    /// The declaration the expression plainly refers to, if any.
    pub source: Option<NodeRef>,
}

pub fn inflows(project: &Project, element: &RootElement) -> Vec<Inflow> {
    let decl = element.decl;
    let ast = &project.file(decl.file).parsed.ast;
    let mut out = Vec::new();
    let mut push = |expr: NodeRef, reason: EdgeReason, plain: bool| {
        let source = if plain { project.referenced_decl(expr) } else { None };
        out.push(Inflow { element: decl, expr, reason, source });
    };
    if matches!(element.kind, ElementKind::LocalVar | ElementKind::Field) {
        {
            if let Some(&init) = ast.children(decl.node).first() {
                let init = NodeRef::new(decl.file, init);
                let reason = if matches!(project.kind(project.unparen(init)), NodeKind::FieldAccess { .. }) {
                    EdgeReason::FieldAccess
                } else {
                    EdgeReason::Assignment
                };
                push(init, reason, true);
            } else if let Some(stmt) = ast.parent(decl.node) {
                // Enhanced-for variables take their values from the iterable.
                if let Some(f) = ast.parent(stmt).filter(|&f| matches!(ast.kind(f), NodeKind::For { enhanced: true })) {
                    if ast.children(f)[0] == stmt {
                        push(NodeRef::new(decl.file, ast.children(f)[1]), EdgeReason::Assignment, false);
                    }
                }
            }
        }
    }
    // Values assigned to the element after its declaration.
    for &site in project.references_to(decl) {
        let mut cur = site;
        let Some(mut ctx) = project.parent(cur) else { continue };
        while matches!(project.kind(ctx), NodeKind::Paren) {
            cur = ctx;
            match project.parent(cur) {
                Some(p) => ctx = p,
                None => break,
            }
        }
        let ch = project.children_of(ctx);
        if matches!(project.kind(ctx), NodeKind::Assignment(op) if op == "=") && ch[0] == cur {
            let reason = if matches!(project.kind(site), NodeKind::FieldAccess { .. }) {
                EdgeReason::FieldAccess
            } else {
                EdgeReason::Assignment
            };
            push(ch[1], reason, true);
        }
    }
    match element.kind {
        ElementKind::Parameter => {
            let Some(method) = element.method else { return out };
            let index = ast.params(method.node).iter().position(|&p| p == decl.node);
            for &call in project.references_to(method) {
                let cast = &project.file(call.file).parsed.ast;
                if let Some(&arg) = index.and_then(|i| cast.call_args(call.node).get(i)) {
                    push(NodeRef::new(call.file, arg), EdgeReason::ArgumentPassing, true);
                }
            }
        }
        ElementKind::MethodReturn => {
            for n in ast.descendants(decl.node) {
                let n = NodeRef::new(decl.file, n);
                if matches!(project.kind(n), NodeKind::Return) && returning_method(project, n) == Some(decl) {
                    if let Some(&e) = ast.children(n.node).first() {
                        push(NodeRef::new(decl.file, e), EdgeReason::ReturnFlow, true);
                    }
                }
            }
        }
        ElementKind::LocalVar | ElementKind::Field => {}
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropagationEdge {
    pub from: NodeRef,
    pub to: NodeRef,
    pub reason: EdgeReason,
    pub witness: NodeRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockReason {
    OutOfScope,
    Ambiguous,
}

/// A flow to a same-typed declaration that could not be followed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Blocked {
    pub from: NodeRef,
    pub site: NodeRef,
    pub targets: Vec<NodeRef>,
    pub reason: BlockReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propagation {
    /// Root first, then elements in discovery order.
    pub elements: Vec<RootElement>,
    pub edges: Vec<PropagationEdge>,
    pub blocked: Vec<Blocked>,
}

impl Propagation {
    pub fn contains(&self, decl: NodeRef) -> bool {
        self.elements.iter().any(|e| e.decl == decl)
    }
}

/// Transitive closure of declarations connected to `root` by value flow whose declared
/// type equals `migrating` (normally the root's own type). A connection made through a reference that some rewrite rule
/// adapts (per `adapted`) is not followed.
pub fn propagate(
    project: &Project,
    root: &RootElement,
    scope: &Scope,
    migrating: &TypeRef,
    adapted: &dyn Fn(&Usage) -> bool,
) -> Propagation {
    let mut result = Propagation { elements: vec![root.clone()], edges: Vec::new(), blocked: Vec::new() };
    let mut seen: BTreeSet<NodeRef> = BTreeSet::from([root.decl]);
    let mut queue: VecDeque<RootElement> = VecDeque::from([root.clone()]);
    let same_type = |d: NodeRef| project.declared_type(d) == Some(migrating) && project.element(d).is_some();

    while let Some(elem) = queue.pop_front() {
        let mut found: Vec<(Link, EdgeReason, NodeRef, NodeRef)> = Vec::new();
        for u in find_references(project, &elem, scope) {
            if u.opaque || adapted(&u) {
                continue;
            }
            if let Some(c) = usage_connection(project, u.site) {
                found.push((c.target, c.reason, c.witness, u.site));
            }
        }
        for inflow in inflows(project, &elem) {
            let Some(src) = inflow.source else { continue };
            let expr = project.unparen(inflow.expr);
            if !scope.contains(project, expr) || adapted(&Usage::at(project, src, expr)) {
                continue;
            }
            found.push((Link::Decl(src), inflow.reason, expr, expr));
        }

        for (target, reason, witness, site) in found {
            match target {
                Link::Decl(d) => {
                    if !same_type(d) || seen.contains(&d) {
                        continue;
                    }
                    if !scope.contains(project, d) {
                        result.blocked.push(Blocked { from: elem.decl, site, targets: vec![d], reason: BlockReason::OutOfScope });
                        continue;
                    }
                    seen.insert(d);
                    result.edges.push(PropagationEdge { from: elem.decl, to: d, reason, witness });
                    let e = project.element(d).expect("same_type implies an element");
                    result.elements.push(e.clone());
                    queue.push_back(e);
                }
                Link::Ambiguous(ds) => {
                    let ds: Vec<NodeRef> = ds.into_iter().filter(|&d| same_type(d)).collect();
                    if !ds.is_empty() {
                        result.blocked.push(Blocked { from: elem.decl, site, targets: ds, reason: BlockReason::Ambiguous });
                    }
                }
            }
        }
    }
    result
}
