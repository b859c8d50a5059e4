use std::ops::Range;

use serde::Serialize;

use super::{Span, Token, TypeRef};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    CompilationUnit,
    Package(String),
    Import { path: String, is_static: bool, wildcard: bool },
    ClassDecl { name: String, is_interface: bool },
    /// Children: `TypeRef`, then one `Declarator` per declared name.
    FieldDecl,
    /// Children: return `TypeRef` (absent for constructors), `Param`s, then an optional `Block`.
    MethodDecl { name: String, is_constructor: bool },
    /// Children: `TypeRef` (absent for untyped lambda parameters).
    Param { name: String },
    /// Children: `TypeRef`, then `Declarator`s.
    LocalVarDecl,
    /// Children: optional initializer expression.
    Declarator { name: String },
    Block,
    ExprStmt,
    If,
    While,
    /// Classic: init statements, condition, updates, body (each slot possibly `Empty`).
    /// Enhanced: `LocalVarDecl`, iterable expression, body.
    For { enhanced: bool },
    Return,
    /// Anything outside the subset: kept as a token range, scanned but never matched.
    Opaque,
    /// Placeholder for an omitted slot (e.g. a missing `for` condition).
    Empty,
    /// Children: receiver (when `has_receiver`), then arguments.
    MethodCall { name: String, has_receiver: bool },
    FieldAccess { name: String },
    NameRef(String),
    This,
    /// Children: `TypeRef`, then arguments.
    New,
    Binary(String),
    Unary { op: String, prefix: bool },
    Literal(String),
    /// Children: `Param`s, then the body (expression or `Block`).
    Lambda,
    /// Children: `TypeRef`, operand.
    Cast,
    Assignment(String),
    Paren,
    Conditional,
    ArrayAccess,
    /// Children: operand, `TypeRef`.
    InstanceOf,
    TypeRef(TypeRef),
    Hole(u32),
}

impl NodeKind {
    pub fn is_expression(&self) -> bool {
        matches!(
            self,
            NodeKind::MethodCall { .. }
                | NodeKind::FieldAccess { .. }
                | NodeKind::NameRef(_)
                | NodeKind::This
                | NodeKind::New
                | NodeKind::Binary(_)
                | NodeKind::Unary { .. }
                | NodeKind::Literal(_)
                | NodeKind::Lambda
                | NodeKind::Cast
                | NodeKind::Assignment(_)
                | NodeKind::Paren
                | NodeKind::Conditional
                | NodeKind::ArrayAccess
                | NodeKind::InstanceOf
                | NodeKind::Hole(_)
        )
    }

    pub fn is_statement(&self) -> bool {
        matches!(
            self,
            NodeKind::Block
                | NodeKind::ExprStmt
                | NodeKind::If
                | NodeKind::While
                | NodeKind::For { .. }
                | NodeKind::Return
                | NodeKind::LocalVarDecl
                | NodeKind::Opaque
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
    /// Index range into the owning file's token list.
    pub tokens: Range<usize>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// Arena of nodes; `NodeId`s are indices, unique within one tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Ast {
    pub nodes: Vec<Node>,
    pub root: NodeId,
}

impl Ast {
    pub(crate) fn push(&mut self, kind: NodeKind, span: Span, tokens: Range<usize>, children: Vec<NodeId>) -> NodeId {
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(Node { kind, span, tokens, children, parent: None });
        id
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn kind(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id].kind
    }

    pub fn span(&self, id: NodeId) -> Span {
        self.nodes[id].span
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), |&n| self.parent(n))
    }

    /// Pre-order walk of the subtree rooted at `id`.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    pub fn is_ancestor_or_self(&self, ancestor: NodeId, id: NodeId) -> bool {
        id == ancestor || self.ancestors(id).any(|a| a == ancestor)
    }

    pub fn enclosing_method(&self, id: NodeId) -> Option<NodeId> {
        std::iter::once(id).chain(self.ancestors(id)).find(|&n| matches!(self.kind(n), NodeKind::MethodDecl { .. }))
    }

    pub fn enclosing_class(&self, id: NodeId) -> Option<NodeId> {
        self.ancestors(id).find(|&n| matches!(self.kind(n), NodeKind::ClassDecl { .. }))
    }

    pub fn type_ref(&self, id: NodeId) -> Option<&TypeRef> {
        match self.kind(id) {
            NodeKind::TypeRef(t) => Some(t),
            _ => None,
        }
    }

    /// The `TypeRef` child of a declaration-like node (field, local, param, method, cast, new).
    pub fn type_child(&self, id: NodeId) -> Option<NodeId> {
        self.children(id).iter().copied().find(|&c| matches!(self.kind(c), NodeKind::TypeRef(_)))
    }

    /// Declared type of a `Declarator`, `Param` or `MethodDecl` (return type).
    pub fn declared_type_node(&self, decl: NodeId) -> Option<NodeId> {
        match self.kind(decl) {
            NodeKind::Declarator { .. } => self.parent(decl).and_then(|p| self.type_child(p)),
            NodeKind::Param { .. } | NodeKind::MethodDecl { .. } => self.type_child(decl),
            _ => None,
        }
    }

    pub fn declared_type(&self, decl: NodeId) -> Option<&TypeRef> {
        self.declared_type_node(decl).and_then(|t| self.type_ref(t))
    }

    pub fn decl_name(&self, decl: NodeId) -> Option<&str> {
        match self.kind(decl) {
            NodeKind::Declarator { name } | NodeKind::Param { name } | NodeKind::MethodDecl { name, .. } => Some(name),
            NodeKind::ClassDecl { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn params(&self, method: NodeId) -> Vec<NodeId> {
        self.children(method).iter().copied().filter(|&c| matches!(self.kind(c), NodeKind::Param { .. })).collect()
    }

    pub fn body(&self, method: NodeId) -> Option<NodeId> {
        self.children(method).iter().copied().find(|&c| matches!(self.kind(c), NodeKind::Block))
    }

    /// Arguments of a `MethodCall` or `New` node.
    pub fn call_args(&self, call: NodeId) -> &[NodeId] {
        let ch = self.children(call);
        match self.kind(call) {
            NodeKind::MethodCall { has_receiver: true, .. } | NodeKind::New => &ch[1.min(ch.len())..],
            NodeKind::MethodCall { .. } => ch,
            _ => &[],
        }
    }

    pub fn receiver(&self, id: NodeId) -> Option<NodeId> {
        match self.kind(id) {
            NodeKind::MethodCall { has_receiver: true, .. } | NodeKind::FieldAccess { .. } => self.children(id).first().copied(),
            _ => None,
        }
    }

    /// Token texts of a node, ignoring the bytes between tokens.
    pub fn token_texts<'t>(&self, id: NodeId, tokens: &'t [Token]) -> Vec<&'t str> {
        tokens[self.nodes[id].tokens.clone()].iter().map(|t| t.text.as_str()).collect()
    }
}
