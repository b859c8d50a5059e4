//! Before/after expression templates with numbered `$n$` holes.
//!
//! Hole 1 only ever binds a reference to the element being migrated; every
//! other hole binds an arbitrary expression that does not mention it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::jparse::{parse_expression, Ast, LexMode, NodeId, NodeKind, ParseError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("invalid template `{text}`: {message}")]
    Invalid { text: String, message: String },
    #[error("no binding for hole ${0}$")]
    MissingBinding(u32),
    #[error("after-template uses hole ${0}$ which the before-template does not define")]
    OrphanHole(u32),
}

#[derive(Clone)]
pub struct Template {
    text: String,
    tokens: Vec<Token>,
    ast: Ast,
    holes: BTreeSet<u32>,
}

impl fmt::Debug for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Template").field(&self.text).finish()
    }
}

impl PartialEq for Template {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Template {}

impl Template {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let (tokens, ast) = parse_expression(text, LexMode::Template).map_err(|e| TemplateError::Invalid {
            text: text.to_string(),
            message: match e {
                ParseError::Lex(l) => l.message,
                other => other.to_string(),
            },
        })?;
        let holes = tokens
            .iter()
            .filter_map(|t| match t.kind {
                TokenKind::Hole(n) => Some(n),
                _ => None,
            })
            .collect();
        Ok(Self { text: text.to_string(), tokens, ast, holes })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn holes(&self) -> &BTreeSet<u32> {
        &self.holes
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Number of tokens that are not holes; the specificity score of a rule.
    pub fn concrete_token_count(&self) -> usize {
        self.tokens.iter().filter(|t| !matches!(t.kind, TokenKind::Hole(_))).count()
    }
}

/// Every hole of `after` must be bound by `before`.
pub fn check_rule(before: &Template, after: &Template) -> Result<(), TemplateError> {
    match after.holes.difference(&before.holes).next() {
        Some(&n) => Err(TemplateError::OrphanHole(n)),
        None => Ok(()),
    }
}

/// A parsed file viewed as a match target.
#[derive(Clone, Copy)]
pub struct MatchTarget<'a> {
    pub ast: &'a Ast,
    pub tokens: &'a [Token],
    pub source: &'a str,
}

impl<'a> MatchTarget<'a> {
    pub fn text(&self, id: NodeId) -> &'a str {
        let s = self.ast.span(id);
        &self.source[s.start..s.end]
    }

    pub fn token_texts(&self, id: NodeId) -> Vec<&'a str> {
        self.ast.token_texts(id, self.tokens)
    }
}

/// Decides which target nodes refer to the element being migrated.
pub trait RootTest {
    fn is_root_reference(&self, node: NodeId) -> bool;

    /// Whether the subtree at `node` mentions the root anywhere.
    fn touches_root(&self, ast: &Ast, node: NodeId) -> bool {
        ast.descendants(node).into_iter().any(|n| self.is_root_reference(n))
    }
}

impl<F: Fn(NodeId) -> bool> RootTest for F {
    fn is_root_reference(&self, node: NodeId) -> bool {
        self(node)
    }
}

/// Hole number to bound target node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(pub BTreeMap<u32, NodeId>);

impl Bindings {
    pub fn get(&self, hole: u32) -> Option<NodeId> {
        self.0.get(&hole).copied()
    }
}

/// Structural match of `template` against the target subtree at `node`.
pub fn match_template(template: &Template, target: MatchTarget<'_>, node: NodeId, root: &dyn RootTest) -> Option<Bindings> {
    if !target.ast.kind(node).is_expression() {
        return None;
    }
    let mut bindings = Bindings::default();
    Matcher { template, target, root }.go(template.ast.root, node, &mut bindings).then_some(bindings)
}

struct Matcher<'a, 'r> {
    template: &'a Template,
    target: MatchTarget<'a>,
    root: &'r dyn RootTest,
}

impl Matcher<'_, '_> {
    fn go(&self, pat: NodeId, node: NodeId, bindings: &mut Bindings) -> bool {
        let pkind = self.template.ast.kind(pat);
        let tkind = self.target.ast.kind(node);
        match pkind {
            NodeKind::Hole(1) => self.root.is_root_reference(node) && self.bind(1, node, bindings),
            NodeKind::Hole(n) => {
                tkind.is_expression() && !self.root.touches_root(self.target.ast, node) && self.bind(*n, node, bindings)
            }
            NodeKind::TypeRef(_) => {
                matches!(tkind, NodeKind::TypeRef(_))
                    && self.template.ast.token_texts(pat, &self.template.tokens) == self.target.token_texts(node)
            }
            _ => {
                if pkind != tkind {
                    return false;
                }
                let pc = self.template.ast.children(pat);
                let tc = self.target.ast.children(node);
                pc.len() == tc.len() && pc.iter().zip(tc).all(|(&p, &t)| self.go(p, t, bindings))
            }
        }
    }

    fn bind(&self, hole: u32, node: NodeId, bindings: &mut Bindings) -> bool {
        match bindings.0.get(&hole) {
            Some(&prev) => prev == node || self.target.token_texts(prev) == self.target.token_texts(node),
            None => {
                bindings.0.insert(hole, node);
                true
            }
        }
    }
}

/// Render `after` with every hole replaced by the source text of its binding.
///
/// A bound expression that binds more loosely than its position in `after`
/// requires is parenthesized.
pub fn substitute(after: &Template, bindings: &Bindings, target: MatchTarget<'_>) -> Result<String, TemplateError> {
    substitute_with(after, bindings, target, &|n| target.text(n).to_string())
}

/// [`substitute`] with the text for each bound node supplied by `hole_text`, which lets
/// callers splice already-rewritten subexpressions into the holes.
pub fn substitute_with(
    after: &Template,
    bindings: &Bindings,
    target: MatchTarget<'_>,
    hole_text: &dyn Fn(NodeId) -> String,
) -> Result<String, TemplateError> {
    let mut holes: Vec<NodeId> = after
        .ast
        .descendants(after.ast.root)
        .into_iter()
        .filter(|&n| matches!(after.ast.kind(n), NodeKind::Hole(_)))
        .collect();
    holes.sort_by_key(|&n| after.ast.span(n).start);

    let mut out = String::with_capacity(after.text.len());
    let mut cursor = 0;
    for h in holes {
        let NodeKind::Hole(n) = *after.ast.kind(h) else { unreachable!() };
        let bound = bindings.get(n).ok_or(TemplateError::MissingBinding(n))?;
        let span = after.ast.span(h);
        out.push_str(&after.text[cursor..span.start]);
        let text = hole_text(bound);
        if precedence(target.ast, bound) < required_precedence(&after.ast, h) {
            out.push('(');
            out.push_str(&text);
            out.push(')');
        } else {
            out.push_str(&text);
        }
        cursor = span.end;
    }
    out.push_str(&after.text[cursor..]);
    Ok(out)
}

/// Precedence of the expression produced by [`substitute`].
pub fn result_precedence(after: &Template, bindings: &Bindings, target: MatchTarget<'_>) -> u8 {
    match after.ast.kind(after.ast.root) {
        NodeKind::Hole(n) => bindings.get(*n).map_or(PRIMARY, |b| precedence(target.ast, b)),
        _ => precedence(&after.ast, after.ast.root),
    }
}

pub const PRIMARY: u8 = 15;

/// How tightly an expression binds: 0 for lambdas up to [`PRIMARY`].
pub fn precedence(ast: &Ast, node: NodeId) -> u8 {
    match ast.kind(node) {
        NodeKind::Lambda => 0,
        NodeKind::Assignment(_) => 1,
        NodeKind::Conditional => 2,
        NodeKind::Binary(op) => crate::jparse::binary_precedence(op).unwrap_or(PRIMARY),
        NodeKind::InstanceOf => 9,
        NodeKind::Unary { prefix: true, .. } | NodeKind::Cast => 13,
        NodeKind::Unary { prefix: false, .. } => 14,
        _ => PRIMARY,
    }
}

/// The minimum precedence an expression needs to sit at `node`'s position unparenthesized.
pub fn required_precedence(ast: &Ast, node: NodeId) -> u8 {
    let Some(parent) = ast.parent(node) else { return 0 };
    let first = ast.children(parent).first() == Some(&node);
    match ast.kind(parent) {
        NodeKind::MethodCall { has_receiver: true, .. } if first => PRIMARY,
        NodeKind::FieldAccess { .. } => PRIMARY,
        NodeKind::ArrayAccess if first => PRIMARY,
        NodeKind::Unary { prefix: true, .. } | NodeKind::Cast => 13,
        NodeKind::Unary { prefix: false, .. } => 14,
        NodeKind::Binary(op) => {
            let p = crate::jparse::binary_precedence(op).unwrap_or(PRIMARY);
            if first {
                p
            } else {
                p + 1
            }
        }
        NodeKind::InstanceOf => 9,
        NodeKind::Conditional => match ast.children(parent).iter().position(|&c| c == node) {
            Some(0) => 3,
            Some(1) => 0,
            _ => 2,
        },
        NodeKind::Assignment(_) if first => PRIMARY,
        _ => 0,
    }
}
