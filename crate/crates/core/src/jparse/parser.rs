//! Recursive-descent parser with precedence climbing for expressions.
//!
//! Declarations are parsed strictly and report `ParseError`. Statements inside
//! method bodies that fall outside the subset are kept as `Opaque` nodes.

use super::ast::{Ast, NodeId, NodeKind};
use super::lexer::{tokenize_with, LexMode, Token, TokenKind};
use super::types::{is_primitive_name, ImportTable, TypeRef};
use super::{line_col, ParseError, Span};

#[derive(Debug, Clone)]
pub struct ParsedFile {
    pub source: String,
    pub tokens: Vec<Token>,
    pub ast: Ast,
    pub imports: ImportTable,
}

impl ParsedFile {
    pub fn package(&self) -> Option<&str> {
        self.imports.package.as_deref()
    }

    /// Top-level classes declared in this file as `(simple, qualified)` pairs.
    pub fn declared_types(&self) -> Vec<(String, String)> {
        self.ast
            .children(self.ast.root)
            .iter()
            .filter_map(|&c| match self.ast.kind(c) {
                NodeKind::ClassDecl { name, .. } => {
                    let q = match self.package() {
                        Some(p) => format!("{p}.{name}"),
                        None => name.clone(),
                    };
                    Some((name.clone(), q))
                }
                _ => None,
            })
            .collect()
    }

    /// Make additional same-package types visible and re-resolve every type reference.
    pub fn add_package_types(&mut self, types: &[(String, String)]) {
        for (simple, q) in types {
            self.imports.add_local_type(simple, q);
        }
        qualify_all(&mut self.ast, &self.imports);
    }

    pub fn text(&self, id: NodeId) -> &str {
        let s = self.ast.span(id);
        &self.source[s.start..s.end]
    }
}

pub fn parse_compilation_unit(source: &str) -> Result<ParsedFile, ParseError> {
    let tokens = tokenize_with(source, LexMode::Java)?;
    let mut p = Parser::new(source, &tokens);
    let (ast, mut imports) = p.compilation_unit()?;
    let mut ast = ast;
    let types: Vec<(String, String)> = ast
        .children(ast.root)
        .iter()
        .filter_map(|&c| match ast.kind(c) {
            NodeKind::ClassDecl { name, .. } => Some(name.clone()),
            _ => None,
        })
        .map(|n| {
            let q = imports.package.as_ref().map_or_else(|| n.clone(), |p| format!("{p}.{n}"));
            (n, q)
        })
        .collect();
    for (s, q) in &types {
        imports.add_local_type(s, q);
    }
    qualify_all(&mut ast, &imports);
    Ok(ParsedFile { source: source.to_string(), tokens, ast, imports })
}

/// Parse text that must consist of exactly one expression.
pub fn parse_expression(source: &str, mode: LexMode) -> Result<(Vec<Token>, Ast), ParseError> {
    let tokens = tokenize_with(source, mode)?;
    let mut p = Parser::new(source, &tokens);
    if tokens.is_empty() {
        return Err(p.error(&["expression"]));
    }
    let root = p.expression()?;
    if p.pos < tokens.len() {
        return Err(p.error(&["end of input"]));
    }
    let mut ast = p.ast;
    ast.root = root;
    qualify_all(&mut ast, &ImportTable::default());
    Ok((tokens, ast))
}

/// Parse a type as written (e.g. in a catalog), qualifying simple names via the built-in table.
pub fn parse_type(source: &str) -> Result<TypeRef, ParseError> {
    let tokens = tokenize_with(source, LexMode::Java)?;
    let mut p = Parser::new(source, &tokens);
    let id = p.type_ref()?;
    if p.pos < tokens.len() {
        return Err(p.error(&["end of input"]));
    }
    let mut t = p.ast.type_ref(id).cloned().expect("type_ref builds a TypeRef node");
    qualify(&mut t, &ImportTable::default());
    Ok(t)
}

fn qualify(t: &mut TypeRef, imports: &ImportTable) {
    // `written` is kept in `qualified` until this pass runs.
    t.qualified = imports.qualify(&t.qualified);
    for a in &mut t.args {
        qualify(a, imports);
    }
}

fn qualify_all(ast: &mut Ast, imports: &ImportTable) {
    for node in &mut ast.nodes {
        if let NodeKind::TypeRef(t) = &mut node.kind {
            let written = written_name(&t.raw);
            t.qualified = written;
            for a in &mut t.args {
                reset_written(a);
            }
            qualify(t, imports);
        }
    }
}

fn reset_written(t: &mut TypeRef) {
    t.qualified = written_name(&t.raw);
    for a in &mut t.args {
        reset_written(a);
    }
}

/// The dotted name portion of a raw type: `java.util.List<String>[]` -> `java.util.List`.
fn written_name(raw: &str) -> String {
    let raw = raw.trim().trim_end_matches("...");
    if raw.starts_with('?') {
        return "?".to_string();
    }
    let end = raw.find(['<', '[']).unwrap_or(raw.len());
    raw[..end].chars().filter(|c| !c.is_whitespace()).collect()
}

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "strictfp", "default", "sealed",
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

/// Binding strength of binary operators; larger binds tighter.
pub(crate) fn binary_precedence(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 3,
        "&&" => 4,
        "|" => 5,
        "^" => 6,
        "&" => 7,
        "==" | "!=" => 8,
        "<" | ">" | "<=" | ">=" | "instanceof" => 9,
        "<<" | ">>" | ">>>" => 10,
        "+" | "-" => 11,
        "*" | "/" | "%" => 12,
        _ => return None,
    })
}

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    pos: usize,
    ast: Ast,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str, toks: &'a [Token]) -> Self {
        Self { src, toks, pos: 0, ast: Ast::default() }
    }

    // ----- token helpers -------------------------------------------------

    fn peek(&self, ahead: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + ahead)
    }

    fn at(&self, text: &str) -> bool {
        self.peek(0).is_some_and(|t| t.is(text))
    }

    fn at_ahead(&self, ahead: usize, text: &str) -> bool {
        self.peek(ahead).is_some_and(|t| t.is(text))
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.peek(0).is_some_and(|t| t.kind == kind)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.error(&[text]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek(0) {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (offset, found) = match self.peek(0) {
            Some(t) => (t.span.start, format!("`{}`", t.text)),
            None => (self.src.len(), "end of input".to_string()),
        };
        let (line, column) = line_col(self.src, offset);
        ParseError::Unexpected { offset, line, column, found, expected: expected.iter().map(|s| s.to_string()).collect() }
    }

    fn mark(&self) -> (usize, usize) {
        (self.pos, self.ast.nodes.len())
    }

    fn reset(&mut self, mark: (usize, usize)) {
        self.pos = mark.0;
        self.ast.nodes.truncate(mark.1);
    }

    fn finish(&mut self, kind: NodeKind, start_tok: usize, children: Vec<NodeId>) -> NodeId {
        let span = self.span_from(start_tok);
        self.ast.push(kind, span, start_tok..self.pos, children)
    }

    fn span_from(&self, start_tok: usize) -> Span {
        if self.pos == start_tok {
            let at = self.toks.get(start_tok).map_or(self.src.len(), |t| t.span.start);
            return Span::new(at, at);
        }
        Span::new(self.toks[start_tok].span.start, self.toks[self.pos - 1].span.end)
    }

    /// Two tokens with no bytes between them.
    fn adjacent(&self, ahead: usize) -> bool {
        match (self.peek(ahead), self.peek(ahead + 1)) {
            (Some(a), Some(b)) => a.span.end == b.span.start,
            _ => false,
        }
    }

    // ----- declarations ---------------------------------------------------

    fn compilation_unit(&mut self) -> PResult<(Ast, ImportTable)> {
        let start = self.pos;
        let mut children = Vec::new();
        let mut imports = ImportTable::default();

        let before_annotations = self.mark();
        self.skip_annotations()?;
        if self.at("package") {
            let s = self.pos;
            self.pos += 1;
            let name = self.qualified_name()?;
            self.expect(";")?;
            imports.package = Some(name.clone());
            children.push(self.finish(NodeKind::Package(name), s, vec![]));
        } else {
            self.reset(before_annotations);
        }

        while self.at("import") {
            let s = self.pos;
            self.pos += 1;
            let is_static = self.eat("static");
            let mut path = self.ident()?;
            let mut wildcard = false;
            while self.eat(".") {
                if self.eat("*") {
                    wildcard = true;
                    break;
                }
                path.push('.');
                path.push_str(&self.ident()?);
            }
            self.expect(";")?;
            if !is_static {
                imports.add_import(&path, wildcard);
            }
            children.push(self.finish(NodeKind::Import { path, is_static, wildcard }, s, vec![]));
        }

        while self.pos < self.toks.len() {
            if self.eat(";") {
                continue;
            }
            children.push(self.type_declaration()?);
        }
        let root = self.finish(NodeKind::CompilationUnit, start, children);
        // The unit spans the whole file, including leading and trailing trivia.
        self.ast.nodes[root].span = Span::new(0, self.src.len());
        self.ast.nodes[root].tokens = 0..self.toks.len();
        let mut ast = std::mem::take(&mut self.ast);
        ast.root = root;
        Ok((ast, imports))
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.at(".") && self.peek(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn skip_annotations(&mut self) -> PResult<()> {
        while self.at("@") && !self.at_ahead(1, "interface") {
            self.pos += 1;
            self.qualified_name()?;
            if self.at("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn modifiers(&mut self) -> PResult<()> {
        loop {
            if self.at("@") && !self.at_ahead(1, "interface") {
                self.skip_annotations()?;
            } else if self.peek(0).is_some_and(|t| MODIFIERS.contains(&t.text.as_str()) && t.kind != TokenKind::Literal)
                && !(self.at("default") && self.at_ahead(1, ":"))
            {
                self.pos += 1;
            } else {
                return Ok(());
            }
        }
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect(open)?;
        let mut depth = 1;
        while depth > 0 {
            match self.peek(0) {
                None => return Err(self.error(&[close])),
                Some(t) if t.is(open) => depth += 1,
                Some(t) if t.is(close) => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        Ok(())
    }

    fn type_declaration(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.modifiers()?;
        let is_interface = if self.eat("class") {
            false
        } else if self.eat("interface") {
            true
        } else if self.at("enum") || self.at("@") || self.peek(0).is_some_and(|t| t.text == "record") {
            // Outside the subset: keep the whole declaration as an opaque span.
            while !self.at("{") {
                if self.peek(0).is_none() {
                    return Err(self.error(&["{"]));
                }
                self.pos += 1;
            }
            self.skip_balanced("{", "}")?;
            return Ok(self.finish(NodeKind::Opaque, start, vec![]));
        } else {
            return Err(self.error(&["class", "interface", "enum"]));
        };
        let name = self.ident()?;
        let mut children = Vec::new();
        if self.at("<") {
            self.skip_balanced("<", ">")?;
        }
        if self.eat("extends") {
            children.push(self.type_ref()?);
            while self.eat(",") {
                children.push(self.type_ref()?);
            }
        }
        if self.eat("implements") {
            children.push(self.type_ref()?);
            while self.eat(",") {
                children.push(self.type_ref()?);
            }
        }
        if self.peek(0).is_some_and(|t| t.text == "permits") {
            self.pos += 1;
            self.type_ref()?;
            while self.eat(",") {
                self.type_ref()?;
            }
        }
        self.expect("{")?;
        while !self.at("}") {
            if self.peek(0).is_none() {
                return Err(self.error(&["}"]));
            }
            if self.eat(";") {
                continue;
            }
            children.extend(self.member(&name)?);
        }
        self.pos += 1;
        Ok(self.finish(NodeKind::ClassDecl { name, is_interface }, start, children))
    }

    fn member(&mut self, class_name: &str) -> PResult<Option<NodeId>> {
        let start = self.pos;
        self.modifiers()?;
        if self.at("class") || self.at("interface") || self.at("enum") || (self.at("@") && self.at_ahead(1, "interface"))
            || self.peek(0).is_some_and(|t| t.text == "record" && self.peek(1).is_some_and(|n| n.kind == TokenKind::Identifier))
        {
            // Nested types are not modelled.
            while !self.at("{") {
                if self.peek(0).is_none() {
                    return Err(self.error(&["{"]));
                }
                self.pos += 1;
            }
            self.skip_balanced("{", "}")?;
            return Ok(Some(self.finish(NodeKind::Opaque, start, vec![])));
        }
        if self.at("{") {
            let block = self.block()?;
            return Ok(Some(block));
        }
        if self.at("<") {
            self.skip_balanced("<", ">")?;
        }
        // Constructor: `Name(`
        if self.peek(0).is_some_and(|t| t.text == class_name) && self.at_ahead(1, "(") {
            self.pos += 1;
            return self.method_rest(start, class_name.to_string(), None, true).map(Some);
        }
        let ty = self.type_ref()?;
        let name = self.ident()?;
        if self.at("(") {
            return self.method_rest(start, name, Some(ty), false).map(Some);
        }
        self.pos -= 1;
        let mut children = vec![ty];
        loop {
            children.push(self.declarator(true)?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")?;
        Ok(Some(self.finish(NodeKind::FieldDecl, start, children)))
    }

    fn method_rest(&mut self, start: usize, name: String, ret: Option<NodeId>, is_constructor: bool) -> PResult<NodeId> {
        let mut children: Vec<NodeId> = ret.into_iter().collect();
        self.expect("(")?;
        if !self.at(")") {
            loop {
                children.push(self.formal_param()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        while self.at("[") {
            self.pos += 1;
            self.expect("]")?;
        }
        if self.eat("throws") {
            self.type_ref()?;
            while self.eat(",") {
                self.type_ref()?;
            }
        }
        if self.at("{") {
            children.push(self.block()?);
        } else if self.eat("default") {
            // annotation element default value
            while !self.at(";") {
                if self.peek(0).is_none() {
                    return Err(self.error(&[";"]));
                }
                self.pos += 1;
            }
            self.expect(";")?;
        } else {
            self.expect(";").map_err(|_| self.error(&["{", ";", "throws"]))?;
        }
        Ok(self.finish(NodeKind::MethodDecl { name, is_constructor }, start, children))
    }

    fn formal_param(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.modifiers()?;
        let ty = self.type_ref()?;
        if self.eat("...") {
            // varargs: widen the type to an array
            let t = self.ast.nodes[ty].span;
            self.ast.nodes[ty].span = Span::new(t.start, self.toks[self.pos - 1].span.end);
            self.ast.nodes[ty].tokens.end = self.pos;
            if let NodeKind::TypeRef(tr) = &mut self.ast.nodes[ty].kind {
                tr.dims += 1;
                tr.raw = self.src[t.start..self.toks[self.pos - 1].span.end].to_string();
            }
        }
        let name = self.ident()?;
        while self.at("[") && self.at_ahead(1, "]") {
            self.pos += 2;
        }
        Ok(self.finish(NodeKind::Param { name }, start, vec![ty]))
    }

    fn declarator(&mut self, is_field: bool) -> PResult<NodeId> {
        let start = self.pos;
        let name = self.ident()?;
        while self.at("[") && self.at_ahead(1, "]") {
            self.pos += 2;
        }
        let mut children = Vec::new();
        if self.eat("=") {
            children.push(self.initializer(is_field)?);
        }
        Ok(self.finish(NodeKind::Declarator { name }, start, children))
    }

    fn initializer(&mut self, is_field: bool) -> PResult<NodeId> {
        let mark = self.mark();
        if !self.at("{") {
            match self.expression() {
                Ok(e) if self.at(",") || self.at(";") => return Ok(e),
                Ok(_) | Err(_) => self.reset(mark),
            }
        }
        if !is_field {
            // Local initializers fall back at statement level.
            return Err(self.error(&["expression"]));
        }
        let start = self.pos;
        let mut depth = 0usize;
        loop {
            match self.peek(0) {
                None => return Err(self.error(&[";"])),
                Some(t) if depth == 0 && (t.is(",") || t.is(";")) => break,
                Some(t) if t.is("(") || t.is("[") || t.is("{") => depth += 1,
                Some(t) if t.is(")") || t.is("]") || t.is("}") => {
                    if depth == 0 {
                        return Err(self.error(&[";"]));
                    }
                    depth -= 1;
                }
                _ => {}
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error(&["expression"]));
        }
        Ok(self.finish(NodeKind::Opaque, start, vec![]))
    }

    // ----- types ------------------------------------------------------------

    fn type_ref(&mut self) -> PResult<NodeId> {
        self.skip_annotations()?;
        let start = self.pos;
        let t = self.type_value()?;
        let span = self.span_from(start);
        Ok(self.ast.push(NodeKind::TypeRef(t), span, start..self.pos, vec![]))
    }

    fn type_value(&mut self) -> PResult<TypeRef> {
        self.skip_annotations()?;
        let start = self.pos;
        if self.eat("?") {
            let mut args = Vec::new();
            if self.eat("extends") || self.eat("super") {
                args.push(self.type_value()?);
            }
            let span = self.span_from(start);
            let raw = self.src[span.start..span.end].to_string();
            return Ok(TypeRef { raw, qualified: "?".into(), args, dims: 0 });
        }
        let name = match self.peek(0) {
            Some(t) if t.kind == TokenKind::Keyword && is_primitive_name(&t.text) => {
                self.pos += 1;
                t.text.clone()
            }
            Some(t) if t.kind == TokenKind::Identifier => self.qualified_name()?,
            _ => return Err(self.error(&["type"])),
        };
        let mut args = Vec::new();
        if self.at("<") {
            self.pos += 1;
            if !self.at(">") {
                loop {
                    args.push(self.type_value()?);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(">")?;
        }
        let mut dims = 0;
        while self.at("[") && self.at_ahead(1, "]") {
            self.pos += 2;
            dims += 1;
        }
        let span = self.span_from(start);
        Ok(TypeRef { raw: self.src[span.start..span.end].to_string(), qualified: name, args, dims })
    }

    // ----- statements -------------------------------------------------------

    fn block(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.expect("{")?;
        let mut children = Vec::new();
        while !self.at("}") {
            if self.peek(0).is_none() {
                return Err(self.error(&["}"]));
            }
            children.push(self.statement()?);
        }
        self.pos += 1;
        Ok(self.finish(NodeKind::Block, start, children))
    }

    fn statement(&mut self) -> PResult<NodeId> {
        if self.at("{") {
            return self.block();
        }
        let mark = self.mark();
        match self.statement_inner() {
            Ok(id) => Ok(id),
            Err(_) => {
                self.reset(mark);
                self.opaque_statement()
            }
        }
    }

    fn statement_inner(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let tok = self.peek(0).expect("caller checked for end of input");
        match tok.text.as_str() {
            ";" if tok.kind == TokenKind::Punctuation => {
                self.pos += 1;
                Ok(self.finish(NodeKind::Empty, start, vec![]))
            }
            "if" => {
                self.pos += 1;
                let cond = self.paren_condition()?;
                let then = self.statement()?;
                let mut children = vec![cond, then];
                if self.eat("else") {
                    children.push(self.statement()?);
                }
                Ok(self.finish(NodeKind::If, start, children))
            }
            "while" => {
                self.pos += 1;
                let cond = self.paren_condition()?;
                let body = self.statement()?;
                Ok(self.finish(NodeKind::While, start, vec![cond, body]))
            }
            "for" => self.for_statement(),
            "return" => {
                self.pos += 1;
                let mut children = Vec::new();
                if !self.at(";") {
                    children.push(self.expression()?);
                }
                self.expect(";")?;
                Ok(self.finish(NodeKind::Return, start, children))
            }
            _ if tok.kind == TokenKind::Keyword && !matches!(tok.text.as_str(), "this" | "super" | "new" | "final")
                && !is_primitive_name(&tok.text) =>
            {
                Err(self.error(&["statement"]))
            }
            _ => {
                if let Some(decl) = self.try_local_var_decl()? {
                    self.expect(";")?;
                    let span = self.span_from(start);
                    self.ast.nodes[decl].span = span;
                    self.ast.nodes[decl].tokens = start..self.pos;
                    return Ok(decl);
                }
                let e = self.expression()?;
                self.expect(";")?;
                Ok(self.finish(NodeKind::ExprStmt, start, vec![e]))
            }
        }
    }

    fn paren_condition(&mut self) -> PResult<NodeId> {
        self.expect("(")?;
        let e = self.expression()?;
        self.expect(")")?;
        Ok(e)
    }

    /// `[final] Type name ...` without the trailing `;`. Restores position when not a declaration.
    fn try_local_var_decl(&mut self) -> PResult<Option<NodeId>> {
        let mark = self.mark();
        let start = self.pos;
        let looks_like_decl = (|| -> PResult<bool> {
            self.modifiers()?;
            self.type_ref()?;
            let is_name = self.at_kind(TokenKind::Identifier);
            Ok(is_name && matches!(self.peek(1).map(|t| t.text.as_str()), Some("=" | ";" | "," | "[" | ":")))
        })();
        self.reset(mark);
        if !matches!(looks_like_decl, Ok(true)) {
            return Ok(None);
        }
        self.modifiers()?;
        let ty = self.type_ref()?;
        let mut children = vec![ty];
        loop {
            children.push(self.declarator(false)?);
            if !self.eat(",") {
                break;
            }
        }
        Ok(Some(self.finish(NodeKind::LocalVarDecl, start, children)))
    }

    fn for_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.expect("for")?;
        self.expect("(")?;

        // enhanced for: `Type name : expr`
        let mark = self.mark();
        let enhanced = (|| -> PResult<Option<NodeId>> {
            let s = self.pos;
            self.modifiers()?;
            let ty = self.type_ref()?;
            let name_start = self.pos;
            let name = self.ident()?;
            if !self.at(":") {
                return Ok(None);
            }
            let d = self.finish(NodeKind::Declarator { name }, name_start, vec![]);
            Ok(Some(self.finish(NodeKind::LocalVarDecl, s, vec![ty, d])))
        })();
        match enhanced {
            Ok(Some(var)) => {
                self.expect(":")?;
                let iterable = self.expression()?;
                self.expect(")")?;
                let body = self.statement()?;
                return Ok(self.finish(NodeKind::For { enhanced: true }, start, vec![var, iterable, body]));
            }
            _ => self.reset(mark),
        }

        let init = if self.at(";") {
            self.empty_slot()
        } else if let Some(decl) = self.try_local_var_decl()? {
            decl
        } else {
            let s = self.pos;
            let e = self.expression()?;
            self.finish(NodeKind::ExprStmt, s, vec![e])
        };
        self.expect(";")?;
        let cond = if self.at(";") { self.empty_slot() } else { self.expression()? };
        self.expect(";")?;
        let update = if self.at(")") {
            self.empty_slot()
        } else {
            let s = self.pos;
            let e = self.expression()?;
            self.finish(NodeKind::ExprStmt, s, vec![e])
        };
        self.expect(")")?;
        let body = self.statement()?;
        Ok(self.finish(NodeKind::For { enhanced: false }, start, vec![init, cond, update, body]))
    }

    fn empty_slot(&mut self) -> NodeId {
        let s = self.pos;
        self.finish(NodeKind::Empty, s, vec![])
    }

    /// Skip one statement the subset does not model, keeping balanced brackets.
    fn opaque_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut is_do = self.at("do");
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek(0) else {
                return Err(self.error(&["}"]));
            };
            if t.kind == TokenKind::Punctuation || t.kind == TokenKind::Operator {
                match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" => depth = depth.saturating_sub(1),
                    "}" if depth == 0 => {
                        if self.pos == start {
                            return Err(self.error(&["statement"]));
                        }
                        break;
                    }
                    "}" => {
                        depth -= 1;
                        if depth == 0 {
                            self.pos += 1;
                            if self.at("catch") || self.at("finally") || self.at("else") {
                                continue;
                            }
                            if is_do && self.at("while") {
                                is_do = false;
                                continue;
                            }
                            break;
                        }
                    }
                    ";" if depth == 0 => {
                        self.pos += 1;
                        if self.at("else") {
                            continue;
                        }
                        if is_do && self.at("while") {
                            is_do = false;
                            continue;
                        }
                        break;
                    }
                    _ => {}
                }
            }
            self.pos += 1;
        }
        Ok(self.finish(NodeKind::Opaque, start, vec![]))
    }

    // ----- expressions ------------------------------------------------------

    fn expression(&mut self) -> PResult<NodeId> {
        if self.at_lambda() {
            return self.lambda();
        }
        let start = self.pos;
        let lhs = self.conditional()?;
        if let Some((op, n)) = self.peek_assign_op() {
            self.pos += n;
            let rhs = self.expression()?;
            return Ok(self.finish(NodeKind::Assignment(op), start, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn peek_assign_op(&self) -> Option<(String, usize)> {
        let t = self.peek(0)?;
        if t.is(">") && self.adjacent(0) {
            if self.at_ahead(1, ">=") {
                return Some((">>=".into(), 2));
            }
            if self.at_ahead(1, ">") && self.adjacent(1) && self.at_ahead(2, ">=") {
                return Some((">>>=".into(), 3));
            }
            return None;
        }
        ASSIGN_OPS.contains(&t.text.as_str()).then(|| (t.text.clone(), 1)).filter(|_| t.kind != TokenKind::Literal)
    }

    fn peek_binary_op(&self) -> Option<(String, usize)> {
        let t = self.peek(0)?;
        if t.kind == TokenKind::Literal || t.kind == TokenKind::Identifier {
            return None;
        }
        if t.is(">") {
            if self.adjacent(0) && self.at_ahead(1, ">") {
                if self.adjacent(1) && self.at_ahead(2, ">") {
                    return Some((">>>".into(), 3));
                }
                if self.adjacent(1) && self.at_ahead(2, ">=") {
                    return None;
                }
                return Some((">>".into(), 2));
            }
            if self.adjacent(0) && self.at_ahead(1, ">=") {
                return None;
            }
        }
        binary_precedence(&t.text).map(|_| (t.text.clone(), 1))
    }

    fn conditional(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let cond = self.binary(3)?;
        if self.eat("?") {
            let then = self.expression()?;
            self.expect(":")?;
            let other = if self.at_lambda() { self.lambda()? } else { self.conditional()? };
            return Ok(self.finish(NodeKind::Conditional, start, vec![cond, then, other]));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<NodeId> {
        let start = self.pos;
        let mut lhs = self.unary()?;
        while let Some((op, n)) = self.peek_binary_op() {
            let prec = binary_precedence(&op).expect("peek_binary_op only yields known operators");
            if prec < min_prec {
                break;
            }
            self.pos += n;
            if op == "instanceof" {
                self.eat("final");
                let ty = self.type_ref()?;
                if self.at_kind(TokenKind::Identifier) {
                    // pattern matching instanceof binds a variable; not modelled
                    return Err(self.error(&["operator"]));
                }
                lhs = self.finish(NodeKind::InstanceOf, start, vec![lhs, ty]);
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = self.finish(NodeKind::Binary(op), start, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if let Some(t) = self.peek(0) {
            if matches!(t.kind, TokenKind::Operator) && matches!(t.text.as_str(), "+" | "-" | "!" | "~" | "++" | "--") {
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(self.finish(NodeKind::Unary { op: t.text.clone(), prefix: true }, start, vec![operand]));
            }
        }
        if self.at("(") && !self.at_lambda() {
            if let Some(cast) = self.try_cast()? {
                return Ok(cast);
            }
        }
        let prim = self.primary()?;
        self.postfix(start, prim)
    }

    fn try_cast(&mut self) -> PResult<Option<NodeId>> {
        let mark = self.mark();
        let start = self.pos;
        self.pos += 1;
        let ty = match self.type_ref() {
            Ok(ty) if self.at(")") => ty,
            _ => {
                self.reset(mark);
                return Ok(None);
            }
        };
        self.pos += 1;
        let is_primitive = self.ast.type_ref(ty).is_some_and(TypeRef::is_primitive);
        let next_starts_operand = self.peek(0).is_some_and(|t| match t.kind {
            TokenKind::Identifier | TokenKind::Literal | TokenKind::Hole(_) => true,
            TokenKind::Keyword => matches!(t.text.as_str(), "this" | "new" | "super"),
            _ => matches!(t.text.as_str(), "(" | "!" | "~"),
        });
        let next_is_sign = self.peek(0).is_some_and(|t| matches!(t.text.as_str(), "+" | "-" | "++" | "--"));
        if next_starts_operand || (is_primitive && next_is_sign) {
            let operand = self.unary()?;
            return Ok(Some(self.finish(NodeKind::Cast, start, vec![ty, operand])));
        }
        self.reset(mark);
        Ok(None)
    }

    fn at_lambda(&self) -> bool {
        match self.peek(0) {
            Some(t) if t.kind == TokenKind::Identifier => self.at_ahead(1, "->"),
            Some(t) if t.is("(") => {
                let mut depth = 0;
                for (i, t) in self.toks[self.pos..].iter().enumerate() {
                    if t.is("(") {
                        depth += 1;
                    } else if t.is(")") {
                        depth -= 1;
                        if depth == 0 {
                            return self.at_ahead(i + 1, "->");
                        }
                    }
                }
                false
            }
            _ => false,
        }
    }

    fn lambda(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut children = Vec::new();
        if self.at_kind(TokenKind::Identifier) {
            let s = self.pos;
            let name = self.ident()?;
            children.push(self.finish(NodeKind::Param { name }, s, vec![]));
        } else {
            self.expect("(")?;
            if !self.at(")") {
                loop {
                    let typed = !(self.at_kind(TokenKind::Identifier) && (self.at_ahead(1, ",") || self.at_ahead(1, ")")));
                    if typed {
                        children.push(self.formal_param()?);
                    } else {
                        let s = self.pos;
                        let name = self.ident()?;
                        children.push(self.finish(NodeKind::Param { name }, s, vec![]));
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
        }
        self.expect("->")?;
        let body = if self.at("{") { self.block()? } else { self.expression()? };
        children.push(body);
        Ok(self.finish(NodeKind::Lambda, start, children))
    }

    fn arguments(&mut self) -> PResult<Vec<NodeId>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.at(")") {
            loop {
                args.push(self.expression()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let Some(t) = self.peek(0) else {
            return Err(self.error(&["expression"]));
        };
        match t.kind {
            TokenKind::Literal => {
                self.pos += 1;
                Ok(self.finish(NodeKind::Literal(t.text.clone()), start, vec![]))
            }
            TokenKind::Hole(n) => {
                self.pos += 1;
                Ok(self.finish(NodeKind::Hole(n), start, vec![]))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.at("(") {
                    let args = self.arguments()?;
                    return Ok(self.finish(NodeKind::MethodCall { name: t.text.clone(), has_receiver: false }, start, args));
                }
                Ok(self.finish(NodeKind::NameRef(t.text.clone()), start, vec![]))
            }
            TokenKind::Keyword if t.text == "this" => {
                self.pos += 1;
                if self.at("(") {
                    return Err(self.error(&["."]));
                }
                Ok(self.finish(NodeKind::This, start, vec![]))
            }
            TokenKind::Keyword if t.text == "super" => {
                self.pos += 1;
                if !self.at(".") {
                    return Err(self.error(&["."]));
                }
                Ok(self.finish(NodeKind::NameRef("super".into()), start, vec![]))
            }
            TokenKind::Keyword if t.text == "new" => {
                self.pos += 1;
                let ty = self.type_ref()?;
                if self.at("[") || self.ast.type_ref(ty).is_some_and(|t| t.dims > 0) {
                    return Err(self.error(&["("]));
                }
                let mut children = vec![ty];
                children.extend(self.arguments()?);
                if self.at("{") {
                    // anonymous class body
                    return Err(self.error(&[";"]));
                }
                Ok(self.finish(NodeKind::New, start, children))
            }
            _ if t.is("(") => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect(")")?;
                Ok(self.finish(NodeKind::Paren, start, vec![inner]))
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    fn postfix(&mut self, start: usize, mut expr: NodeId) -> PResult<NodeId> {
        loop {
            if self.at(".") {
                self.pos += 1;
                let name = match self.peek(0) {
                    Some(t) if t.kind == TokenKind::Identifier => t.text.clone(),
                    Some(t) if t.is("class") => "class".to_string(),
                    _ => return Err(self.error(&["identifier"])),
                };
                self.pos += 1;
                if self.at("(") && name != "class" {
                    let mut children = vec![expr];
                    children.extend(self.arguments()?);
                    expr = self.finish(NodeKind::MethodCall { name, has_receiver: true }, start, children);
                } else {
                    expr = self.finish(NodeKind::FieldAccess { name }, start, vec![expr]);
                }
            } else if self.at("[") {
                self.pos += 1;
                let idx = self.expression()?;
                self.expect("]")?;
                expr = self.finish(NodeKind::ArrayAccess, start, vec![expr, idx]);
            } else if self.at("++") || self.at("--") {
                let op = self.peek(0).map(|t| t.text.clone()).unwrap_or_default();
                self.pos += 1;
                expr = self.finish(NodeKind::Unary { op, prefix: false }, start, vec![expr]);
            } else if self.at("::") {
                return Err(self.error(&["expression"]));
            } else {
                return Ok(expr);
            }
        }
    }
}
