//! Randomized checks over generated expressions and generated projects.

use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use retype_core::engine::{self, plan_migration, select_rule, PlanError};
use retype_core::jparse::{parse_compilation_unit, parse_expression, tokenize_with, Ast, LexMode, NodeId, NodeKind, TokenKind};
use retype_core::refgraph::{find_references, NodeRef, Project, RootElement, Scope, ScopeKind};
use retype_core::specmodel::Catalog;
use retype_core::template::{match_template, substitute, MatchTarget, Template};

use crate::support::tree_hashes;

pub const CASES: u32 = 200;

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<String, String> {
    r.map(|()| format!("{CASES} cases")).map_err(|e| e.to_string())
}

// ----- generated expressions ----------------------------------------------------

#[derive(Debug, Clone)]
enum Expr {
    Name(&'static str),
    Int(u8),
    Str(&'static str),
    Call(Box<Expr>, &'static str, Vec<Expr>),
    Free(&'static str, Vec<Expr>),
    Field(Box<Expr>, &'static str),
    New(&'static str, Vec<Expr>),
    Binary(Box<Expr>, &'static str, Box<Expr>),
    Not(Box<Expr>),
    Paren(Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn render(&self) -> String {
        let list = |args: &[Expr]| args.iter().map(Expr::render).collect::<Vec<_>>().join(", ");
        match self {
            Expr::Name(n) => n.to_string(),
            Expr::Int(i) => i.to_string(),
            Expr::Str(s) => format!("\"{s}\""),
            Expr::Call(r, m, a) => format!("{}.{m}({})", r.render(), list(a)),
            Expr::Free(m, a) => format!("{m}({})", list(a)),
            Expr::Field(r, f) => format!("{}.{f}", r.render()),
            Expr::New(t, a) => format!("new {t}({})", list(a)),
            Expr::Binary(l, op, r) => format!("{} {op} {}", l.render(), r.render()),
            Expr::Not(e) => format!("!{}", e.render()),
            Expr::Paren(e) => format!("({})", e.render()),
            Expr::Cond(c, a, b) => format!("{} ? {} : {}", c.render(), a.render(), b.render()),
            Expr::Index(a, i) => format!("{}[{}]", a.render(), i.render()),
        }
    }
}

/// Operands of a binary operator or conditional are wrapped in parentheses unless they
/// are primaries, so the rendered text always parses back to the generated shape.
fn primary(e: Expr) -> Expr {
    match e {
        Expr::Binary(..) | Expr::Not(_) | Expr::Cond(..) => Expr::Paren(Box::new(e)),
        e => e,
    }
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b", "c", "r", "r"]).prop_map(Expr::Name),
        (0u8..4).prop_map(Expr::Int),
        prop::sample::select(vec!["x", "y"]).prop_map(Expr::Str),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let args = prop::collection::vec(inner.clone(), 0..3);
        let method = prop::sample::select(vec!["m", "n", "get"]);
        prop_oneof![
            (inner.clone(), method.clone(), args.clone()).prop_map(|(r, m, a)| Expr::Call(Box::new(primary(r)), m, a)),
            (method, args.clone()).prop_map(|(m, a)| Expr::Free(m, a)),
            (inner.clone(), prop::sample::select(vec!["f", "g"])).prop_map(|(r, f)| Expr::Field(Box::new(primary(r)), f)),
            (prop::sample::select(vec!["T", "U"]), args).prop_map(|(t, a)| Expr::New(t, a)),
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "==", "&&", "||", "<"]), inner.clone())
                .prop_map(|(l, op, r)| Expr::Binary(Box::new(primary(l)), op, Box::new(primary(r)))),
            inner.clone().prop_map(|e| Expr::Not(Box::new(primary(e)))),
            inner.clone().prop_map(|e| Expr::Paren(Box::new(e))),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| Expr::Cond(Box::new(primary(c)), Box::new(primary(a)), Box::new(primary(b)))),
            (inner.clone(), inner).prop_map(|(a, i)| Expr::Index(Box::new(primary(a)), Box::new(i))),
        ]
    })
}

fn is_r(ast: &Ast, n: NodeId) -> bool {
    matches!(ast.kind(n), NodeKind::NameRef(s) if s == "r")
}

fn mentions_r(ast: &Ast, n: NodeId) -> bool {
    ast.descendants(n).into_iter().any(|d| is_r(ast, d))
}

/// Abstract subtrees of a parsed expression into holes: every `r` becomes `$1$`, other
/// subtrees chosen by `picks` become `$k$`, equal texts sharing a hole number.
fn abstract_template(source: &str, ast: &Ast, picks: &[bool]) -> String {
    let mut chosen: Vec<(usize, usize, String)> = Vec::new();
    let mut next = 0;
    let mut stack = vec![ast.root];
    while let Some(n) = stack.pop() {
        let span = ast.span(n);
        let text = &source[span.start..span.end];
        if is_r(ast, n) {
            chosen.push((span.start, span.end, "$1$".into()));
            continue;
        }
        let pick = picks.get(next).copied().unwrap_or(false);
        next += 1;
        if n != ast.root && ast.kind(n).is_expression() && pick && !mentions_r(ast, n) {
            chosen.push((span.start, span.end, text.to_string()));
            continue;
        }
        stack.extend(ast.children(n).iter().rev());
    }
    let mut numbers: BTreeMap<String, u32> = BTreeMap::new();
    chosen.sort();
    let mut out = String::new();
    let mut cursor = 0;
    for (start, end, text) in chosen {
        let hole = if text == "$1$" {
            1
        } else {
            let len = numbers.len() as u32;
            *numbers.entry(text).or_insert(len + 2)
        };
        out.push_str(&source[cursor..start]);
        out.push_str(&format!("${hole}$"));
        cursor = end;
    }
    out.push_str(&source[cursor..]);
    out
}

fn token_texts(text: &str) -> Vec<String> {
    tokenize_with(text, LexMode::Java).unwrap().into_iter().map(|t| t.text).collect()
}

/// (a) Substituting a match's bindings into the before-template reproduces the
/// matched token sequence.
pub fn match_substitute_soundness() -> Result<String, String> {
    let strategy = (expr(), prop::collection::vec(any::<bool>(), 0..40), expr());
    report(runner().run(&strategy, |(target, picks, other)| {
        let source = target.render();
        let (tokens, ast) = parse_expression(&source, LexMode::Java).map_err(|e| TestCaseError::fail(format!("{source}: {e}")))?;
        let mt = MatchTarget { ast: &ast, tokens: &tokens, source: &source };
        let root = |n: NodeId| is_r(&ast, n);
        let expected = ast.token_texts(ast.root, &tokens);

        let derived = abstract_template(&source, &ast, &picks);
        let template = Template::parse(&derived).map_err(|e| TestCaseError::fail(format!("{derived}: {e}")))?;
        let b = match_template(&template, mt, ast.root, &root)
            .ok_or_else(|| TestCaseError::fail(format!("`{derived}` does not match `{source}`")))?;
        let back = substitute(&template, &b, mt).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(token_texts(&back), expected.clone(), "template {} on {}", derived, source);

        // An unrelated template: whenever it matches, the same holds.
        let unrelated = other.render();
        if let Ok((otoks, oast)) = parse_expression(&unrelated, LexMode::Java) {
            let text = abstract_template(&unrelated, &oast, &picks);
            drop(otoks);
            if let Ok(t) = Template::parse(&text) {
                if let Some(b) = match_template(&t, mt, ast.root, &root) {
                    let back = substitute(&t, &b, mt).map_err(|e| TestCaseError::fail(e.to_string()))?;
                    prop_assert_eq!(token_texts(&back), expected, "template {} on {}", text, source);
                }
            }
        }
        Ok(())
    }))
}

// ----- select_rule against brute force -------------------------------------------

const RULE_POOL: &[&str] = &[
    "$1$.exists()",
    "$1$.getName()",
    "$1$.getName().length()",
    "$1$.getParentFile()",
    "$1$.getParentFile().exists()",
    "new File($1$, $2$)",
    "$1$.compareTo($2$)",
    "$2$.equals($1$)",
    "use($1$)",
    "use($1$, $2$)",
    "$1$.getPath() + $2$",
    "!$1$.exists()",
    "$1$ == $2$",
];

fn wrap(e: String, w: u8) -> String {
    match w % 13 {
        0 => format!("{e}.exists()"),
        1 => format!("{e}.getName()"),
        2 => format!("{e}.getName().length()"),
        3 => format!("{e}.getParentFile()"),
        4 => format!("new File({e}, \"x\")"),
        5 => format!("new File(\"y\", {e})"),
        6 => format!("{e}.compareTo(g)"),
        7 => format!("g.equals({e})"),
        8 => format!("use({e})"),
        9 => format!("use({e}, \"s\")"),
        10 => format!("{e}.getPath() + \"p\""),
        11 => format!("!{e}.exists()"),
        _ => format!("({e} == null)"),
    }
}

fn rule_program(stmts: &[Vec<u8>]) -> String {
    let mut body = String::new();
    for (i, wraps) in stmts.iter().enumerate() {
        let e = wraps.iter().fold("f".to_string(), |e, &w| wrap(e, w));
        body.push_str(&format!("        Object v{i} = {e};\n"));
    }
    format!(
        "import java.io.File;\n\nclass A {{\n    File f;\n    File g;\n\n    void m() {{\n{body}    }}\n\n    Object use(Object o) {{ return o; }}\n\n    Object use(Object o, String s) {{ return o; }}\n}}\n"
    )
}

fn catalog_with(rules: &[usize]) -> Catalog {
    let rules: Vec<String> = rules
        .iter()
        .map(|&i| {
            let before = RULE_POOL[i];
            let after = if before.contains("$2$") { "$1$.z($2$)" } else { "$1$.z()" };
            format!("{{\"Before\": {}, \"After\": \"{after}\"}}", serde_json::to_string(before).unwrap())
        })
        .collect();
    let doc = format!(
        "[{{\"From\": \"java.io.File\", \"To\": \"java.nio.file.Path\", \"ID\": 1, \"Priority\": 1, \"Mode\": \"Classic\", \"Rules\": [{}]}}]",
        rules.join(", ")
    );
    Catalog::load(doc.as_bytes()).unwrap()
}

fn element_named(p: &Project, name: &str) -> RootElement {
    let ast = &p.file(0).parsed.ast;
    ast.descendants(ast.root)
        .into_iter()
        .filter_map(|n| p.element(NodeRef::new(0, n)))
        .find(|e| e.name == name)
        .unwrap()
}

/// Concrete tokens of a template, counted from its text.
fn concrete_tokens(template: &str) -> usize {
    tokenize_with(template, LexMode::Template).unwrap().iter().filter(|t| !matches!(t.kind, TokenKind::Hole(_))).count()
}

/// (b) select_rule equals the argmax of (score, span length, earliest rule) over
/// every (rule, site-or-ancestor) pair.
pub fn select_rule_is_argmax() -> Result<String, String> {
    let strategy = (
        prop::collection::vec(prop::collection::vec(0u8..13, 0..4), 1..5),
        prop::collection::vec(0..RULE_POOL.len(), 1..7),
    );
    report(runner().run(&strategy, |(stmts, rules)| {
        let src = rule_program(&stmts);
        let p = Project::from_sources(".", vec![("A.java".into(), src.clone())]);
        prop_assert!(p.skipped().is_empty(), "{:?}", p.skipped());
        let catalog = catalog_with(&rules);
        let pattern = &catalog.patterns()[0];
        let root = element_named(&p, "f");
        let parsed = &p.file(0).parsed;
        let mt = MatchTarget { ast: &parsed.ast, tokens: &parsed.tokens, source: &parsed.source };
        let ast = &parsed.ast;
        let is_root = |n: NodeId| p.resolve(NodeRef::new(0, n)) == Some(root.decl);
        for u in find_references(&p, &root, &Scope::PROJECT) {
            let mut nodes = vec![u.site.node];
            nodes.extend(ast.ancestors(u.site.node).take_while(|&n| ast.kind(n).is_expression()));
            let mut best: Option<((usize, usize, std::cmp::Reverse<usize>), usize, NodeId)> = None;
            for &n in &nodes {
                for (i, rule) in pattern.rules.iter().enumerate() {
                    if match_template(&rule.before, mt, n, &is_root).is_some() {
                        let key = (concrete_tokens(rule.before.text()), ast.span(n).len(), std::cmp::Reverse(i));
                        if best.as_ref().is_none_or(|b| key > b.0) {
                            best = Some((key, rule.index, n));
                        }
                    }
                }
            }
            let got = select_rule(&p, &u, pattern, &root).map(|m| (m.rule, m.node.node));
            prop_assert_eq!(got, best.map(|(_, r, n)| (r, n)), "usage at {:?} in\n{}", u.span, src);
        }
        Ok(())
    }))
}

// ----- generated projects ------------------------------------------------------------

fn statement(kind: u8, var: &str, other: usize, k: usize) -> String {
    match kind % 12 {
        0 => format!("File l{k} = {var};"),
        1 => format!("File l{k} = new File(s);"),
        2 => format!("boolean b{k} = {var}.exists();"),
        3 => format!("String n{k} = {var}.getName();"),
        4 => format!("File c{k} = new File({var}, s);"),
        5 => format!("{var} = null;"),
        6 => format!("take({var});"),
        7 => format!("if ({var} != null) {{ s = {var}.getPath(); }}"),
        8 => format!("long z{k} = {var}.length();"),
        9 => format!("try {{ {var}.exists(); }} finally {{ }}"),
        10 => format!("new C{other}().take({var});"),
        _ => format!("Object o{k} = {var}.toPath();"),
    }
}

#[derive(Debug, Clone)]
struct GenFile {
    stmts: Vec<(u8, usize, usize)>,
    ret: usize,
}

fn gen_project() -> impl Strategy<Value = Vec<GenFile>> {
    let file = (prop::collection::vec((0u8..12, 0usize..8, 0usize..3), 0..8), 0usize..8).prop_map(|(stmts, ret)| GenFile { stmts, ret });
    prop::collection::vec(file, 1..4)
}

fn render_project(files: &[GenFile]) -> Vec<(std::path::PathBuf, String)> {
    files
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut vars = vec!["f".to_string(), "g".to_string(), "p".to_string()];
            let mut body = String::new();
            for (k, &(kind, v, other)) in f.stmts.iter().enumerate() {
                let var = vars[v % vars.len()].clone();
                body.push_str("        ");
                body.push_str(&statement(kind, &var, other % files.len(), k));
                body.push('\n');
                match kind % 12 {
                    0 | 1 => vars.push(format!("l{k}")),
                    4 => vars.push(format!("c{k}")),
                    _ => {}
                }
            }
            let ret = &vars[f.ret % vars.len()];
            let src = format!(
                "import java.io.File;\n\nclass C{i} {{\n    File f;\n    File g = new File(\"g\");\n\n    File m(File p, String s) {{\n{body}        return {ret};\n    }}\n\n    void take(File x) {{\n        boolean t = x.exists();\n    }}\n}}\n"
            );
            (format!("C{i}.java").into(), src)
        })
        .collect()
}

fn file_roots(p: &Project) -> Vec<RootElement> {
    let mut out = Vec::new();
    for fid in 0..p.files().len() {
        let ast = &p.file(fid).parsed.ast;
        out.extend(
            ast.descendants(ast.root)
                .into_iter()
                .filter_map(|n| p.element(NodeRef::new(fid, n)))
                .filter(|e| e.declared.qualified == "java.io.File"),
        );
    }
    out
}

fn scope_of(i: u8) -> ScopeKind {
    [ScopeKind::Local, ScopeKind::File, ScopeKind::Project][i as usize % 3]
}

fn project_case() -> impl Strategy<Value = (Vec<GenFile>, usize, u8)> {
    (gen_project(), any::<usize>(), 0u8..3)
}

/// Plan a generated case; `None` when the root cannot take the chosen scope.
fn plan_case(files: &[GenFile], pick: usize, scope: u8) -> Result<Option<(Project, RootElement, engine::MigrationPlan)>, TestCaseError> {
    let sources = render_project(files);
    let p = Project::from_sources(".", sources);
    if !p.skipped().is_empty() {
        return Err(TestCaseError::fail(format!("generated project does not parse: {:?}", p.skipped())));
    }
    let roots = file_roots(&p);
    let root = roots[pick % roots.len()].clone();
    let catalog = Catalog::builtin();
    match plan_migration(&p, &root, catalog.get(1).unwrap(), scope_of(scope)) {
        Ok(plan) => Ok(Some((p, root, plan))),
        Err(PlanError::Scope(_)) => Ok(None),
        Err(e) => Err(TestCaseError::fail(format!("{e}"))),
    }
}

/// (c) apply followed by undo restores a byte-identical tree.
pub fn apply_undo_round_trip() -> Result<String, String> {
    report(runner().run(&project_case(), |(files, pick, scope)| {
        let dir = tempfile::tempdir().unwrap();
        for (path, src) in render_project(&files) {
            fs::write(dir.path().join(path), src).unwrap();
        }
        let before = tree_hashes(dir.path());
        let p = Project::load(dir.path()).unwrap();
        let roots = file_roots(&p);
        let root = roots[pick % roots.len()].clone();
        let plan = match plan_migration(&p, &root, Catalog::builtin().get(1).unwrap(), scope_of(scope)) {
            Ok(plan) => plan,
            Err(PlanError::Scope(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let journal = engine::apply_plan(dir.path(), &plan).map_err(|e| TestCaseError::fail(e.to_string()))?;
        if plan.edit_count() > 0 {
            prop_assert_ne!(&tree_hashes(dir.path()), &before);
        }
        engine::undo(dir.path(), &journal.path).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(tree_hashes(dir.path()), before);
        Ok(())
    }))
}

/// (d) No declaration or rewrite edit falls outside the scope anchor.
pub fn scope_containment() -> Result<String, String> {
    report(runner().run(&project_case(), |(files, pick, scope)| {
        let Some((p, root, plan)) = plan_case(&files, pick, scope)? else { return Ok(()) };
        let root_file = &p.file(root.decl.file).path;
        let edits = plan.declaration_edits.iter().chain(plan.rewrite_edits.iter().map(|r| &r.edit));
        for e in edits {
            match scope_of(scope) {
                ScopeKind::Local => {
                    let method = root.method.expect("local scope needs a method");
                    let anchor = p.span(method);
                    prop_assert_eq!(&e.file, root_file);
                    prop_assert!(anchor.start <= e.span.start && e.span.end <= anchor.end, "{:?} outside {:?}", e, anchor);
                }
                ScopeKind::File => prop_assert_eq!(&e.file, root_file),
                ScopeKind::Project => prop_assert!(p.file_id(&e.file).is_some()),
            }
        }
        Ok(())
    }))
}

/// (e) Every file a plan modifies still parses.
pub fn modified_files_reparse() -> Result<String, String> {
    report(runner().run(&project_case(), |(files, pick, scope)| {
        let Some((p, _, plan)) = plan_case(&files, pick, scope)? else { return Ok(()) };
        for (path, _, new) in plan.preview(&p).map_err(|e| TestCaseError::fail(e.to_string()))? {
            prop_assert!(parse_compilation_unit(&new).is_ok(), "{} does not parse:\n{}", path.display(), new);
        }
        Ok(())
    }))
}
