//! One type change end to end: rule selection, migration planning, apply and undo.

mod apply;
mod imports;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::jparse::{apply_edits, line_col, Edit, EditError, NodeId, NodeKind, Span, TypeRef};
use crate::refgraph::{
    find_references, inflows, propagate, references_outside, usage_connection, EdgeReason, ElementKind, Link, NodeRef,
    Project, RootElement, Scope, ScopeError, ScopeKind, Usage,
};
use crate::specmodel::TypeChangePattern;
use crate::template::{match_template, required_precedence, result_precedence, substitute_with, Bindings, MatchTarget};

pub use apply::{
    apply_plan, journal_dir, latest_journal, read_journal, undo, ApplyError, EditJournal, JournalFile, JournalRecord, JournalSummary,
};
pub use imports::{ImportAction, ImportEdit};

/// A rewrite rule that matched at a usage site or one of its expression ancestors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMatch {
    pub usage: NodeRef,
    pub node: NodeRef,
    pub pattern: u32,
    pub rule: usize,
    pub bindings: Bindings,
    pub score: usize,
}

pub(crate) fn match_target(project: &Project, file: usize) -> MatchTarget<'_> {
    let parsed = &project.file(file).parsed;
    MatchTarget { ast: &parsed.ast, tokens: &parsed.tokens, source: &parsed.source }
}

/// The usage site and its ancestors up to, not including, the enclosing statement.
pub fn candidate_nodes(project: &Project, site: NodeRef) -> Vec<NodeRef> {
    let ast = &project.file(site.file).parsed.ast;
    std::iter::once(site.node)
        .chain(ast.ancestors(site.node))
        .take_while(|&n| ast.kind(n).is_expression())
        .map(|n| NodeRef::new(site.file, n))
        .collect()
}

fn is_reference_to(project: &Project, decl: NodeRef, file: usize) -> impl Fn(NodeId) -> bool + '_ {
    move |n| {
        let n = NodeRef::new(file, n);
        matches!(project.kind(n), NodeKind::NameRef(_) | NodeKind::FieldAccess { .. } | NodeKind::MethodCall { .. })
            && project.resolve(n) == Some(decl)
    }
}

/// Highest-scoring (rule, node) pair for a usage; ties go to the larger node, then the
/// earlier rule.
pub fn select_rule(project: &Project, usage: &Usage, pattern: &TypeChangePattern, root: &RootElement) -> Option<RuleMatch> {
    if usage.opaque {
        return None;
    }
    let target = match_target(project, usage.site.file);
    let test = is_reference_to(project, root.decl, usage.site.file);
    let mut best: Option<((usize, usize, Reverse<usize>), RuleMatch)> = None;
    for node in candidate_nodes(project, usage.site) {
        for rule in &pattern.rules {
            let Some(bindings) = match_template(&rule.before, target, node.node, &test) else { continue };
            let key = (rule.score(), project.span(node).len(), Reverse(rule.index));
            if best.as_ref().is_none_or(|(k, _)| key > *k) {
                let m = RuleMatch { usage: usage.site, node, pattern: pattern.id, rule: rule.index, bindings, score: rule.score() };
                best = Some((key, m));
            }
        }
    }
    best.map(|(_, m)| m)
}

/// Best rule for an expression flowing into a migrated element (e.g. `new File(name)`).
fn select_inflow_rule(project: &Project, expr: NodeRef, pattern: &TypeChangePattern, element: NodeRef) -> Option<RuleMatch> {
    let target = match_target(project, expr.file);
    let test = is_reference_to(project, element, expr.file);
    pattern
        .rules
        .iter()
        .filter_map(|rule| {
            match_template(&rule.before, target, expr.node, &test).map(|bindings| RuleMatch {
                usage: expr,
                node: expr,
                pattern: pattern.id,
                rule: rule.index,
                bindings,
                score: rule.score(),
            })
        })
        .max_by_key(|m| (m.score, Reverse(m.rule)))
}

// ----- plan types ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Location {
    pub file: PathBuf,
    pub span: Span,
    pub line: usize,
    pub col: usize,
}

impl Location {
    pub fn of_span(project: &Project, file: usize, span: Span) -> Self {
        let f = project.file(file);
        let (line, col) = line_col(&f.parsed.source, span.start);
        Location { file: f.path.clone(), span, line, col }
    }

    pub fn of(project: &Project, n: NodeRef) -> Self {
        Self::of_span(project, n.file, project.span(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlannedElement {
    pub name: String,
    pub kind: ElementKind,
    pub declared: String,
    pub location: Location,
}

impl PlannedElement {
    fn new(project: &Project, e: &RootElement) -> Self {
        let ast = &project.file(e.decl.file).parsed.ast;
        let type_node = ast.declared_type_node(e.decl.node).map_or(e.decl, |t| NodeRef::new(e.decl.file, t));
        PlannedElement {
            name: e.name.clone(),
            kind: e.kind,
            declared: project.text(type_node).to_string(),
            location: Location::of(project, e.decl),
        }
    }

    pub fn label(&self) -> String {
        format!("{} {} ({}:{})", self.declared, self.name, self.location.file.display(), self.location.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewriteEdit {
    pub edit: Edit,
    pub pattern: u32,
    pub rule: usize,
    pub score: usize,
    /// Source text the edit replaces.
    pub before: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FailureReason {
    NoMatchingRule,
    OpaqueContext,
    OutOfScope,
    AmbiguousOverload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cover {
    /// Inside the span of a rewrite matched for another reference.
    AncestorRewrite { edit: usize },
    /// The value flows to or from another migrated element.
    Propagation,
    /// Null checks and null assignments, which hold for either type.
    TypeAgnostic,
    /// Assignment target; the assigned value is handled as an inflow.
    Inflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Disposition {
    Rewritten { edit: usize },
    Covered { by: Cover },
    Failed { reason: FailureReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UsageRecord {
    pub element: String,
    pub location: Location,
    pub text: String,
    pub opaque: bool,
    pub disposition: Disposition,
}

/// An expression flowing into a migrated element: initializer, argument, return value
/// or assigned value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InflowRecord {
    pub element: String,
    pub location: Location,
    pub text: String,
    pub disposition: Disposition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailedUsage {
    pub element: String,
    pub location: Location,
    pub text: String,
    pub reason: FailureReason,
    /// True for a value flowing into the element rather than a reference to it.
    pub inflow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    pub reason: EdgeReason,
    pub witness: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MigrationPlan {
    pub pattern_id: u32,
    pub scope: ScopeKind,
    pub complete: bool,
    pub root: PlannedElement,
    pub elements: Vec<PlannedElement>,
    pub declaration_edits: Vec<Edit>,
    pub rewrite_edits: Vec<RewriteEdit>,
    pub import_edits: Vec<ImportEdit>,
    pub usages: Vec<UsageRecord>,
    pub inflows: Vec<InflowRecord>,
    pub failed: Vec<FailedUsage>,
    pub edges: Vec<EdgeRecord>,
    /// SHA-256 of every file the plan edits, as parsed.
    pub file_hashes: BTreeMap<PathBuf, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Coverage {
    pub found: usize,
    pub rewritten: usize,
    pub covered: usize,
    pub failed: usize,
}

impl Coverage {
    pub fn balanced(&self) -> bool {
        self.found == self.rewritten + self.covered + self.failed
    }
}

impl MigrationPlan {
    /// Declaration, rewrite and import edits together.
    pub fn all_edits(&self) -> Vec<Edit> {
        let mut v: Vec<Edit> = self.declaration_edits.clone();
        v.extend(self.rewrite_edits.iter().map(|r| r.edit.clone()));
        v.extend(self.import_edits.iter().map(|i| i.edit.clone()));
        v
    }

    pub fn edits_for(&self, file: &std::path::Path) -> Vec<Edit> {
        self.all_edits().into_iter().filter(|e| e.file == file).collect()
    }

    /// Declaration plus rewrite edits; imports are counted separately.
    pub fn edit_count(&self) -> usize {
        self.declaration_edits.len() + self.rewrite_edits.len()
    }

    pub fn files(&self) -> BTreeSet<PathBuf> {
        self.all_edits().into_iter().map(|e| e.file).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.declaration_edits.is_empty() && self.rewrite_edits.is_empty() && self.import_edits.is_empty()
    }

    pub fn coverage(&self) -> Coverage {
        let mut c = Coverage { found: self.usages.len(), ..Coverage::default() };
        for u in &self.usages {
            match u.disposition {
                Disposition::Rewritten { .. } => c.rewritten += 1,
                Disposition::Covered { .. } => c.covered += 1,
                Disposition::Failed { .. } => c.failed += 1,
            }
        }
        c
    }

    /// New contents of every edited file: `(path, old, new)`.
    pub fn preview(&self, project: &Project) -> Result<Vec<(PathBuf, String, String)>, EditError> {
        self.files()
            .into_iter()
            .map(|path| {
                let old = project.file_id(&path).map(|id| project.file(id).parsed.source.clone()).unwrap_or_default();
                let new = apply_edits(&old, &self.edits_for(&path))?;
                Ok((path, old, new))
            })
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("declared type {declared} of `{name}` does not match pattern {pattern} ({expected})")]
    PatternMismatch { name: String, declared: String, pattern: u32, expected: String },
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("planned edits conflict in {file}: {source}")]
    Conflict { file: PathBuf, source: EditError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlanOptions {
    /// The root's declaration already has the target type (a manual edit); only its
    /// references and connected elements are migrated.
    pub complete: bool,
}

pub fn plan_migration(
    project: &Project,
    root: &RootElement,
    pattern: &TypeChangePattern,
    scope: ScopeKind,
) -> Result<MigrationPlan, PlanError> {
    plan_migration_with(project, root, pattern, scope, PlanOptions::default())
}

pub fn plan_migration_with(
    project: &Project,
    root: &RootElement,
    pattern: &TypeChangePattern,
    scope_kind: ScopeKind,
    options: PlanOptions,
) -> Result<MigrationPlan, PlanError> {
    let mismatch = || PlanError::PatternMismatch {
        name: root.name.clone(),
        declared: root.declared.to_string(),
        pattern: pattern.id,
        expected: if options.complete { pattern.to.to_string() } else { pattern.from.to_string() },
    };
    let migrating = if options.complete {
        let b = pattern.bind_to(&root.declared).ok_or_else(mismatch)?;
        instantiate(&pattern.from, &b)
    } else {
        pattern.bind_from(&root.declared).ok_or_else(mismatch)?;
        root.declared.clone()
    };
    let scope = Scope::for_root(scope_kind, root)?;
    Planner { project, pattern, scope, migrating, complete: options.complete }.plan(root)
}

/// Replace type variables in `t` by their bindings.
pub fn instantiate(t: &TypeRef, bindings: &HashMap<String, TypeRef>) -> TypeRef {
    if t.is_type_variable() {
        if let Some(b) = bindings.get(&t.qualified) {
            return b.clone();
        }
    }
    TypeRef { args: t.args.iter().map(|a| instantiate(a, bindings)).collect(), ..t.clone() }
}

struct Planner<'a> {
    project: &'a Project,
    pattern: &'a TypeChangePattern,
    scope: Scope,
    migrating: TypeRef,
    complete: bool,
}

/// A matched rewrite before conflict resolution.
struct Candidate {
    m: RuleMatch,
    span: Span,
}

impl Planner<'_> {
    fn adapted(&self, u: &Usage) -> bool {
        self.project.element(u.element).is_some_and(|e| select_rule(self.project, u, self.pattern, &e).is_some())
    }

    fn migrated_elements(&self, root: &RootElement) -> (Vec<RootElement>, Vec<EdgeRecord>, Vec<NodeRef>) {
        let p = self.project;
        let adapted = |u: &Usage| self.adapted(u);
        let mut prop = propagate(p, root, &self.scope, &self.migrating, &adapted);
        // Co-declarators share one TypeRef, so they change together.
        loop {
            let extra: Vec<RootElement> = prop
                .elements
                .iter()
                .flat_map(|e| co_declarators(p, e.decl))
                .filter(|d| !prop.contains(*d))
                .filter_map(|d| p.element(d))
                .collect();
            if extra.is_empty() {
                break;
            }
            for e in extra {
                if prop.contains(e.decl) {
                    continue;
                }
                let more = propagate(p, &e, &self.scope, &self.migrating, &adapted);
                for x in more.elements {
                    if !prop.contains(x.decl) {
                        prop.elements.push(x);
                    }
                }
                for ed in more.edges {
                    if !prop.edges.iter().any(|o| o.to == ed.to) {
                        prop.edges.push(ed);
                    }
                }
                prop.blocked.extend(more.blocked);
            }
        }
        let label = |d: NodeRef| {
            let e = prop.elements.iter().find(|e| e.decl == d).expect("edge endpoints are elements");
            PlannedElement::new(p, e).label()
        };
        let edges = prop
            .edges
            .iter()
            .map(|e| EdgeRecord { from: label(e.from), to: label(e.to), reason: e.reason, witness: Location::of(p, e.witness) })
            .collect();
        let blocked_sites = prop.blocked.iter().map(|b| b.site).collect();
        (prop.elements, edges, blocked_sites)
    }

    fn plan(&self, root: &RootElement) -> Result<MigrationPlan, PlanError> {
        let p = self.project;
        let (elements, edges, _) = self.migrated_elements(root);
        let in_set: BTreeSet<NodeRef> = elements.iter().map(|e| e.decl).collect();
        let labels: HashMap<NodeRef, String> = elements.iter().map(|e| (e.decl, PlannedElement::new(p, e).label())).collect();

        // Rule matches for references and inflowing values.
        let mut usages: Vec<(NodeRef, Usage)> = Vec::new();
        let mut outside: Vec<(NodeRef, Usage)> = Vec::new();
        for e in &elements {
            usages.extend(find_references(p, e, &self.scope).into_iter().map(|u| (e.decl, u)));
            outside.extend(references_outside(p, e, &self.scope).into_iter().map(|u| (e.decl, u)));
        }
        let mut candidates: Vec<Candidate> = Vec::new();
        let mut usage_match: Vec<Option<usize>> = Vec::new();
        for (decl, u) in &usages {
            let e = elements.iter().find(|e| e.decl == *decl).expect("usage of an element");
            let m = select_rule(p, u, self.pattern, e);
            usage_match.push(m.map(|m| {
                candidates.push(Candidate { span: p.span(m.node), m });
                candidates.len() - 1
            }));
        }
        let mut flows = Vec::new();
        for e in &elements {
            for inflow in inflows(p, e) {
                let expr = inflow.expr;
                let source = inflow.source;
                let in_scope = self.scope.contains(p, expr);
                let fate = if !in_scope {
                    if is_null(p, expr) { Fate::Fine(Cover::TypeAgnostic) } else { Fate::Fail(FailureReason::OutOfScope) }
                } else if source.is_some_and(|s| in_set.contains(&s)) {
                    Fate::Fine(Cover::Propagation)
                } else if is_null(p, expr) {
                    Fate::Fine(Cover::TypeAgnostic)
                } else if let Some(m) = select_inflow_rule(p, expr, self.pattern, e.decl) {
                    candidates.push(Candidate { span: p.span(m.node), m });
                    Fate::Rewrite(candidates.len() - 1)
                } else if source.is_some_and(|s| p.declared_type(s) == Some(&self.migrating) && !self.scope.contains(p, s)) {
                    Fate::Fail(FailureReason::OutOfScope)
                } else {
                    Fate::Fail(FailureReason::NoMatchingRule)
                };
                flows.push((e.decl, expr, fate));
            }
        }

        // One match per node, best first; nested matches are spliced into their container.
        let mut best_at: BTreeMap<NodeRef, usize> = BTreeMap::new();
        for (i, c) in candidates.iter().enumerate() {
            let better = match best_at.get(&c.m.node) {
                Some(&j) => (c.m.score, Reverse(c.m.rule)) > (candidates[j].m.score, Reverse(candidates[j].m.rule)),
                None => true,
            };
            if better {
                best_at.insert(c.m.node, i);
            }
        }
        let mut accepted: Vec<usize> = best_at.values().copied().collect();
        accepted.sort_by_key(|&i| (candidates[i].m.node.file, candidates[i].span.start, Reverse(candidates[i].span.len())));
        let mut top: Vec<usize> = Vec::new();
        for &i in &accepted {
            let c = &candidates[i];
            if !top.iter().any(|&t| candidates[t].m.node.file == c.m.node.file && candidates[t].span.contains(c.span)) {
                top.push(i);
            }
        }
        let mut rewrite_edits = Vec::new();
        let mut edit_of_top: HashMap<usize, usize> = HashMap::new();
        for &t in &top {
            let c = &candidates[t];
            let nested: Vec<usize> = accepted
                .iter()
                .copied()
                .filter(|&i| i != t && candidates[i].m.node.file == c.m.node.file && c.span.contains(candidates[i].span))
                .collect();
            let text = self.render(&candidates, t, &nested);
            edit_of_top.insert(t, rewrite_edits.len());
            rewrite_edits.push(RewriteEdit {
                edit: Edit::new(p.file(c.m.node.file).path.clone(), c.span, text),
                pattern: c.m.pattern,
                rule: c.m.rule,
                score: c.m.score,
                before: p.text(c.m.node).to_string(),
            });
        }
        // Edit index of the top-level rewrite containing a span, if any.
        let enclosing_edit = |file: usize, span: Span| {
            top.iter().find(|&&t| candidates[t].m.node.file == file && candidates[t].span.contains(span)).map(|t| edit_of_top[t])
        };

        // Dispositions.
        let mut records = Vec::new();
        let mut failed = Vec::new();
        for (k, (decl, u)) in usages.iter().enumerate() {
            let disposition = if u.opaque {
                Disposition::Failed { reason: FailureReason::OpaqueContext }
            } else if let Some(edit) = usage_match[k].and_then(|i| enclosing_edit(u.site.file, candidates[i].span)) {
                Disposition::Rewritten { edit }
            } else if let Some(edit) = enclosing_edit(u.site.file, u.span) {
                Disposition::Covered { by: Cover::AncestorRewrite { edit } }
            } else {
                self.unmatched_disposition(u, &in_set)
            };
            records.push(self.usage_record(&labels[decl], u, disposition, &mut failed));
        }
        for (decl, u) in &outside {
            let d = Disposition::Failed { reason: FailureReason::OutOfScope };
            records.push(self.usage_record(&labels[decl], u, d, &mut failed));
        }
        let mut inflow_records = Vec::new();
        for (decl, expr, fate) in flows {
            let disposition = match fate {
                Fate::Fine(by) => Disposition::Covered { by },
                Fate::Rewrite(i) => match enclosing_edit(expr.file, candidates[i].span) {
                    Some(edit) => Disposition::Rewritten { edit },
                    None => Disposition::Failed { reason: FailureReason::NoMatchingRule },
                },
                Fate::Fail(reason) => match enclosing_edit(expr.file, p.span(expr)) {
                    Some(edit) if reason != FailureReason::OutOfScope => Disposition::Covered { by: Cover::AncestorRewrite { edit } },
                    _ => Disposition::Failed { reason },
                },
            };
            let location = Location::of(p, expr);
            let text = p.text(expr).to_string();
            if let Disposition::Failed { reason } = disposition {
                failed.push(FailedUsage { element: labels[&decl].clone(), location: location.clone(), text: text.clone(), reason, inflow: true });
            }
            inflow_records.push(InflowRecord { element: labels[&decl].clone(), location, text, disposition });
        }
        records.sort_by(|a, b| loc_key(&a.location).cmp(&loc_key(&b.location)));
        inflow_records.sort_by(|a, b| loc_key(&a.location).cmp(&loc_key(&b.location)));
        failed.sort_by(|a, b| loc_key(&a.location).cmp(&loc_key(&b.location)).then(a.inflow.cmp(&b.inflow)));
        failed.dedup();

        // Declarations and imports.
        let mut needed: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        let mut declaration_edits: Vec<Edit> = Vec::new();
        for e in &elements {
            if self.complete && e.decl == root.decl {
                continue;
            }
            let ast = &p.file(e.decl.file).parsed.ast;
            let Some(type_node) = ast.declared_type_node(e.decl.node) else { continue };
            let type_node = NodeRef::new(e.decl.file, type_node);
            let bindings = self.pattern.bind_from(&e.declared).unwrap_or_default();
            let imports = &p.file(e.decl.file).parsed.imports;
            let mut text = render_type(&self.pattern.to, &bindings, imports, needed.entry(e.decl.file).or_default());
            if p.text(type_node).trim_end().ends_with("...") {
                text.push_str("...");
            }
            let edit = Edit::new(p.file(e.decl.file).path.clone(), p.span(type_node), text);
            if !declaration_edits.contains(&edit) {
                declaration_edits.push(edit);
            }
        }
        for &t in &accepted {
            let m = &candidates[t].m;
            let rule = &self.pattern.rules[m.rule];
            let set = needed.entry(m.node.file).or_default();
            imports::introduced_types(&rule.before, &rule.after, &p.file(m.node.file).parsed.imports, set);
        }
        let mut import_edits = Vec::new();
        let edited_files: BTreeSet<usize> = declaration_edits
            .iter()
            .map(|e| &e.file)
            .chain(rewrite_edits.iter().map(|r| &r.edit.file))
            .filter_map(|f| p.file_id(f))
            .collect();
        for &fid in &edited_files {
            let file = p.file(fid);
            let body_edits: Vec<Edit> = declaration_edits
                .iter()
                .chain(rewrite_edits.iter().map(|r| &r.edit))
                .filter(|e| e.file == file.path)
                .cloned()
                .collect();
            let after = apply_edits(&file.parsed.source, &body_edits)
                .map_err(|source| PlanError::Conflict { file: file.path.clone(), source })?;
            let add = needed.remove(&fid).unwrap_or_default();
            import_edits.extend(imports::import_edits(file, &add, &self.pattern.from.qualified, &after));
        }

        let mut plan = MigrationPlan {
            pattern_id: self.pattern.id,
            scope: self.scope.kind,
            complete: self.complete,
            root: PlannedElement::new(p, root),
            elements: elements.iter().map(|e| PlannedElement::new(p, e)).collect(),
            declaration_edits,
            rewrite_edits,
            import_edits,
            usages: records,
            inflows: inflow_records,
            failed,
            edges,
            file_hashes: BTreeMap::new(),
        };
        for path in plan.files() {
            let fid = p.file_id(&path).expect("edits target parsed files");
            let text = &p.file(fid).parsed.source;
            apply_edits(text, &plan.edits_for(&path)).map_err(|source| PlanError::Conflict { file: path.clone(), source })?;
            plan.file_hashes.insert(path, sha256_hex(text.as_bytes()));
        }
        assert!(plan.coverage().balanced(), "every usage is rewritten, covered or failed");
        Ok(plan)
    }

    fn usage_record(&self, element: &str, u: &Usage, disposition: Disposition, failed: &mut Vec<FailedUsage>) -> UsageRecord {
        let p = self.project;
        let location = Location::of_span(p, u.site.file, u.span);
        let source = &p.file(u.site.file).parsed.source;
        let text = if u.opaque { &source[u.span.start..u.span.end] } else { p.text(u.site) }.to_string();
        if let Disposition::Failed { reason } = disposition {
            failed.push(FailedUsage { element: element.to_string(), location: location.clone(), text: text.clone(), reason, inflow: false });
        }
        UsageRecord { element: element.to_string(), location, text, opaque: u.opaque, disposition }
    }

    /// Disposition of a reference no rule adapts and no rewrite contains.
    fn unmatched_disposition(&self, u: &Usage, in_set: &BTreeSet<NodeRef>) -> Disposition {
        let p = self.project;
        if is_type_agnostic(p, u.site, in_set) {
            return Disposition::Covered { by: Cover::TypeAgnostic };
        }
        let same_type = |d: NodeRef| p.declared_type(d) == Some(&self.migrating) && p.element(d).is_some();
        match usage_connection(p, u.site).map(|c| c.target) {
            Some(Link::Decl(d)) if in_set.contains(&d) => return Disposition::Covered { by: Cover::Propagation },
            Some(Link::Decl(d)) if same_type(d) => return Disposition::Failed { reason: FailureReason::OutOfScope },
            Some(Link::Ambiguous(ds)) if ds.iter().any(|&d| same_type(d)) => {
                return Disposition::Failed { reason: FailureReason::AmbiguousOverload };
            }
            _ => {}
        }
        if is_assignment_target(p, u.site) {
            return Disposition::Covered { by: Cover::Inflow };
        }
        Disposition::Failed { reason: FailureReason::NoMatchingRule }
    }

    /// Replacement text for a top-level match, with nested matches applied inside its holes.
    fn render(&self, candidates: &[Candidate], at: usize, nested: &[usize]) -> String {
        let p = self.project;
        let c = &candidates[at];
        let file = c.m.node.file;
        let target = match_target(p, file);
        let rule = &self.pattern.rules[c.m.rule];
        let hole_text = |n: NodeId| {
            let span = target.ast.span(n);
            self.render_region(candidates, file, span, nested)
        };
        let text = substitute_with(&rule.after, &c.m.bindings, target, &hole_text).expect("after-holes are bound by validation");
        if result_precedence(&rule.after, &c.m.bindings, target) < required_precedence(target.ast, c.m.node.node) {
            format!("({text})")
        } else {
            text
        }
    }

    /// Source text of `span` with the outermost matches inside it rewritten.
    fn render_region(&self, candidates: &[Candidate], file: usize, span: Span, pool: &[usize]) -> String {
        let source = &self.project.file(file).parsed.source;
        let inside: Vec<usize> = pool.iter().copied().filter(|&i| span.contains(candidates[i].span)).collect();
        let outer: Vec<usize> = inside
            .iter()
            .copied()
            .filter(|&i| !inside.iter().any(|&j| j != i && candidates[j].span.contains(candidates[i].span) && candidates[j].span != candidates[i].span))
            .collect();
        let mut out = String::new();
        let mut cursor = span.start;
        let mut ordered = outer;
        ordered.sort_by_key(|&i| candidates[i].span.start);
        for i in ordered {
            let s = candidates[i].span;
            if s.start < cursor {
                continue;
            }
            out.push_str(&source[cursor..s.start]);
            let nested: Vec<usize> = inside.iter().copied().filter(|&j| j != i && s.contains(candidates[j].span)).collect();
            out.push_str(&self.render(candidates, i, &nested));
            cursor = s.end;
        }
        out.push_str(&source[cursor..span.end]);
        out
    }
}

enum Fate {
    Fine(Cover),
    Rewrite(usize),
    Fail(FailureReason),
}

fn loc_key(l: &Location) -> (PathBuf, usize, usize) {
    (l.file.clone(), l.span.start, l.span.end)
}

fn is_null(project: &Project, expr: NodeRef) -> bool {
    matches!(project.kind(project.unparen(expr)), NodeKind::Literal(t) if t == "null")
}

fn outer_context(project: &Project, site: NodeRef) -> Option<(NodeRef, NodeRef)> {
    let mut cur = site;
    let mut ctx = project.parent(cur)?;
    while matches!(project.kind(ctx), NodeKind::Paren) {
        cur = ctx;
        ctx = project.parent(cur)?;
    }
    Some((cur, ctx))
}

fn is_assignment_target(project: &Project, site: NodeRef) -> bool {
    let Some((cur, ctx)) = outer_context(project, site) else { return false };
    matches!(project.kind(ctx), NodeKind::Assignment(op) if op == "=")
        && project.file(ctx.file).parsed.ast.children(ctx.node).first() == Some(&cur.node)
}

/// `x == null`, `x != other_migrated`, `x = null`.
fn is_type_agnostic(project: &Project, site: NodeRef, in_set: &BTreeSet<NodeRef>) -> bool {
    let Some((cur, ctx)) = outer_context(project, site) else { return false };
    let ch = project.file(ctx.file).parsed.ast.children(ctx.node);
    let other = |ch: &[NodeId]| NodeRef::new(ctx.file, if ch[0] == cur.node { ch[1] } else { ch[0] });
    match project.kind(ctx) {
        NodeKind::Binary(op) if op == "==" || op == "!=" => {
            let o = other(ch);
            is_null(project, o) || project.referenced_decl(o).is_some_and(|d| in_set.contains(&d))
        }
        NodeKind::Assignment(op) if op == "=" && ch[0] == cur.node => is_null(project, NodeRef::new(ctx.file, ch[1])),
        _ => false,
    }
}

fn co_declarators(project: &Project, decl: NodeRef) -> Vec<NodeRef> {
    let ast = &project.file(decl.file).parsed.ast;
    if !matches!(ast.kind(decl.node), NodeKind::Declarator { .. }) {
        return Vec::new();
    }
    let Some(stmt) = ast.parent(decl.node) else { return Vec::new() };
    ast.children(stmt)
        .iter()
        .copied()
        .filter(|&d| d != decl.node && matches!(ast.kind(d), NodeKind::Declarator { .. }))
        .map(|d| NodeRef::new(decl.file, d))
        .collect()
}

/// Source text for `to` in a file: simple names where they can be imported, qualified
/// names on a clash, type variables replaced by the bound source text.
pub fn render_type(
    to: &TypeRef,
    bindings: &HashMap<String, TypeRef>,
    imports: &crate::jparse::ImportTable,
    needed: &mut BTreeSet<String>,
) -> String {
    if to.is_type_variable() {
        if let Some(b) = bindings.get(&to.qualified) {
            return b.raw.clone();
        }
    }
    let q = &to.qualified;
    let mut s = if !q.contains('.') || imports.simple_name_clashes(q) {
        q.clone()
    } else {
        if !imports.is_visible(q) {
            needed.insert(q.clone());
        }
        to.simple_name().to_string()
    };
    if !to.args.is_empty() {
        let args: Vec<String> = to.args.iter().map(|a| render_type(a, bindings, imports, needed)).collect();
        s.push('<');
        s.push_str(&args.join(", "));
        s.push('>');
    }
    for _ in 0..to.dims {
        s.push_str("[]");
    }
    s
}
