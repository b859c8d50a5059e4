use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use retype_core::engine::{Coverage, FailureReason, ImportAction, Location, MigrationPlan, PlannedElement};
use retype_core::refgraph::{EdgeReason, ElementKind, Project, ScopeKind};
use retype_core::specmodel::TypeChangePattern;
use serde::Serialize;

use crate::Format;

/// Renders project-relative paths either as-is or joined to the project root.
pub struct Paths {
    root: PathBuf,
    relative: bool,
}

impl Paths {
    pub fn new(root: &Path, relative: bool) -> Self {
        Paths { root: root.to_path_buf(), relative }
    }

    pub fn show(&self, rel: &Path) -> String {
        if self.relative || self.root == Path::new(".") || rel.is_absolute() {
            rel.display().to_string()
        } else {
            self.root.join(rel).display().to_string()
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementOut {
    name: String,
    kind: ElementKind,
    declared: String,
    file: String,
    line: usize,
    col: usize,
}

impl ElementOut {
    fn new(e: &PlannedElement, paths: &Paths) -> Self {
        ElementOut {
            name: e.name.clone(),
            kind: e.kind,
            declared: e.declared.clone(),
            file: paths.show(&e.location.file),
            line: e.location.line,
            col: e.location.col,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EditOut {
    file: String,
    line: usize,
    col: usize,
    /// Rule index within the pattern; absent for declaration edits.
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<usize>,
    before: String,
    after: String,
}

#[derive(Serialize)]
pub struct ImportOut {
    file: String,
    action: ImportAction,
    imports: Vec<String>,
}

#[derive(Serialize)]
pub struct EdgeOut {
    from: String,
    to: String,
    reason: EdgeReason,
    file: String,
    line: usize,
    col: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FailedOut {
    element: String,
    file: String,
    line: usize,
    col: usize,
    reason: FailureReason,
    text: String,
    inflow: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApplyReport {
    dry_run: bool,
    pattern_id: u32,
    pattern: String,
    scope: ScopeKind,
    root: ElementOut,
    edits: Vec<EditOut>,
    imports: Vec<ImportOut>,
    /// Elements migrated besides the root.
    propagated: Vec<ElementOut>,
    edges: Vec<EdgeOut>,
    failed: Vec<FailedOut>,
    coverage: Coverage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub journal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<String>,
}

impl ApplyReport {
    pub fn new(project: &Project, plan: &MigrationPlan, pattern: &TypeChangePattern, paths: &Paths, dry_run: bool) -> Self {
        let located = |file: &Path, start: usize| {
            let id = project.file_id(file).expect("plans edit project files");
            let span = retype_core::jparse::Span::new(start, start);
            Location::of_span(project, id, span)
        };
        let source = |file: &Path| &project.file(project.file_id(file).expect("plans edit project files")).parsed.source;
        let mut edits: Vec<EditOut> = plan
            .declaration_edits
            .iter()
            .map(|e| (e, None, source(&e.file)[e.span.start..e.span.end].to_string()))
            .chain(plan.rewrite_edits.iter().map(|r| (&r.edit, Some(r.rule), r.before.clone())))
            .map(|(e, rule, before)| {
                let loc = located(&e.file, e.span.start);
                EditOut { file: paths.show(&e.file), line: loc.line, col: loc.col, rule, before, after: e.replacement.clone() }
            })
            .collect();
        edits.sort_by(|a, b| (&a.file, a.line, a.col).cmp(&(&b.file, b.line, b.col)));
        ApplyReport {
            dry_run,
            pattern_id: pattern.id,
            pattern: pattern.signature(),
            scope: plan.scope,
            root: ElementOut::new(&plan.root, paths),
            edits,
            imports: plan
                .import_edits
                .iter()
                .map(|i| ImportOut { file: paths.show(&i.edit.file), action: i.action, imports: i.imports.clone() })
                .collect(),
            propagated: plan.elements.iter().filter(|e| **e != plan.root).map(|e| ElementOut::new(e, paths)).collect(),
            edges: plan
                .edges
                .iter()
                .map(|e| EdgeOut {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    reason: e.reason,
                    file: paths.show(&e.witness.file),
                    line: e.witness.line,
                    col: e.witness.col,
                })
                .collect(),
            failed: plan
                .failed
                .iter()
                .map(|f| FailedOut {
                    element: f.element.clone(),
                    file: paths.show(&f.location.file),
                    line: f.location.line,
                    col: f.location.col,
                    reason: f.reason,
                    text: f.text.clone(),
                    inflow: f.inflow,
                })
                .collect(),
            coverage: plan.coverage(),
            journal: None,
            diff: None,
        }
    }

    pub fn write(&self, out: &mut dyn Write, format: Format) -> Result<()> {
        if format == Format::Json {
            writeln!(out, "{}", serde_json::to_string(self)?)?;
            return Ok(());
        }
        if let Some(diff) = &self.diff {
            write!(out, "{diff}")?;
        }
        let verb = if self.dry_run { "planned" } else { "applied" };
        writeln!(out, "{verb} pattern {} ({}) to {} {} ({}:{})", self.pattern_id, self.pattern, self.root.declared, self.root.name, self.root.file, self.root.line)?;
        writeln!(out, "edits: {}", self.edits.len())?;
        for e in &self.edits {
            let rule = e.rule.map_or("declaration".to_string(), |r| format!("rule {r}"));
            writeln!(out, "  {}:{}:{}  {}  ->  {}  [{rule}]", e.file, e.line, e.col, e.before, e.after)?;
        }
        for i in &self.imports {
            let sign = if i.action == ImportAction::Add { '+' } else { '-' };
            writeln!(out, "  {}  {sign}import {}", i.file, i.imports.join(", "))?;
        }
        if !self.propagated.is_empty() {
            writeln!(out, "propagated: {}", self.propagated.len())?;
            for e in &self.edges {
                writeln!(out, "  {}  <-  {}  {:?} at {}:{}:{}", e.to, e.from, e.reason, e.file, e.line, e.col)?;
            }
        }
        writeln!(out, "failed usages: {}", self.failed.len())?;
        for f in &self.failed {
            let what = if f.inflow { "value flowing into" } else { "reference to" };
            writeln!(out, "  {}:{}:{}  {:?}  {}  ({what} {})", f.file, f.line, f.col, f.reason, f.text, f.element)?;
        }
        let c = &self.coverage;
        writeln!(out, "usages: {} found, {} rewritten, {} covered, {} failed", c.found, c.rewritten, c.covered, c.failed)?;
        if let Some(j) = &self.journal {
            writeln!(out, "journal: {j}")?;
        }
        Ok(())
    }
}
