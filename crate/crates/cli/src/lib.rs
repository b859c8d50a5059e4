//! The `retype` command line: argument parsing, command dispatch and report rendering.
//!
//! [`run`] takes the arguments and output streams explicitly so the whole tool can be
//! driven in-process by tests; `main` only wires it to the real process.

mod report;
pub mod selector;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use retype_core::engine::{self, plan_migration_with, MigrationPlan, PlanOptions};
use retype_core::modes::{detect_manual_type_edit, inspect};
use retype_core::refgraph::{Project, ScopeKind};
use retype_core::specmodel::{Catalog, TypeChangePattern};
use serde::Serialize;

use report::{ApplyReport, Paths};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const FAILURES: i32 = 2;
    pub const FINDINGS: i32 = 3;
}

pub const CATALOG_ENV: &str = "RETYPE_CATALOG";
pub const DEFAULT_CATALOG: &str = "typechanges.json";

#[derive(Debug, Parser)]
#[command(name = "retype", version, about = "Change the declared type of a Java element and adapt its references")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Migrate a root element and write the result, recording an undo journal.
    Apply {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
        /// Print a unified diff instead of writing files.
        #[arg(long)]
        dry_run: bool,
    },
    /// Show the planned migration as a unified diff without writing.
    Preview {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
    },
    /// Flag declarations whose type has a recommended replacement.
    Inspect {
        #[command(flatten)]
        common: Common,
        /// Apply each finding's quick fix with file scope.
        #[arg(long)]
        fix: bool,
    },
    /// Compare two versions of a file and suggest completing manual type changes.
    Suggest {
        #[command(flatten)]
        common: Common,
        /// The version before the edit.
        #[arg(long)]
        old: PathBuf,
        /// The edited version, a file of the project.
        #[arg(long)]
        new: PathBuf,
    },
    /// Restore the files changed by an apply.
    Undo {
        #[command(flatten)]
        common: Common,
        /// Journal to undo; the most recent one by default.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
    /// List the catalog's type-change patterns by priority.
    ListPatterns {
        #[command(flatten)]
        common: Common,
    },
    /// Check a catalog document and report every violation.
    ValidateSpec {
        #[command(flatten)]
        common: Common,
        /// Catalog to check; defaults to the catalog the other commands would use.
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Project root directory.
    #[arg(long, default_value = ".")]
    pub project: PathBuf,
    /// Catalog document; falls back to $RETYPE_CATALOG, then typechanges.json in the project, then the built-in catalog.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Report paths relative to the project root.
    #[arg(long)]
    pub relative: bool,
}

#[derive(Debug, Args)]
pub struct Target {
    /// Root element: `file:line:col` or `file#Class.member[.variable]`.
    #[arg(long)]
    pub root: String,
    /// Pattern id or `from=>to`.
    #[arg(long)]
    pub pattern: String,
    #[arg(long, value_enum, default_value_t = Scope::File)]
    pub scope: Scope,
    /// The root already has the target type; migrate only what depends on it.
    #[arg(long)]
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    Local,
    File,
    Project,
}

impl From<Scope> for ScopeKind {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Local => ScopeKind::Local,
            Scope::File => ScopeKind::File,
            Scope::Project => ScopeKind::Project,
        }
    }
}

/// Run the tool and return its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::ERROR } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit::ERROR
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Apply { common, target, dry_run } => cmd_apply(&common, &target, dry_run, out, err),
        Command::Preview { common, target } => cmd_apply(&common, &target, true, out, err),
        Command::Inspect { common, fix } => cmd_inspect(&common, fix, out, err),
        Command::Suggest { common, old, new } => cmd_suggest(&common, &old, &new, out, err),
        Command::Undo { common, journal } => cmd_undo(&common, journal.as_deref(), out),
        Command::ListPatterns { common } => cmd_list_patterns(&common, out),
        Command::ValidateSpec { common, path } => cmd_validate_spec(&common, path.as_deref(), out),
    }
}

/// Where the catalog comes from: flag, environment, project default, else built-in.
fn catalog_source(common: &Common) -> Option<PathBuf> {
    if let Some(p) = &common.catalog {
        return Some(p.clone());
    }
    if let Some(p) = std::env::var_os(CATALOG_ENV).filter(|p| !p.is_empty()) {
        return Some(PathBuf::from(p));
    }
    let default = common.project.join(DEFAULT_CATALOG);
    default.is_file().then_some(default)
}

fn load_catalog(common: &Common) -> Result<Catalog> {
    match catalog_source(common) {
        Some(path) => {
            let bytes = fs::read(&path).with_context(|| format!("cannot read catalog {}", path.display()))?;
            Catalog::load(&bytes).map_err(|e| anyhow!("invalid catalog {}:\n{e}", path.display()))
        }
        None => Ok(Catalog::builtin()),
    }
}

fn load_project(common: &Common, err: &mut dyn Write) -> Result<Project> {
    if !common.project.is_dir() {
        bail!("project directory {} does not exist", common.project.display());
    }
    let project = Project::load(&common.project).with_context(|| format!("cannot read project {}", common.project.display()))?;
    for (path, e) in project.skipped() {
        writeln!(err, "warning: skipping {}: {e}", path.display())?;
    }
    Ok(project)
}

fn select_pattern<'c>(catalog: &'c Catalog, selector: &str) -> Result<&'c TypeChangePattern> {
    catalog.select(selector).ok_or_else(|| anyhow!("pattern not found: {selector}"))
}

fn plan(project: &Project, catalog: &Catalog, target: &Target) -> Result<MigrationPlan> {
    let pattern = select_pattern(catalog, &target.pattern)?;
    let root = selector::resolve_root(project, &target.root)?;
    Ok(plan_migration_with(project, &root, pattern, target.scope.into(), PlanOptions { complete: target.complete })?)
}

/// Plan, then either preview or apply; returns the report and its exit code.
fn migrate(project: &Project, plan: &MigrationPlan, pattern: &TypeChangePattern, dry_run: bool, paths: &Paths) -> Result<(ApplyReport, i32)> {
    let mut report = ApplyReport::new(project, plan, pattern, paths, dry_run);
    if dry_run {
        report.diff = Some(unified_diff(&plan.preview(project)?));
    } else {
        let journal = engine::apply_plan(project.root(), plan)?;
        report.journal = Some(paths.show(journal.path.strip_prefix(project.root()).unwrap_or(&journal.path)));
    }
    let code = if plan.failed.is_empty() { exit::OK } else { exit::FAILURES };
    Ok((report, code))
}

fn cmd_apply(common: &Common, target: &Target, dry_run: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let catalog = load_catalog(common)?;
    let project = load_project(common, err)?;
    let plan = plan(&project, &catalog, target)?;
    let pattern = select_pattern(&catalog, &target.pattern)?;
    let paths = Paths::new(&common.project, common.relative);
    let (report, code) = migrate(&project, &plan, pattern, dry_run, &paths)?;
    report.write(out, common.format)?;
    Ok(code)
}

pub fn unified_diff(files: &[(PathBuf, String, String)]) -> String {
    let mut s = String::new();
    for (path, old, new) in files {
        let p = path.display();
        let diff = similar::TextDiff::from_lines(old.as_str(), new.as_str());
        s.push_str(&diff.unified_diff().context_radius(3).header(&format!("a/{p}"), &format!("b/{p}")).to_string());
    }
    s
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DiagnosticLine<'a> {
    file: String,
    line: usize,
    col: usize,
    pattern_id: u32,
    message: &'a str,
    fix: Fix,
}

#[derive(Serialize)]
struct Fix {
    root: String,
    pattern: String,
}

fn cmd_inspect(common: &Common, fix: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let catalog = load_catalog(common)?;
    let project = load_project(common, err)?;
    let paths = Paths::new(&common.project, common.relative);
    let found = inspect(&project, &catalog);
    if !fix {
        for d in &found {
            match common.format {
                Format::Json => {
                    let line = DiagnosticLine {
                        file: paths.show(&d.file),
                        line: d.line,
                        col: d.col,
                        pattern_id: d.pattern_id,
                        message: &d.message,
                        fix: Fix { root: d.root_selector.clone(), pattern: d.pattern_id.to_string() },
                    };
                    writeln!(out, "{}", serde_json::to_string(&line)?)?;
                }
                Format::Text => {
                    writeln!(
                        out,
                        "{}:{}:{}: warning: {} [pattern {}]\n    {} {}  ->  {}\n    fix: retype apply --root {} --pattern {}",
                        paths.show(&d.file),
                        d.line,
                        d.col,
                        d.message,
                        d.pattern_id,
                        d.declared,
                        d.element,
                        d.suggested,
                        d.root_selector,
                        d.pattern_id
                    )?;
                }
            }
        }
        return Ok(if found.is_empty() { exit::OK } else { exit::FINDINGS });
    }

    // Each fix changes files, so the project is reloaded and re-inspected after every
    // apply; findings whose fix could not be planned are remembered and skipped.
    let mut project = project;
    let mut attempted: Vec<(PathBuf, String, u32)> = Vec::new();
    let mut code = exit::OK;
    loop {
        let next = inspect(&project, &catalog)
            .into_iter()
            .find(|d| !attempted.contains(&(d.file.clone(), d.element.clone(), d.pattern_id)));
        let Some(d) = next else { break };
        attempted.push((d.file.clone(), d.element.clone(), d.pattern_id));
        let pattern = catalog.get(d.pattern_id).expect("diagnostics name catalog patterns");
        let root = project.element(d.root).expect("diagnostics name elements");
        let plan = match plan_migration_with(&project, &root, pattern, ScopeKind::File, PlanOptions::default()) {
            Ok(p) => p,
            Err(e) => {
                writeln!(err, "error: cannot fix {}: {e}", d.root_selector)?;
                code = exit::ERROR;
                continue;
            }
        };
        let (report, c) = migrate(&project, &plan, pattern, false, &paths)?;
        report.write(out, common.format)?;
        if code != exit::ERROR {
            code = code.max(c);
        }
        project = load_project(common, err)?;
    }
    Ok(code)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SuggestionLine<'a> {
    #[serde(flatten)]
    suggestion: &'a retype_core::modes::Suggestion,
    command: String,
}

fn shell_word(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "/._-:#=+,".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

fn cmd_suggest(common: &Common, old: &Path, new: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let catalog = load_catalog(common)?;
    let old_src = fs::read_to_string(old).with_context(|| format!("cannot read {}", old.display()))?;
    let new_src = fs::read_to_string(new).with_context(|| format!("cannot read {}", new.display()))?;
    let rel = selector::relative_to(&common.project, new);
    let (suggestions, warnings) = detect_manual_type_edit(&rel, &old_src, &new_src, &catalog);
    if !warnings.is_empty() {
        for w in &warnings {
            writeln!(err, "error: {w}")?;
        }
        return Ok(exit::ERROR);
    }
    let paths = Paths::new(&common.project, common.relative);
    for s in &suggestions {
        let mut command = format!("retype apply --project {}", shell_word(&common.project.display().to_string()));
        if let Some(c) = &common.catalog {
            command += &format!(" --catalog {}", shell_word(&c.display().to_string()));
        }
        command += &format!(" --root {} --pattern {} --scope file --complete", shell_word(&s.root_selector), s.pattern_id);
        match common.format {
            Format::Json => {
                let mut s = s.clone();
                s.file = PathBuf::from(paths.show(&s.file));
                writeln!(out, "{}", serde_json::to_string(&SuggestionLine { suggestion: &s, command })?)?;
            }
            Format::Text => writeln!(
                out,
                "{}:{}:{}: `{}` changed from {} to {} by hand; {} usage(s) still to migrate [pattern {}]\n    run: {}",
                paths.show(&s.file),
                s.line,
                s.col,
                s.element,
                s.old_type,
                s.new_type,
                s.remaining_usages,
                s.pattern_id,
                command
            )?,
        }
    }
    Ok(if suggestions.is_empty() { exit::OK } else { exit::FINDINGS })
}

fn cmd_undo(common: &Common, journal: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let root = &common.project;
    let journal = match journal {
        Some(j) => j.to_path_buf(),
        None => engine::latest_journal(root)?,
    };
    let undone = engine::undo(root, &journal)?;
    let paths = Paths::new(root, common.relative);
    let files: Vec<String> = undone.record.files.iter().map(|f| paths.show(&f.path)).collect();
    let shown = paths.show(journal.strip_prefix(root).unwrap_or(&journal));
    match common.format {
        Format::Json => writeln!(out, "{}", serde_json::json!({ "journal": shown, "restored": files }))?,
        Format::Text => {
            writeln!(out, "undid {shown}")?;
            for f in files {
                writeln!(out, "  restored {f}")?;
            }
        }
    }
    Ok(exit::OK)
}

fn cmd_list_patterns(common: &Common, out: &mut dyn Write) -> Result<i32> {
    let catalog = load_catalog(common)?;
    for p in catalog.patterns() {
        match common.format {
            Format::Json => writeln!(
                out,
                "{}",
                serde_json::json!({
                    "id": p.id,
                    "from": p.from.to_string(),
                    "to": p.to.to_string(),
                    "mode": p.mode,
                    "priority": p.priority,
                    "rules": p.rules.len(),
                })
            )?,
            Format::Text => {
                let n = p.rules.len();
                writeln!(out, "{}  {}  {}  p{}  {n} rule{}", p.id, p.signature(), p.mode, p.priority, if n == 1 { "" } else { "s" })?
            }
        }
    }
    Ok(exit::OK)
}

fn cmd_validate_spec(common: &Common, path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let path = path.map(Path::to_path_buf).or_else(|| catalog_source(common));
    let result = match &path {
        Some(p) => Catalog::load(&fs::read(p).with_context(|| format!("cannot read catalog {}", p.display()))?),
        None => Ok(Catalog::builtin()),
    };
    let code = if result.is_ok() { exit::OK } else { exit::ERROR };
    match (result, common.format) {
        (Ok(_), Format::Text) => writeln!(out, "OK")?,
        (Ok(_), Format::Json) => writeln!(out, "{}", serde_json::json!({ "ok": true, "issues": [] }))?,
        (Err(e), Format::Text) => {
            for i in &e.issues {
                writeln!(out, "{i}")?;
            }
        }
        (Err(e), Format::Json) => writeln!(out, "{}", serde_json::json!({ "ok": false, "issues": e.issues }))?,
    }
    Ok(code)
}
