//! The transformation-specification catalog: JSON loading, validation and lookup.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jparse::{parse_type, TypeRef};
use crate::template::{check_rule, Template, TemplateError};

const BUILTIN: &str = include_str!("builtin.json");

pub const DEFAULT_MESSAGE: &str = "declared type has a recommended replacement";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Classic,
    #[serde(rename = "Suggested Refactoring")]
    SuggestedRefactoring,
    Inspection,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Classic => "Classic",
            Mode::SuggestedRefactoring => "Suggested Refactoring",
            Mode::Inspection => "Inspection",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub index: usize,
    pub before: Template,
    pub after: Template,
}

impl RewriteRule {
    pub fn score(&self) -> usize {
        self.before.concrete_token_count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeChangePattern {
    pub id: u32,
    pub from: TypeRef,
    pub to: TypeRef,
    pub priority: u32,
    pub mode: Mode,
    pub message: Option<String>,
    pub rules: Vec<RewriteRule>,
}

impl TypeChangePattern {
    pub fn message(&self) -> &str {
        self.message.as_deref().unwrap_or(DEFAULT_MESSAGE)
    }

    /// Bind the pattern's type variables against a declared type that matches `from`.
    pub fn bind_from(&self, actual: &TypeRef) -> Option<HashMap<String, TypeRef>> {
        bind(&self.from, actual)
    }

    pub fn bind_to(&self, actual: &TypeRef) -> Option<HashMap<String, TypeRef>> {
        bind(&self.to, actual)
    }

    /// `from => to` using qualified names, the form accepted by pattern selectors.
    pub fn signature(&self) -> String {
        format!("{} => {}", self.from, self.to)
    }
}

fn bind(pattern: &TypeRef, actual: &TypeRef) -> Option<HashMap<String, TypeRef>> {
    let mut b = HashMap::new();
    pattern.matches(actual, &mut b).then(|| b.into_iter().map(|(k, v)| (k, v.clone())).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    /// Sorted by ascending priority, then ascending id.
    patterns: Vec<TypeChangePattern>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IssueKind {
    Schema,
    DuplicateId,
    Template,
}

/// One catalog violation, located by a JSON path such as `[0].Rules[2].After`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaIssue {
    pub kind: IssueKind,
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct CatalogError {
    pub issues: Vec<SchemaIssue>,
}

impl CatalogError {
    fn single(kind: IssueKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { issues: vec![SchemaIssue { kind, path: path.into(), message: message.into() }] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternDoc {
    #[serde(rename = "From")]
    from: String,
    #[serde(rename = "To")]
    to: String,
    #[serde(rename = "ID")]
    id: u32,
    #[serde(rename = "Priority")]
    priority: u32,
    #[serde(rename = "Mode")]
    mode: Mode,
    #[serde(rename = "Message", default, skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    #[serde(rename = "Rules")]
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    #[serde(rename = "Before")]
    before: String,
    #[serde(rename = "After")]
    after: String,
}

impl Catalog {
    /// The catalog shipped with the tool.
    pub fn builtin() -> Self {
        Self::load(BUILTIN.as_bytes()).expect("built-in catalog is valid")
    }

    /// Parse and validate a catalog document. Either every pattern is valid or nothing is returned.
    pub fn load(document: &[u8]) -> Result<Self, CatalogError> {
        let de = &mut serde_json::Deserializer::from_slice(document);
        let docs: Vec<PatternDoc> = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "$".to_string() } else { path };
            CatalogError::single(IssueKind::Schema, path, e.into_inner().to_string())
        })?;

        let mut issues = Vec::new();
        let mut seen = HashSet::new();
        let mut patterns = Vec::new();
        for (i, doc) in docs.iter().enumerate() {
            let at = |field: &str| format!("[{i}].{field}");
            let mut issue = |kind, path: String, message: String| issues.push(SchemaIssue { kind, path, message });

            if doc.id == 0 {
                issue(IssueKind::Schema, at("ID"), "ID must be a positive integer".into());
            } else if !seen.insert(doc.id) {
                issue(IssueKind::DuplicateId, at("ID"), format!("duplicate pattern ID {}", doc.id));
            }
            if doc.priority == 0 {
                issue(IssueKind::Schema, at("Priority"), "Priority must be a positive integer".into());
            }
            let from = parse_type(&doc.from).map_err(|e| issue(IssueKind::Schema, at("From"), format!("invalid type: {e}")));
            let to = parse_type(&doc.to).map_err(|e| issue(IssueKind::Schema, at("To"), format!("invalid type: {e}")));
            if let (Ok(from), Ok(to)) = (&from, &to) {
                if from == to {
                    issue(IssueKind::Schema, at("To"), "To must differ from From".into());
                }
                let mut defined = Vec::new();
                collect_vars(from, &mut defined);
                let mut used = Vec::new();
                collect_vars(to, &mut used);
                if let Some(v) = used.iter().find(|v| !defined.contains(v)) {
                    issue(IssueKind::Schema, at("To"), format!("type variable {v} is not bound by From"));
                }
            }

            let mut rules = Vec::new();
            for (j, r) in doc.rules.iter().enumerate() {
                let rule_at = |field: &str| format!("[{i}].Rules[{j}].{field}");
                let ctx = |e: TemplateError| format!("pattern {} rule {j}: {e}", doc.id);
                let before = Template::parse(&r.before).map_err(|e| issue(IssueKind::Template, rule_at("Before"), ctx(e)));
                let after = Template::parse(&r.after).map_err(|e| issue(IssueKind::Template, rule_at("After"), ctx(e)));
                if let (Ok(before), Ok(after)) = (before, after) {
                    match check_rule(&before, &after) {
                        Ok(()) => rules.push(RewriteRule { index: j, before, after }),
                        Err(e) => issue(IssueKind::Template, rule_at("After"), ctx(e)),
                    }
                }
            }
            if let (Ok(from), Ok(to)) = (from, to) {
                patterns.push(TypeChangePattern {
                    id: doc.id,
                    from,
                    to,
                    priority: doc.priority,
                    mode: doc.mode,
                    message: doc.message.clone(),
                    rules,
                });
            }
        }
        if !issues.is_empty() {
            return Err(CatalogError { issues });
        }
        patterns.sort_by_key(|p| (p.priority, p.id));
        Ok(Self { patterns })
    }

    /// Serialize back to the catalog document format.
    pub fn to_json(&self) -> String {
        let docs: Vec<PatternDoc> = self
            .patterns
            .iter()
            .map(|p| PatternDoc {
                from: p.from.qualified_display(),
                to: p.to.qualified_display(),
                id: p.id,
                priority: p.priority,
                mode: p.mode,
                message: p.message.clone(),
                rules: p
                    .rules
                    .iter()
                    .map(|r| RuleDoc { before: r.before.text().to_string(), after: r.after.text().to_string() })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&docs).expect("catalog documents always serialize")
    }

    pub fn patterns(&self) -> &[TypeChangePattern] {
        &self.patterns
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&TypeChangePattern> {
        self.patterns.iter().find(|p| p.id == id)
    }

    /// Patterns whose `from` type matches `t`, in priority order.
    pub fn patterns_for_source_type(&self, t: &TypeRef) -> Vec<&TypeChangePattern> {
        self.patterns.iter().filter(|p| p.bind_from(t).is_some()).collect()
    }

    pub fn patterns_with_mode(&self, mode: Mode) -> impl Iterator<Item = &TypeChangePattern> {
        self.patterns.iter().filter(move |p| p.mode == mode)
    }

    /// Resolve a selector: a numeric id or `from=>to` (types as accepted in catalog documents).
    pub fn select(&self, selector: &str) -> Option<&TypeChangePattern> {
        let selector = selector.trim();
        if let Ok(id) = selector.parse::<u32>() {
            return self.get(id);
        }
        let (from, to) = selector.split_once("=>")?;
        let from = parse_type(from.trim()).ok()?;
        let to = parse_type(to.trim()).ok()?;
        self.patterns.iter().find(|p| p.from == from && p.to == to)
    }
}

fn collect_vars(t: &TypeRef, out: &mut Vec<String>) {
    if t.is_type_variable() {
        out.push(t.qualified.clone());
    }
    for a in &t.args {
        collect_vars(a, out);
    }
}
