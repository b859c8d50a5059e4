use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A resolved type reference.
///
/// Equality ignores `raw`: two references are the same type when their
/// qualified names, array dimensions and type arguments agree.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
pub struct TypeRef {
    pub raw: String,
    pub qualified: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<TypeRef>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dims: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl PartialEq for TypeRef {
    fn eq(&self, other: &Self) -> bool {
        self.qualified == other.qualified && self.dims == other.dims && self.args == other.args
    }
}

impl std::hash::Hash for TypeRef {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.qualified.hash(state);
        self.dims.hash(state);
        self.args.hash(state);
    }
}

impl TypeRef {
    pub fn simple(qualified: &str) -> Self {
        Self { raw: simple_name(qualified).to_string(), qualified: qualified.to_string(), args: Vec::new(), dims: 0 }
    }

    pub fn simple_name(&self) -> &str {
        simple_name(&self.qualified)
    }

    pub fn is_primitive(&self) -> bool {
        self.dims == 0 && is_primitive_name(&self.qualified)
    }

    /// Type variables in catalog patterns are single upper-case letters.
    pub fn is_type_variable(&self) -> bool {
        let mut chars = self.qualified.chars();
        matches!((chars.next(), chars.next()), (Some(c), None) if c.is_ascii_uppercase())
            && self.args.is_empty()
            && self.dims == 0
    }

    /// Match `actual` against `self` used as a pattern, binding type variables.
    ///
    /// A pattern without type arguments accepts any parameterization.
    pub fn matches<'a>(&self, actual: &'a TypeRef, bindings: &mut HashMap<String, &'a TypeRef>) -> bool {
        if self.is_type_variable() {
            return match bindings.get(&self.qualified) {
                Some(bound) => *bound == actual,
                None => {
                    bindings.insert(self.qualified.clone(), actual);
                    true
                }
            };
        }
        if self.qualified != actual.qualified || self.dims != actual.dims {
            return false;
        }
        if self.args.is_empty() {
            return true;
        }
        self.args.len() == actual.args.len() && self.args.iter().zip(&actual.args).all(|(p, a)| p.matches(a, bindings))
    }

    /// Qualified names of every non-primitive, non-variable type mentioned.
    pub fn mentioned_types(&self, out: &mut Vec<String>) {
        if !self.is_type_variable() && !is_primitive_name(&self.qualified) && self.qualified != "?" {
            out.push(self.qualified.clone());
        }
        for a in &self.args {
            a.mentioned_types(out);
        }
    }

    pub fn qualified_display(&self) -> String {
        let mut s = self.qualified.clone();
        if !self.args.is_empty() {
            s.push('<');
            s.push_str(&self.args.iter().map(TypeRef::qualified_display).collect::<Vec<_>>().join(", "));
            s.push('>');
        }
        for _ in 0..self.dims {
            s.push_str("[]");
        }
        s
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.qualified_display())
    }
}

pub(crate) fn simple_name(qualified: &str) -> &str {
    qualified.rsplit('.').next().unwrap_or(qualified)
}

pub(crate) fn is_primitive_name(name: &str) -> bool {
    matches!(name, "boolean" | "byte" | "char" | "short" | "int" | "long" | "float" | "double" | "void")
}

const BUILTIN_PACKAGES: &[(&str, &[&str])] = &[
    (
        "java.lang",
        &[
            "Object", "String", "StringBuilder", "StringBuffer", "Integer", "Long", "Short", "Byte",
            "Character", "Boolean", "Double", "Float", "Number", "Math", "System", "Thread",
            "Runnable", "Iterable", "Comparable", "CharSequence", "Exception", "RuntimeException",
            "Error", "Throwable", "IllegalArgumentException", "IllegalStateException",
            "NullPointerException", "UnsupportedOperationException", "Class", "Enum", "Void",
            "AutoCloseable", "Override", "Deprecated", "SuppressWarnings", "FunctionalInterface",
        ],
    ),
    (
        "java.util",
        &[
            "List", "ArrayList", "LinkedList", "Map", "HashMap", "LinkedHashMap", "TreeMap", "Set",
            "HashSet", "LinkedHashSet", "TreeSet", "Collection", "Collections", "Arrays", "Optional",
            "Iterator", "Objects", "Date", "Calendar", "Random", "Scanner", "Deque", "ArrayDeque",
            "Queue", "Stack", "Vector", "Hashtable", "Properties", "UUID", "Locale", "StringJoiner",
            "Comparator", "OptionalInt", "OptionalLong", "OptionalDouble",
        ],
    ),
    (
        "java.util.function",
        &[
            "Function", "BiFunction", "Predicate", "BiPredicate", "Supplier", "Consumer",
            "BiConsumer", "UnaryOperator", "BinaryOperator", "IntPredicate", "IntFunction",
            "ToIntFunction", "BooleanSupplier", "IntSupplier", "LongSupplier", "DoubleSupplier",
        ],
    ),
    (
        "java.io",
        &[
            "File", "IOException", "InputStream", "OutputStream", "Reader", "Writer",
            "FileInputStream", "FileOutputStream", "FileReader", "FileWriter", "BufferedReader",
            "BufferedWriter", "PrintStream", "PrintWriter", "InputStreamReader",
            "UncheckedIOException", "Serializable", "Closeable",
        ],
    ),
    ("java.nio.file", &["Path", "Paths", "Files", "StandardOpenOption", "FileSystems", "FileSystem"]),
    ("java.util.regex", &["Pattern", "Matcher", "PatternSyntaxException"]),
    (
        "java.time",
        &[
            "Instant", "Duration", "LocalDate", "LocalDateTime", "LocalTime", "ZonedDateTime",
            "ZoneId", "Period", "Clock", "OffsetDateTime",
        ],
    ),
];

/// Qualified name for a simple name from the built-in package table.
pub fn builtin_qualified_name(simple: &str) -> Option<String> {
    BUILTIN_PACKAGES
        .iter()
        .find(|(_, names)| names.contains(&simple))
        .map(|(pkg, _)| format!("{pkg}.{simple}"))
}

/// Simple-name resolution for one compilation unit.
#[derive(Debug, Clone, Default)]
pub struct ImportTable {
    pub package: Option<String>,
    explicit: HashMap<String, String>,
    wildcards: Vec<String>,
    /// Types declared in this file or elsewhere in the same package.
    local: HashMap<String, String>,
}

impl ImportTable {
    pub fn new(package: Option<String>) -> Self {
        Self { package, ..Self::default() }
    }

    pub fn add_import(&mut self, path: &str, wildcard: bool) {
        if wildcard {
            self.wildcards.push(path.to_string());
        } else {
            self.explicit.insert(simple_name(path).to_string(), path.to_string());
        }
    }

    pub fn add_local_type(&mut self, simple: &str, qualified: &str) {
        self.local.insert(simple.to_string(), qualified.to_string());
    }

    pub fn explicit_import(&self, simple: &str) -> Option<&str> {
        self.explicit.get(simple).map(String::as_str)
    }

    pub fn has_wildcard(&self, package: &str) -> bool {
        self.wildcards.iter().any(|w| w == package)
    }

    /// Qualify a (possibly dotted) type name. Unresolvable simple names stay as written.
    pub fn qualify(&self, name: &str) -> String {
        if is_primitive_name(name) || name == "var" || name == "?" {
            return name.to_string();
        }
        let (head, tail) = match name.split_once('.') {
            Some((h, t)) => (h, Some(t)),
            None => (name, None),
        };
        let resolved_head = self
            .explicit
            .get(head)
            .cloned()
            .or_else(|| self.local.get(head).cloned())
            .or_else(|| builtin_qualified_name(head));
        match (resolved_head, tail) {
            (Some(q), None) => q,
            (Some(q), Some(t)) => format!("{q}.{t}"),
            (None, _) => name.to_string(),
        }
    }

    /// Whether `qualified` can be written by its simple name without a new import.
    pub fn is_visible(&self, qualified: &str) -> bool {
        let simple = simple_name(qualified);
        let pkg = qualified.rsplit_once('.').map_or("", |(p, _)| p);
        if let Some(existing) = self.explicit.get(simple) {
            return existing == qualified;
        }
        if let Some(existing) = self.local.get(simple) {
            return existing == qualified;
        }
        pkg == "java.lang" || pkg.is_empty() || self.has_wildcard(pkg) || self.package.as_deref() == Some(pkg)
    }

    /// Whether the simple name of `qualified` is already taken by a different type.
    pub fn simple_name_clashes(&self, qualified: &str) -> bool {
        let simple = simple_name(qualified);
        self.explicit.get(simple).is_some_and(|q| q != qualified) || self.local.get(simple).is_some_and(|q| q != qualified)
    }
}
