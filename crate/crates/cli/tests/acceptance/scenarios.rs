//! Curated migrations with frozen expected output. Every file not listed under
//! `expected` must be left byte-identical.

pub struct Scenario {
    pub name: &'static str,
    pub files: &'static [(&'static str, &'static str)],
    /// Catalog document to use instead of the built-in one.
    pub catalog: Option<&'static str>,
    pub root: &'static str,
    pub pattern: &'static str,
    pub scope: &'static str,
    pub complete: bool,
    pub exit: i32,
    pub expected: &'static [(&'static str, &'static str)],
    /// `(file:line:col, reason, text)` in report order.
    pub failed: &'static [(&'static str, &'static str, &'static str)],
    pub edges: &'static [&'static str],
}

const MONEY: &str = r#"[{"From": "demo.Money", "To": "demo.Cents", "ID": 7, "Priority": 1, "Mode": "Classic",
  "Rules": [
    {"Before": "$1$.plus($2$, $2$)", "After": "$1$.doubled($2$)"},
    {"Before": "$1$.plus($2$, $3$)", "After": "$1$.add($2$).add($3$)"}
  ]}]"#;

const EMPTINESS: &str = r#"[{"From": "java.lang.String", "To": "java.lang.StringBuilder", "ID": 9, "Priority": 1, "Mode": "Classic",
  "Rules": [{"Before": "$1$.isEmpty()", "After": "$1$.length() == 0"}]}]"#;

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "field, file scope, three rules and import maintenance",
        files: &[("src/A.java", include_str!("../fixtures/fig2/src/A.java"))],
        catalog: None,
        root: "src/A.java#A.f",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[("src/A.java", include_str!("../fixtures/fig2_expected/src/A.java"))],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "local variable, local scope, initializer inflow",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    boolean m(String name) {
        File dir = new File(name);
        return dir.exists() && dir.isDirectory();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.m.dir",
        pattern: "1",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;
import java.nio.file.Paths;

class A {
    boolean m(String name) {
        Path dir = Paths.get(name);
        return Files.exists(dir) && Files.isDirectory(dir);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "parameter root rewrites call-site arguments",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    boolean has(File f) {
        return f.exists();
    }

    boolean run() {
        return has(new File(\"data\"));
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.has.f",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;
import java.nio.file.Paths;

class A {
    boolean has(Path f) {
        return Files.exists(f);
    }

    boolean run() {
        return has(Paths.get(\"data\"));
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "assignment edge pulls in a local",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File base;

    boolean m() {
        File copy = base;
        return copy.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.base",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    Path base;

    boolean m() {
        Path copy = base;
        return Files.exists(copy);
    }
}
",
        )],
        failed: &[],
        edges: &["Assignment"],
    },
    Scenario {
        name: "argument-passing edge pulls in a parameter",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File root = new File(\"/srv\");

    void start() {
        check(root);
    }

    void check(File dir) {
        if (dir.isDirectory()) {
            System.out.println(dir.getName());
        }
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.root",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;
import java.nio.file.Paths;

class A {
    Path root = Paths.get(\"/srv\");

    void start() {
        check(root);
    }

    void check(Path dir) {
        if (Files.isDirectory(dir)) {
            System.out.println(dir.getFileName().toString());
        }
    }
}
",
        )],
        failed: &[],
        edges: &["ArgumentPassing"],
    },
    Scenario {
        name: "return-flow edge pulls in the method and its callers",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File pick(String name) {
        File chosen = new File(name);
        return chosen;
    }

    boolean ok() {
        return pick(\"a\").exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.pick.chosen",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;
import java.nio.file.Paths;

class A {
    Path pick(String name) {
        Path chosen = Paths.get(name);
        return chosen;
    }

    boolean ok() {
        return Files.exists(pick(\"a\"));
    }
}
",
        )],
        failed: &[],
        edges: &["ReturnFlow"],
    },
    Scenario {
        name: "field-access edge pulls in another class's field",
        files: &[(
            "A.java",
            "import java.io.File;

class Holder {
    File target;
}

class A {
    void put(Holder h) {
        File out = new File(\"out\");
        h.target = out;
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.put.out",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Path;
import java.nio.file.Paths;

class Holder {
    Path target;
}

class A {
    void put(Holder h) {
        Path out = Paths.get(\"out\");
        h.target = out;
    }
}
",
        )],
        failed: &[],
        edges: &["FieldAccess"],
    },
    Scenario {
        name: "reference without a rule fails with NoMatchingRule",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File log;

    long size() {
        return log.length();
    }

    boolean present() {
        return log.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.log",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 2,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    Path log;

    long size() {
        return log.length();
    }

    boolean present() {
        return Files.exists(log);
    }
}
",
        )],
        failed: &[("A.java:7:16", "NoMatchingRule", "log")],
        edges: &[],
    },
    Scenario {
        name: "reference inside an unsupported statement fails with OpaqueContext",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File cache;

    void clear() {
        try {
            cache.delete();
        } finally {
        }
    }

    boolean ready() {
        return cache.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.cache",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 2,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    Path cache;

    void clear() {
        try {
            cache.delete();
        } finally {
        }
    }

    boolean ready() {
        return Files.exists(cache);
    }
}
",
        )],
        failed: &[("A.java:8:13", "OpaqueContext", "cache")],
        edges: &[],
    },
    Scenario {
        name: "flow to a field outside local scope fails with OutOfScope",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File last;

    void remember(String name) {
        File f = new File(name);
        last = f;
        f.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.remember.f",
        pattern: "1",
        scope: "local",
        complete: false,
        exit: 2,
        expected: &[(
            "A.java",
            "import java.io.File;
import java.nio.file.Files;
import java.nio.file.Path;
import java.nio.file.Paths;

class A {
    File last;

    void remember(String name) {
        Path f = Paths.get(name);
        last = f;
        Files.exists(f);
    }
}
",
        )],
        failed: &[("A.java:8:16", "OutOfScope", "f")],
        edges: &[],
    },
    Scenario {
        name: "reference in another file fails with OutOfScope under file scope",
        files: &[
            (
                "A.java",
                "import java.io.File;

public class A {
    File home;

    boolean ok() {
        return home.exists();
    }
}
",
            ),
            (
                "B.java",
                "class B {
    boolean check(A a) {
        return a.home.exists();
    }
}
",
            ),
        ],
        catalog: None,
        root: "A.java#A.home",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 2,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

public class A {
    Path home;

    boolean ok() {
        return Files.exists(home);
    }
}
",
        )],
        failed: &[("B.java:3:16", "OutOfScope", "a.home")],
        edges: &[],
    },
    Scenario {
        name: "project scope rewrites other files and adds their imports",
        files: &[
            (
                "A.java",
                "import java.io.File;

public class A {
    File home;

    boolean ok() {
        return home.exists();
    }
}
",
            ),
            (
                "B.java",
                "class B {
    boolean check(A a) {
        return a.home.exists();
    }
}
",
            ),
        ],
        catalog: None,
        root: "A.java#A.home",
        pattern: "1",
        scope: "project",
        complete: false,
        exit: 0,
        expected: &[
            (
                "A.java",
                "import java.nio.file.Files;
import java.nio.file.Path;

public class A {
    Path home;

    boolean ok() {
        return Files.exists(home);
    }
}
",
            ),
            (
                "B.java",
                "import java.nio.file.Files;

class B {
    boolean check(A a) {
        return Files.exists(a.home);
    }
}
",
            ),
        ],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "unresolvable overload fails with AmbiguousOverload",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File src;

    void send() {
        copy(src, null);
    }

    void copy(File from, String to) {}

    void copy(File from, Integer to) {}
}
",
        )],
        catalog: None,
        root: "A.java#A.src",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 2,
        expected: &[(
            "A.java",
            "import java.io.File;
import java.nio.file.Path;

class A {
    Path src;

    void send() {
        copy(src, null);
    }

    void copy(File from, String to) {}

    void copy(File from, Integer to) {}
}
",
        )],
        failed: &[("A.java:7:14", "AmbiguousOverload", "src")],
        edges: &[],
    },
    Scenario {
        name: "null checks and null assignments need no rule",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File f;

    void reset() {
        if (f != null) {
            f = null;
        }
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.f",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Path;

class A {
    Path f;

    void reset() {
        if (f != null) {
            f = null;
        }
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "type variable binds to the declared type argument",
        files: &[(
            "Rules.java",
            "import java.util.function.Function;

class Rules {
    boolean accept(Function<Integer, Boolean> positive, int value) {
        return positive.apply(value);
    }
}
",
        )],
        catalog: None,
        root: "Rules.java#Rules.accept.positive",
        pattern: "2",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "Rules.java",
            "import java.util.function.Predicate;

class Rules {
    boolean accept(Predicate<Integer> positive, int value) {
        return positive.test(value);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "type arguments that do not fit the pattern are rejected",
        files: &[(
            "Rules.java",
            "import java.util.function.Function;

class Rules {
    int measure(Function<String, Integer> size, String s) {
        return size.apply(s);
    }
}
",
        )],
        catalog: None,
        root: "Rules.java#Rules.measure.size",
        pattern: "2",
        scope: "local",
        complete: false,
        exit: 1,
        expected: &[],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "repeated hole only matches equal subexpressions",
        files: &[
            ("demo/Money.java", "package demo;\n\npublic class Money {\n}\n"),
            ("demo/Cents.java", "package demo;\n\npublic class Cents {\n}\n"),
            (
                "demo/A.java",
                "package demo;

class A {
    int total(Money m, int x, int y) {
        m.plus(x, x);
        m.plus(x, y);
        return 0;
    }
}
",
            ),
        ],
        catalog: Some(MONEY),
        root: "demo/A.java#A.total.m",
        pattern: "7",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "demo/A.java",
            "package demo;

class A {
    int total(Cents m, int x, int y) {
        m.doubled(x);
        m.add(x).add(y);
        return 0;
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "looser result is parenthesized under a tighter operator",
        files: &[(
            "A.java",
            "class A {
    boolean m(String s) {
        return !s.isEmpty() || s.isEmpty();
    }

    boolean n(String s) {
        boolean e = s.isEmpty();
        return e;
    }
}
",
        )],
        catalog: Some(EMPTINESS),
        root: "A.java#A.m.s",
        pattern: "9",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "class A {
    boolean m(StringBuilder s) {
        return !(s.length() == 0) || s.length() == 0;
    }

    boolean n(String s) {
        boolean e = s.isEmpty();
        return e;
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "this-qualified field with a constructor assignment",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    private File dir;

    A(String path) {
        this.dir = new File(path);
    }

    boolean valid() {
        return this.dir.isDirectory();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.dir",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;
import java.nio.file.Paths;

class A {
    private Path dir;

    A(String path) {
        this.dir = Paths.get(path);
    }

    boolean valid() {
        return Files.isDirectory(this.dir);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "clashing simple name is written qualified",
        files: &[(
            "A.java",
            "import java.io.File;
import com.acme.Path;

class A {
    File f;
    Path other;

    boolean ok() {
        return f.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.f",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import com.acme.Path;
import java.nio.file.Files;

class A {
    java.nio.file.Path f;
    Path other;

    boolean ok() {
        return Files.exists(f);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "co-declared fields change together",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File a, b;

    boolean both() {
        return a.exists() && b.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.a",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    Path a, b;

    boolean both() {
        return Files.exists(a) && Files.exists(b);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "import inserted before a greater existing import",
        files: &[(
            "Clock.java",
            "import java.util.Date;

class Clock {
    long stamp() {
        Date now = new Date();
        return now.getTime();
    }
}
",
        )],
        catalog: None,
        root: "Clock.java#Clock.stamp.now",
        pattern: "4",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "Clock.java",
            "import java.time.Instant;

class Clock {
    long stamp() {
        Instant now = Instant.now();
        return now.toEpochMilli();
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "root bound as an argument rather than a receiver",
        files: &[(
            "Check.java",
            "import java.util.regex.Pattern;

class Check {
    boolean valid(String input, String re) {
        return input.matches(re) || Pattern.matches(re, input);
    }
}
",
        )],
        catalog: None,
        root: "Check.java#Check.valid.re",
        pattern: "3",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "Check.java",
            "import java.util.regex.Pattern;

class Check {
    boolean valid(String input, Pattern re) {
        return re.matcher(input).matches() || re.matcher(input).matches();
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "pattern selected by from=>to with identity rules",
        files: &[(
            "Report.java",
            "class Report {
    String render(String title) {
        StringBuffer sb = new StringBuffer(title);
        sb.append(\": ok\");
        return sb.toString();
    }
}
",
        )],
        catalog: None,
        root: "Report.java#Report.render.sb",
        pattern: "java.lang.StringBuffer=>java.lang.StringBuilder",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "Report.java",
            "class Report {
    String render(String title) {
        StringBuilder sb = new StringBuilder(title);
        sb.append(\": ok\");
        return sb.toString();
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "completing a manual declaration change",
        files: &[(
            "A.java",
            "import java.nio.file.Path;

class A {
    Path f;

    boolean ok() {
        return f.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.f",
        pattern: "1",
        scope: "file",
        complete: true,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    Path f;

    boolean ok() {
        return Files.exists(f);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "local variable shadowing the root field is untouched",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    File f;

    boolean m() {
        String f = \"x\";
        return f.isEmpty();
    }

    boolean n() {
        return f.exists();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.f",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    Path f;

    boolean m() {
        String f = \"x\";
        return f.isEmpty();
    }

    boolean n() {
        return Files.exists(f);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "reference inside a lambda body",
        files: &[(
            "A.java",
            "import java.io.File;
import java.util.List;

class A {
    long count(List<File> files, File skip) {
        return files.stream().filter(x -> !skip.exists()).count();
    }
}
",
        )],
        catalog: None,
        root: "A.java#A.count.skip",
        pattern: "1",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.io.File;
import java.nio.file.Files;
import java.nio.file.Path;
import java.util.List;

class A {
    long count(List<File> files, Path skip) {
        return files.stream().filter(x -> !Files.exists(skip)).count();
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "method return type as the root",
        files: &[(
            "Store.java",
            "import java.io.File;

class Store {
    File location() {
        return new File(\"/var/store\");
    }

    String describe() {
        return location().getAbsolutePath();
    }
}
",
        )],
        catalog: None,
        root: "Store.java#Store.location",
        pattern: "1",
        scope: "file",
        complete: false,
        exit: 0,
        expected: &[(
            "Store.java",
            "import java.nio.file.Path;
import java.nio.file.Paths;

class Store {
    Path location() {
        return Paths.get(\"/var/store\");
    }

    String describe() {
        return location().toAbsolutePath().toString();
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "unknown pattern changes nothing",
        files: &[("A.java", "import java.io.File;\n\nclass A {\n    File f;\n}\n")],
        catalog: None,
        root: "A.java#A.f",
        pattern: "42",
        scope: "file",
        complete: false,
        exit: 1,
        expected: &[],
        failed: &[],
        edges: &[],
    },
    Scenario {
        name: "root selected by line and column",
        files: &[(
            "A.java",
            "import java.io.File;

class A {
    boolean m(File f) {
        return f.getParentFile() != null && f.isDirectory();
    }
}
",
        )],
        catalog: None,
        root: "A.java:4:20",
        pattern: "1",
        scope: "local",
        complete: false,
        exit: 0,
        expected: &[(
            "A.java",
            "import java.nio.file.Files;
import java.nio.file.Path;

class A {
    boolean m(Path f) {
        return f.getParent() != null && Files.isDirectory(f);
    }
}
",
        )],
        failed: &[],
        edges: &[],
    },
];
