//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#[path = "../support/mod.rs"]
mod support;

mod properties;
mod scenarios;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use retype::selector::resolve_root;
use retype_core::engine::{plan_migration_with, PlanOptions};
use retype_core::refgraph::{NodeRef, Project, ScopeKind};
use retype_core::specmodel::Catalog;
use serde_json::Value;

use scenarios::{Scenario, SCENARIOS};
use support::{copy_dir, fixture, json_lines, retype, tree_hashes, write_files};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig2_replication() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture("fig2"), dir.path());
    let project = dir.path().to_str().unwrap();
    let start = Instant::now();
    let out = retype(&["apply", "--project", project, "--root", "src/A.java#A.f", "--pattern", "1", "--scope", "file", "--format", "json"]);
    let elapsed = start.elapsed();
    check(out.code == 0, || format!("exit {} ({})", out.code, out.stderr))?;
    let report = &json_lines(&out.stdout)[0];
    let edits = report["edits"].as_array().unwrap();
    check(edits.len() == 4, || format!("{} edits reported", edits.len()))?;
    check(report["failed"].as_array().unwrap().is_empty(), || format!("failed usages: {}", report["failed"]))?;
    let got = fs::read(dir.path().join("src/A.java")).unwrap();
    let golden = fs::read(fixture("fig2_expected/src/A.java")).unwrap();
    check(got == golden, || format!("output differs from golden:\n{}", String::from_utf8_lossy(&got)))?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("golden match, 4 edits, 0 failed, {} ms", elapsed.as_millis()))
}

fn fig3_replication() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture("fig3"), dir.path());
    let project = dir.path().to_str().unwrap();

    let out = retype(&["inspect", "--project", project, "--format", "json", "--relative"]);
    check(out.code == 3, || format!("inspect exit {}", out.code))?;
    let lines = json_lines(&out.stdout);
    check(lines.len() == 1, || format!("{} diagnostics", lines.len()))?;
    let d = &lines[0];
    check(d["patternId"] == 2 && d["file"] == "Form.java" && d["line"] == 4 && d["col"] == 5, || format!("diagnostic {d}"))?;

    let fix = retype(&["inspect", "--project", project, "--fix", "--format", "json"]);
    check(fix.code == 0, || format!("--fix exit {} ({})", fix.code, fix.stderr))?;
    let reports = json_lines(&fix.stdout);
    check(reports.len() == 1 && reports[0]["failed"].as_array().unwrap().is_empty(), || format!("fix reports {}", fix.stdout))?;
    let got = fs::read_to_string(dir.path().join("Form.java")).unwrap();
    check(got.contains("    Predicate<String> validation;\n"), || format!("declaration not changed:\n{got}"))?;
    check(!got.contains("validation.apply("), || "an apply call site was left".into())?;
    check(got.matches("validation.test(").count() == 3, || format!("call sites:\n{got}"))?;
    let expected = fs::read_to_string(fixture("fig3_expected/Form.java")).unwrap();
    check(got == expected, || format!("output differs from expected:\n{got}"))?;

    let again = retype(&["inspect", "--project", project]);
    check(again.code == 0 && again.stdout.is_empty(), || format!("still flagged after fix: {}", again.stdout))?;
    Ok("1 diagnostic, fix applied to 3 call sites, 0 failed".into())
}

/// Run one scenario through the CLI; returns the JSON report when the command planned.
fn run_scenario(s: &Scenario) -> Result<Option<Value>, String> {
    let dir = tempfile::tempdir().unwrap();
    write_files(dir.path(), s.files);
    let project = dir.path().to_str().unwrap().to_string();
    let mut args = vec!["apply", "--project", &project, "--root", s.root, "--pattern", s.pattern, "--scope", s.scope, "--format", "json", "--relative"];
    let catalog = dir.path().join("catalog.json").to_str().unwrap().to_string();
    if let Some(doc) = s.catalog {
        fs::write(&catalog, doc).unwrap();
        args.extend(["--catalog", &catalog]);
    }
    if s.complete {
        args.push("--complete");
    }
    let before = tree_hashes(dir.path());
    let out = retype(&args);
    check(out.code == s.exit, || format!("exit {} (expected {}): {}", out.code, s.exit, out.stderr))?;

    for (path, content) in s.files {
        let got = fs::read_to_string(dir.path().join(path)).unwrap();
        let want = s.expected.iter().find(|(p, _)| p == path).map_or(*content, |(_, c)| *c);
        check(got == want, || format!("{path} differs:\n--- got\n{got}--- expected\n{want}"))?;
    }
    if s.exit == 1 {
        let mut after = tree_hashes(dir.path());
        after.remove(Path::new("catalog.json"));
        let mut before = before;
        before.remove(Path::new("catalog.json"));
        check(after == before, || "tree changed after an error".into())?;
        return Ok(None);
    }

    let report = json_lines(&out.stdout).remove(0);
    let failed: Vec<(String, String, String)> = report["failed"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (format!("{}:{}:{}", f["file"].as_str().unwrap(), f["line"], f["col"]), f["reason"].as_str().unwrap().to_string(), f["text"].as_str().unwrap().to_string()))
        .collect();
    let want: Vec<(String, String, String)> = s.failed.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())).collect();
    check(failed == want, || format!("failed usages {failed:?}, expected {want:?}"))?;
    let edges: Vec<&str> = report["edges"].as_array().unwrap().iter().map(|e| e["reason"].as_str().unwrap()).collect();
    check(edges == s.edges, || format!("edges {edges:?}, expected {:?}", s.edges))?;
    Ok(Some(report))
}

fn scenario_suite() -> Outcome {
    let mut bad = Vec::new();
    for s in SCENARIOS {
        if let Err(e) = run_scenario(s) {
            bad.push(format!("[{}] {e}", s.name));
        }
    }
    check(SCENARIOS.len() >= 25, || format!("only {} scenarios", SCENARIOS.len()))?;
    if bad.is_empty() {
        Ok(format!("{}/{} scenarios exact", SCENARIOS.len(), SCENARIOS.len()))
    } else {
        Err(format!("{}/{} scenarios failed:\n{}", bad.len(), SCENARIOS.len(), bad.join("\n")))
    }
}

/// Reference count of every migrated element, recomputed from the project's
/// resolution tables rather than the plan's usage records.
fn independent_found(p: &Project, plan: &retype_core::engine::MigrationPlan) -> usize {
    let mut total = 0;
    for e in &plan.elements {
        let fid = p.file_id(&e.location.file).unwrap();
        let ast = &p.file(fid).parsed.ast;
        let decl = ast
            .descendants(ast.root)
            .into_iter()
            .map(|n| NodeRef::new(fid, n))
            .find(|&n| p.span(n) == e.location.span && p.element(n).is_some_and(|x| x.name == e.name))
            .unwrap();
        total += p.references_to(decl).len() + p.opaque_references_to(decl).len();
    }
    total
}

fn coverage_accounting() -> Outcome {
    let mut checked = 0;
    for s in SCENARIOS.iter().filter(|s| s.exit != 1) {
        let sources = s.files.iter().map(|(p, c)| (p.into(), c.to_string())).collect();
        let p = Project::from_sources(".", sources);
        let catalog = s.catalog.map_or_else(Catalog::builtin, |d| Catalog::load(d.as_bytes()).unwrap());
        let pattern = catalog.select(s.pattern).unwrap();
        let root = resolve_root(&p, s.root).map_err(|e| e.to_string())?;
        let scope = match s.scope {
            "local" => ScopeKind::Local,
            "file" => ScopeKind::File,
            _ => ScopeKind::Project,
        };
        let plan = plan_migration_with(&p, &root, pattern, scope, PlanOptions { complete: s.complete }).map_err(|e| e.to_string())?;
        let c = plan.coverage();
        check(c.rewritten + c.covered + c.failed == c.found, || format!("[{}] {c:?}", s.name))?;
        let found = independent_found(&p, &plan);
        check(found == c.found, || format!("[{}] plan found {} usages, resolution has {found}", s.name, c.found))?;
        let report = run_scenario(s)?.unwrap();
        let rc = &report["coverage"];
        check(rc["found"] == c.found && rc["rewritten"] == c.rewritten && rc["covered"] == c.covered && rc["failed"] == c.failed, || {
            format!("[{}] reported coverage {rc} differs from plan {c:?}", s.name)
        })?;
        checked += 1;
    }
    Ok(format!("{checked} scenarios balanced"))
}

fn catalog_contract() -> Outcome {
    let fig2 = fs::read(fixture("catalogs/fig2.json")).unwrap();
    let catalog = Catalog::load(&fig2).map_err(|e| format!("fig2 catalog rejected: {e}"))?;
    check(catalog.get(1).is_some_and(|p| p.rules.len() == 3), || "fig2 pattern not loaded".into())?;
    let ok = retype(&["validate-spec", fixture("catalogs/fig2.json").to_str().unwrap()]);
    check(ok.code == 0 && ok.stdout == "OK\n", || format!("validate-spec: {} {}", ok.code, ok.stdout))?;

    let text = String::from_utf8(fig2).unwrap();
    let mutations = [
        ("bad Mode", text.replace("\"Suggested Refactoring\"", "\"Sometimes\""), "Mode"),
        (
            "duplicate ID",
            format!("[{0}, {0}]", text.trim().trim_start_matches('[').trim_end_matches(']')),
            "ID",
        ),
        ("orphan after-hole", text.replace("\"$1$.resolve($2$)\"", "\"$1$.resolve($3$)\""), "After"),
    ];
    let mut names = Vec::new();
    for (name, doc, field) in &mutations {
        let err = Catalog::load(doc.as_bytes()).err().ok_or_else(|| format!("{name} accepted"))?;
        check(err.issues.iter().any(|i| i.path.contains(field)), || format!("{name}: diagnostic does not name {field}: {err}"))?;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, doc).unwrap();
        let out = retype(&["validate-spec", path.to_str().unwrap()]);
        check(out.code == 1 && out.stdout.contains(field), || format!("{name}: validate-spec printed {}", out.stdout))?;
        names.push(*name);
    }
    Ok(format!("fig2 loads; rejected {}", names.join(", ")))
}

struct Criterion {
    name: &'static str,
    run: fn() -> Outcome,
}

fn main() {
    panic::set_hook(Box::new(|_| {}));
    let criteria = [
        Criterion { name: "Fig. 2 replication", run: fig2_replication },
        Criterion { name: "Fig. 3 replication", run: fig3_replication },
        Criterion { name: "curated scenario suite", run: scenario_suite },
        Criterion { name: "property (a) match/substitute soundness", run: properties::match_substitute_soundness },
        Criterion { name: "property (b) select_rule equals brute-force argmax", run: properties::select_rule_is_argmax },
        Criterion { name: "property (c) apply then undo restores the tree", run: properties::apply_undo_round_trip },
        Criterion { name: "property (d) edits stay inside the scope anchor", run: properties::scope_containment },
        Criterion { name: "property (e) modified files reparse", run: properties::modified_files_reparse },
        Criterion { name: "catalog contract", run: catalog_contract },
        Criterion { name: "coverage accounting", run: coverage_accounting },
    ];
    let mut failures = 0;
    let mut property_time = Duration::ZERO;
    for c in &criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        if c.name.starts_with("property") {
            property_time += start.elapsed();
        }
        match outcome {
            Ok(detail) => println!("PASS  {}  ({detail})", c.name),
            Err(why) => {
                failures += 1;
                println!("FAIL  {}: {why}", c.name);
            }
        }
    }
    if property_time < Duration::from_secs(60) {
        println!("PASS  property suites under 60 s  ({:.1} s)", property_time.as_secs_f64());
    } else {
        failures += 1;
        println!("FAIL  property suites under 60 s: took {:.1} s", property_time.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
