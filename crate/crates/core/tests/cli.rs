mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use splicefuzz_testkit::{fake, fixtures, gen};

use common::{write_stub_corpus, StubFile};

fn splicefuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splicefuzz")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `key=value` pairs of the last line that has `key`.
fn field(out: &str, key: &str) -> Option<String> {
    out.lines()
        .rev()
        .flat_map(|l| l.split_whitespace())
        .find_map(|w| w.strip_prefix(&format!("{key}=")).map(str::to_string))
}

/// A small database built through `build-db`, shared by the tests here.
fn small_db() -> &'static PathBuf {
    static DB: OnceLock<PathBuf> = OnceLock::new();
    DB.get_or_init(|| {
        let root = tempfile::tempdir().unwrap().keep();
        let corpus = root.join("corpus");
        let generated = gen::numeric_corpus(5, 24);
        let mut files: Vec<StubFile> = generated
            .iter()
            .map(|(n, t)| StubFile { name: n, text: t, response: Some(gen::stub_response(t)) })
            .collect();
        files.push(StubFile { name: "func1.c", text: fixtures::FUNC1, response: Some(gen::stub_response(fixtures::FUNC1)) });
        write_stub_corpus(&corpus, &files);
        let db = root.join("db");
        let o = splicefuzz(&["build-db", "--corpus", s(&corpus), "--out", s(&db), "--llm", "stub"]);
        assert!(o.status.success(), "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
        assert!(field(&stdout(&o), "admitted").unwrap().parse::<usize>().unwrap() >= 20);
        db
    })
}

#[test]
fn synthesize_is_reproducible() {
    let db = small_db();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.c");
    let b = dir.path().join("b.c");
    for out in [&a, &b] {
        let o = splicefuzz(&["synthesize", "--db", s(db), "--iters", "20", "--rng-seed", "9", "--out", s(out)]);
        assert!(o.status.success());
        assert!(field(&stdout(&o), "checksum").is_some());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn synthesize_audit_writes_log() {
    let db = small_db();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.c");
    let o = splicefuzz(&["synthesize", "--db", s(db), "--iters", "15", "--rng-seed", "2", "--out", s(&out), "--audit"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(field(&stdout(&o), "audit").as_deref(), Some("clean"));
    let log = std::fs::read_to_string(dir.path().join("p.log")).unwrap();
    assert!(log.lines().last().unwrap().starts_with("C\t"));
    assert!(dir.path().join("p.audit.c").is_file());
}

#[test]
fn stats_reports_entries() {
    let o = splicefuzz(&["stats", "--db", s(small_db())]);
    assert!(o.status.success());
    let n: usize = field(&stdout(&o), "entries").unwrap().parse().unwrap();
    assert!(n >= 20);
}

#[test]
fn fuzz_with_mismatching_compiler_files_bugs() {
    let db = small_db();
    let tools = tempfile::tempdir().unwrap();
    let flip = fake::checksum_flipper(tools.path(), "-O3");
    let out = tempfile::tempdir().unwrap();
    let o = splicefuzz(&[
        "fuzz", "--db", s(db), "--compilers", &format!("cc,{}", s(&flip)), "--levels", "O0,O3",
        "--out-dir", s(out.path()), "--rounds", "1", "--mutants", "2", "--iters", "5",
    ]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert_eq!(field(&text, "bugs").as_deref(), Some("2"), "{text}");
    assert_eq!(field(&text, "validity_defects").as_deref(), Some("0"));
    let bucket = out.path().join("bugs").join("miscompilation-flipcc-O3-vs-cc-O0");
    for n in ["1", "2"] {
        assert!(bucket.join(n).join("prog.c").is_file());
        assert_eq!(std::fs::read_to_string(bucket.join(n).join("triage.txt")).unwrap(), "compiler-bug\n");
    }
    assert!(out.path().join("summary.json").is_file());
}

#[test]
fn fuzz_with_agreeing_compilers_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = splicefuzz(&[
        "fuzz", "--db", s(small_db()), "--levels", "O0,O2", "--out-dir", s(out.path()), "--rounds", "1",
        "--mutants", "2", "--iters", "5",
    ]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert_eq!(field(&text, "bugs").as_deref(), Some("0"), "{text}");
    assert_eq!(field(&text, "passes").as_deref(), Some("2"));
}

#[test]
fn check_flags_inconsistent_compiler() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("p.c");
    std::fs::write(&prog, "#include <stdio.h>\nint main(void) { printf(\"checksum = %016x\\n\", 5); return 0; }\n").unwrap();
    let ok = splicefuzz(&["check", "--file", s(&prog), "--compiler", "cc"]);
    assert!(ok.status.success());
    assert_eq!(field(&stdout(&ok), "verdict").as_deref(), Some("pass"));
    let flip = fake::checksum_flipper(dir.path(), "-O3");
    let bad = splicefuzz(&["check", "--file", s(&prog), "--compiler", s(&flip)]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(field(&stdout(&bad), "verdict").as_deref(), Some("miscompilation-candidate"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none");
    let cases: Vec<Vec<&str>> = vec![
        vec!["stats", "--db", s(&missing)],
        vec!["synthesize", "--db", s(&missing), "--out", "x.c"],
        vec!["build-db", "--corpus", s(&missing), "--out", s(dir.path())],
        vec!["fuzz", "--db", s(small_db()), "--compilers", "no-such-cc-xyz", "--out-dir", s(dir.path())],
        vec!["fuzz", "--db", s(small_db()), "--levels", "O4", "--out-dir", s(dir.path())],
        vec!["synthesize", "--db", s(small_db()), "--out", "x.c", "--iters", "-3"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = splicefuzz(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn runtime_failure_exits_1() {
    // a database directory whose entry is unreadable JSON
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db");
    std::fs::create_dir_all(db.join("entries")).unwrap();
    std::fs::copy(small_db().join("manifest.json"), db.join("manifest.json")).unwrap();
    let o = splicefuzz(&["stats", "--db", s(&db)]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn build_db_does_not_touch_other_commands_database() {
    let db = small_db();
    let before = std::fs::read(db.join("manifest.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    splicefuzz(&["synthesize", "--db", s(db), "--out", s(&dir.path().join("p.c")), "--iters", "5"]);
    splicefuzz(&["stats", "--db", s(db)]);
    assert_eq!(std::fs::read(db.join("manifest.json")).unwrap(), before);
}
