mod common;

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use splicefuzz::difftest::{bucket_and_report, differential_test, BugKind, BugReport, DiffLimits, Level, Verdict};
use splicefuzz::toolchain::{CompilerSpec, Limits};
use splicefuzz_testkit::fake;

use common::cc;

const PROGRAM: &str = r#"#include <stdio.h>
#include <stdint.h>
static uint32_t mix(uint32_t a, int b) { return a * 2654435761u + (uint32_t)b; }
int main(void) {
    uint32_t h = 7;
    for (int i = 0; i < 40; i++) h = mix(h, i);
    printf("checksum = %016llx\n", (unsigned long long)h);
    return 0;
}
"#;

fn limits() -> DiffLimits {
    DiffLimits { compile: Limits::new(Duration::from_secs(60), None), run: Limits::new(Duration::from_secs(2), None) }
}

fn bug(v: Verdict) -> BugReport {
    match v {
        Verdict::Bug(r) => r,
        Verdict::Pass { .. } => panic!("expected a bug verdict"),
    }
}

/// Run the saved interestingness test against the saved program.
fn interesting(dir: &Path) -> bool {
    Command::new("sh").arg("interesting.sh").arg("prog.c").current_dir(dir).status().unwrap().success()
}

#[test]
fn agreeing_compilers_pass() {
    let v = differential_test(PROGRAM, &[cc(), cc()], &Level::ALL, &limits()).unwrap();
    assert!(matches!(v, Verdict::Pass { .. }));
    assert_eq!(v.matrix().len(), 10);
}

#[test]
fn flipped_checksum_is_miscompilation_with_replayable_report() {
    let tools = tempfile::tempdir().unwrap();
    let flip = CompilerSpec::probe(fake::checksum_flipper(tools.path(), "-O2")).unwrap();
    let compilers = [cc(), flip];
    let r = bug(differential_test(PROGRAM, &compilers, &[Level::O0, Level::O2], &limits()).unwrap());
    assert_eq!(r.kind, BugKind::MiscompilationCandidate);
    assert_eq!(r.bucket, "miscompilation-flipcc-O2-vs-cc-O0");
    assert_eq!(r.cells.len(), 1);

    let out = tempfile::tempdir().unwrap();
    let a = bucket_and_report(&r, PROGRAM, &compilers, &limits(), out.path(), None).unwrap();
    assert_eq!(a.count, 1);
    for f in ["prog.c", "matrix.json", "env.txt", "interesting.sh"] {
        assert!(a.dir.join(f).is_file(), "{f}");
    }
    assert!(interesting(&a.dir));

    // a reduction that introduces undefined behavior must not count
    let ub = PROGRAM.replace("uint32_t h = 7;", "volatile int big = 2147483647;\n    uint32_t h = (uint32_t)(big + 1);");
    std::fs::write(a.dir.join("prog.c"), ub).unwrap();
    assert!(!interesting(&a.dir));
}

#[test]
fn internal_error_is_crash() {
    let tools = tempfile::tempdir().unwrap();
    let ice = CompilerSpec::probe(fake::ice_at(tools.path(), "-O2")).unwrap();
    let compilers = [cc(), ice];
    let r = bug(differential_test(PROGRAM, &compilers, &Level::ALL, &limits()).unwrap());
    assert_eq!(r.kind, BugKind::CompilerCrash);
    assert!(r.bucket.starts_with("crash-icecc-"), "{}", r.bucket);
    let out = tempfile::tempdir().unwrap();
    let a = bucket_and_report(&r, PROGRAM, &compilers, &limits(), out.path(), None).unwrap();
    assert!(interesting(&a.dir));
    // once the crash is gone the program is no longer interesting
    std::fs::write(
        a.dir.join("interesting.sh"),
        std::fs::read_to_string(a.dir.join("interesting.sh")).unwrap().replace("-O2", "-O1"),
    )
    .unwrap();
    assert!(!interesting(&a.dir));
}

#[test]
fn crash_bucket_ignores_program_differences() {
    let tools = tempfile::tempdir().unwrap();
    let ice = CompilerSpec::probe(fake::ice_at(tools.path(), "-O3")).unwrap();
    let other = PROGRAM.replace("i < 40", "i < 41");
    let a = bug(differential_test(PROGRAM, std::slice::from_ref(&ice), &[Level::O0, Level::O3], &limits()).unwrap());
    let b = bug(differential_test(&other, &[ice], &[Level::O0, Level::O3], &limits()).unwrap());
    assert_eq!(a.bucket, b.bucket);
}

#[test]
fn non_terminating_binary_is_hang() {
    let tools = tempfile::tempdir().unwrap();
    let hang = CompilerSpec::probe(fake::hang_at(tools.path(), "-O1")).unwrap();
    let started = std::time::Instant::now();
    let r = bug(differential_test(PROGRAM, &[hang], &[Level::O0, Level::O1, Level::O2], &limits()).unwrap());
    assert_eq!(r.kind, BugKind::HangCandidate);
    assert_eq!(r.bucket, "hang-hangcc-O1");
    assert!(started.elapsed() < Duration::from_secs(30));
}

#[test]
fn rejected_program_is_synthesis_defect() {
    let tools = tempfile::tempdir().unwrap();
    let reject = CompilerSpec::probe(fake::rejecting(tools.path())).unwrap();
    let r = bug(differential_test(PROGRAM, &[cc(), reject.clone()], &[Level::O0, Level::O2], &limits()).unwrap());
    assert_eq!(r.kind, BugKind::SynthesisDefect);
    let again = bug(differential_test(PROGRAM, &[cc(), reject], &[Level::O0, Level::O2], &limits()).unwrap());
    assert_eq!(r.bucket, again.bucket);
}

#[test]
fn repeated_reports_share_bucket_and_count_up() {
    let tools = tempfile::tempdir().unwrap();
    let flip = CompilerSpec::probe(fake::checksum_flipper(tools.path(), "-O3")).unwrap();
    let compilers = [cc(), flip];
    let out = tempfile::tempdir().unwrap();
    let mut counts = vec![];
    for n in [40, 41, 42] {
        let prog = PROGRAM.replace("i < 40", &format!("i < {n}"));
        let r = bug(differential_test(&prog, &compilers, &[Level::O0, Level::O3], &limits()).unwrap());
        let a = bucket_and_report(&r, &prog, &compilers, &limits(), out.path(), None).unwrap();
        assert_eq!(a.bucket, "miscompilation-flipcc-O3-vs-cc-O0");
        counts.push(a.count);
    }
    assert_eq!(counts, [1, 2, 3]);
    assert_eq!(std::fs::read_dir(out.path().join("bugs")).unwrap().count(), 1);
}

#[test]
fn nonzero_exit_differs_from_clean_exit() {
    // the observable includes the exit status, not only stdout
    let prog = "#include <stdio.h>\nint main(void) {\n#ifdef __OPTIMIZE__\n  return 3;\n#endif\n  printf(\"checksum = %016x\\n\", 1);\n  return 0;\n}\n";
    let r = bug(differential_test(prog, &[cc()], &[Level::O0, Level::O2], &limits()).unwrap());
    assert_eq!(r.kind, BugKind::MiscompilationCandidate);
}
