//! Differential testing: build one program with every compiler at every
//! optimization level, run each binary, and turn disagreements into bug
//! reports with artifacts on disk.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::toolchain::{compile_c, run_limited, CompilerSpec, Exit, Limits, ToolError, GIB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    O0,
    O1,
    Os,
    O2,
    O3,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::O0, Level::O1, Level::Os, Level::O2, Level::O3];

    pub fn flag(self) -> &'static str {
        match self {
            Level::O0 => "-O0",
            Level::O1 => "-O1",
            Level::Os => "-Os",
            Level::O2 => "-O2",
            Level::O3 => "-O3",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.flag()[1..])
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_start_matches('-');
        Level::ALL
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown optimization level `{s}` (expected O0, O1, Os, O2 or O3)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLimits {
    pub compile: Limits,
    pub run: Limits,
}

impl Default for DiffLimits {
    /// 200 s and 1 GiB per compilation, 10 s and 1 GiB per run.
    fn default() -> Self {
        DiffLimits {
            compile: Limits::new(Duration::from_secs(200), Some(GIB)),
            run: Limits::new(Duration::from_secs(10), Some(GIB)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CompileResult {
    Ok,
    Error { stderr: String },
    Crash { signal: Option<i32>, text: String },
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunResult {
    Ok { stdout: String },
    /// Killed by a signal, or exited nonzero.
    Crash { signal: Option<i32>, code: Option<i32>, stderr: String },
    Timeout,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub compiler: String,
    pub level: Level,
    pub compile: CompileResult,
    pub run: RunResult,
}

impl TestOutcome {
    pub fn cell(&self) -> String {
        format!("{}-{}", self.compiler, self.level)
    }

    /// What the run showed, when it finished: its output, or how it died.
    fn observable(&self) -> Option<String> {
        match &self.run {
            RunResult::Ok { stdout } => Some(stdout.clone()),
            RunResult::Crash { signal: Some(s), .. } => Some(format!("<signal {s}>")),
            RunResult::Crash { code, .. } => Some(format!("<exit {}>", code.unwrap_or(-1))),
            RunResult::Timeout | RunResult::Skipped => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BugKind {
    CompilerCrash,
    MiscompilationCandidate,
    HangCandidate,
    SynthesisDefect,
}

impl fmt::Display for BugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BugKind::CompilerCrash => "compiler-crash",
            BugKind::MiscompilationCandidate => "miscompilation-candidate",
            BugKind::HangCandidate => "hang-candidate",
            BugKind::SynthesisDefect => "synthesis-defect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub kind: BugKind,
    pub bucket: String,
    /// Indices into `matrix` of the cells that triggered the verdict.
    pub cells: Vec<usize>,
    pub matrix: Vec<TestOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass { matrix: Vec<TestOutcome> },
    Bug(BugReport),
}

impl Verdict {
    pub fn matrix(&self) -> &[TestOutcome] {
        match self {
            Verdict::Pass { matrix } => matrix,
            Verdict::Bug(r) => &r.matrix,
        }
    }
}

const ICE_SIGNATURES: [&str; 4] = [
    "internal compiler error",
    "PLEASE submit a bug report",
    "frontend command failed",
    "Please submit a full bug report",
];

/// Write `source` into `dir` and compile it at `level`. Returns the result
/// and, when it succeeded, the binary.
pub fn compile_one(
    source: &str,
    compiler: &CompilerSpec,
    level: Level,
    dir: &Path,
    limits: &Limits,
) -> Result<(CompileResult, Option<PathBuf>), ToolError> {
    let stem = format!("{}_{level}", sanitize(&compiler.name));
    let (out, bin) = compile_c(compiler, source, dir, &stem, &[level.flag()], limits)?;
    let stderr = out.stderr_str();
    let ice = ICE_SIGNATURES.iter().any(|s| stderr.contains(s));
    Ok(match out.exit {
        Exit::Code(0) if bin.exists() => (CompileResult::Ok, Some(bin)),
        Exit::Code(0) => (CompileResult::Error { stderr: "compiler produced no binary".into() }, None),
        Exit::Timeout => (CompileResult::Timeout, None),
        Exit::Signal(s) => (CompileResult::Crash { signal: Some(s), text: stderr }, None),
        Exit::Code(_) if ice => (CompileResult::Crash { signal: None, text: stderr }, None),
        Exit::Code(_) => (CompileResult::Error { stderr }, None),
    })
}

pub fn run_one(binary: &Path, limits: &Limits) -> Result<RunResult, ToolError> {
    let out = run_limited(&mut Command::new(binary), limits)?;
    Ok(match out.exit {
        Exit::Code(0) => RunResult::Ok { stdout: out.stdout_str() },
        Exit::Code(c) => RunResult::Crash { signal: None, code: Some(c), stderr: out.stderr_str() },
        Exit::Signal(s) => RunResult::Crash { signal: Some(s), code: None, stderr: out.stderr_str() },
        Exit::Timeout => RunResult::Timeout,
    })
}

/// Whether stdout is exactly one checksum line.
pub fn is_checksum_output(stdout: &str) -> bool {
    let mut lines = stdout.lines();
    let ok = lines.next().and_then(|l| l.strip_prefix("checksum = ")).is_some_and(|h| {
        h.len() == 16 && h.bytes().all(|b| b.is_ascii_hexdigit())
    });
    ok && lines.next().is_none() && stdout.ends_with('\n')
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Every compiler × level cell, compiled and (when that worked) run.
pub fn outcome_matrix(
    program: &str,
    compilers: &[CompilerSpec],
    levels: &[Level],
    limits: &DiffLimits,
) -> Result<Vec<TestOutcome>, ToolError> {
    let dir = tempfile::tempdir()?;
    let cells: Vec<(&CompilerSpec, Level)> = compilers.iter().flat_map(|c| levels.iter().map(move |&l| (c, l))).collect();
    cells
        .par_iter()
        .map(|&(c, level)| {
            let cell_dir = dir.path().join(format!("{}_{level}", sanitize(&c.name)));
            std::fs::create_dir_all(&cell_dir)?;
            let (compile, bin) = compile_one(program, c, level, &cell_dir, &limits.compile)?;
            let run = match bin {
                Some(b) => run_one(&b, &limits.run)?,
                None => RunResult::Skipped,
            };
            Ok(TestOutcome { compiler: c.name.clone(), level, compile, run })
        })
        .collect()
}

/// Decide a verdict from a finished matrix. Precedence: compiler crash,
/// synthesis defect (compile error), differing outputs, partial timeout.
pub fn classify(matrix: Vec<TestOutcome>) -> Verdict {
    let pick = |f: &dyn Fn(&TestOutcome) -> bool| -> Vec<usize> {
        matrix.iter().enumerate().filter(|(_, o)| f(o)).map(|(i, _)| i).collect()
    };
    let crashes = pick(&|o| matches!(o.compile, CompileResult::Crash { .. } | CompileResult::Timeout));
    if !crashes.is_empty() {
        let bucket = crash_bucket(&matrix[crashes[0]]);
        return Verdict::Bug(BugReport { kind: BugKind::CompilerCrash, bucket, cells: crashes, matrix });
    }
    let errors = pick(&|o| matches!(o.compile, CompileResult::Error { .. }));
    if !errors.is_empty() {
        let first = &matrix[errors[0]];
        let CompileResult::Error { stderr } = &first.compile else { unreachable!() };
        let line = stderr.lines().find(|l| l.contains("error")).unwrap_or("");
        let bucket = format!("synthesis-defect-{}", short_hash(&normalize(line)));
        return Verdict::Bug(BugReport { kind: BugKind::SynthesisDefect, bucket, cells: errors, matrix });
    }
    // group finished runs by what they showed, in first-seen order
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, o) in matrix.iter().enumerate() {
        if let Some(obs) = o.observable() {
            match groups.iter_mut().find(|(k, _)| *k == obs) {
                Some((_, v)) => v.push(i),
                None => groups.push((obs, vec![i])),
            }
        }
    }
    if groups.len() > 1 {
        let majority = groups.iter().max_by_key(|(_, v)| v.len()).map(|(_, v)| v[0]).unwrap();
        let minority = groups.iter().min_by_key(|(_, v)| v.len()).map(|(_, v)| v.clone()).unwrap();
        let bucket = format!("miscompilation-{}-vs-{}", matrix[minority[0]].cell(), matrix[majority].cell());
        return Verdict::Bug(BugReport { kind: BugKind::MiscompilationCandidate, bucket, cells: minority, matrix });
    }
    let timeouts = pick(&|o| o.run == RunResult::Timeout);
    if !timeouts.is_empty() && timeouts.len() < matrix.len() {
        let names: Vec<String> = timeouts.iter().map(|&i| matrix[i].cell()).collect();
        let bucket = format!("hang-{}", names.join("_"));
        return Verdict::Bug(BugReport { kind: BugKind::HangCandidate, bucket, cells: timeouts, matrix });
    }
    Verdict::Pass { matrix }
}

pub fn differential_test(
    program: &str,
    compilers: &[CompilerSpec],
    levels: &[Level],
    limits: &DiffLimits,
) -> Result<Verdict, ToolError> {
    Ok(classify(outcome_matrix(program, compilers, levels, limits)?))
}

fn short_hash(s: &str) -> String {
    let d = Sha256::digest(s.as_bytes());
    d.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Strip what varies between runs of the same crash: paths, numbers,
/// addresses and the file being compiled.
fn normalize(line: &str) -> String {
    let mut out = String::new();
    for word in line.split_whitespace() {
        let w = if word.contains('/') {
            "<path>".to_string()
        } else {
            word.chars().map(|c| if c.is_ascii_digit() { '#' } else { c }).collect()
        };
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&w);
    }
    out
}

/// The line that identifies a compiler crash: the internal-error message or,
/// failing that, the first line of output.
fn crash_signature(o: &TestOutcome) -> String {
    match &o.compile {
        CompileResult::Crash { text, signal } => {
            let line = text
                .lines()
                .find(|l| l.contains("internal compiler error") || l.contains("Assertion") || l.contains("UNREACHABLE"))
                .or_else(|| text.lines().find(|l| l.trim_start().starts_with("#0") || l.contains("Stack dump")))
                .or_else(|| text.lines().find(|l| !l.trim().is_empty()));
            match (line, signal) {
                (Some(l), _) => l.to_string(),
                (None, Some(s)) => format!("signal {s}"),
                (None, None) => "crash".into(),
            }
        }
        CompileResult::Timeout => "compile timeout".into(),
        _ => String::new(),
    }
}

fn crash_bucket(o: &TestOutcome) -> String {
    let sig = normalize(&crash_signature(o));
    format!("crash-{}-{}", sanitize(&o.compiler), short_hash(&sig))
}

/// Files saved for one bug report.
#[derive(Debug)]
pub struct Artifact {
    pub dir: PathBuf,
    pub bucket: String,
    /// 1 for the first report in its bucket, 2 for the second, ...
    pub count: usize,
    /// The reducer, when one was configured, still running.
    pub reducer: Option<Child>,
}

/// Environment facts saved next to every report.
fn env_text(compilers: &[CompilerSpec], limits: &DiffLimits) -> String {
    let mut s = format!("tool={} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    s.push_str(&format!("os={} arch={}\n", std::env::consts::OS, std::env::consts::ARCH));
    for c in compilers {
        s.push_str(&format!("compiler={} path={} version={}\n", c.name, c.path.display(), c.version));
        if !c.extra_flags.is_empty() {
            s.push_str(&format!("flags={}\n", c.extra_flags.join(" ")));
        }
    }
    s.push_str(&format!("compile_timeout_s={} run_timeout_s={}\n", limits.compile.timeout.as_secs(), limits.run.timeout.as_secs()));
    s
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

/// A reducer interestingness test: exit 0 while `prog.c` still shows the bug.
pub fn interestingness_script(report: &BugReport, compilers: &[CompilerSpec]) -> String {
    let path_of = |name: &str| {
        compilers.iter().find(|c| c.name == name).map(|c| c.path.display().to_string()).unwrap_or_else(|| name.to_string())
    };
    let mut s = String::from("#!/bin/sh\n# exit 0 when prog.c still reproduces the report\nset -u\nPROG=${1:-prog.c}\n");
    let cell = &report.matrix[report.cells[0]];
    let cc = shell_quote(&path_of(&cell.compiler));
    let flag = cell.level.flag();
    match report.kind {
        BugKind::CompilerCrash => {
            s.push_str(&format!("{cc} {flag} -c \"$PROG\" -o /dev/null > out.txt 2>&1\n"));
            s.push_str("status=$?\n");
            let sig = crash_signature(cell);
            let sig = ICE_SIGNATURES.iter().find(|m| sig.contains(*m)).map(|m| m.to_string());
            match sig {
                Some(m) => s.push_str(&format!("grep -q {} out.txt\n", shell_quote(&m))),
                None => s.push_str("test $status -gt 128\n"),
            }
        }
        BugKind::MiscompilationCandidate | BugKind::HangCandidate => {
            let other = report
                .matrix
                .iter()
                .enumerate()
                .find(|(i, o)| !report.cells.contains(i) && o.observable().is_some())
                .map(|(_, o)| o)
                .unwrap_or(cell);
            let cc2 = shell_quote(&path_of(&other.compiler));
            // the reduced program must stay free of undefined behavior
            s.push_str("cc -O0 -fsanitize=address,undefined -fno-sanitize-recover=all \"$PROG\" -o san.bin > /dev/null 2>&1 || exit 1\n");
            s.push_str("timeout 10 ./san.bin > san.txt 2>&1 || exit 1\n");
            s.push_str(&format!("{cc} {flag} \"$PROG\" -o a.bin > /dev/null 2>&1 || exit 1\n"));
            s.push_str(&format!("{cc2} {} \"$PROG\" -o b.bin > /dev/null 2>&1 || exit 1\n", other.level.flag()));
            s.push_str("timeout 10 ./b.bin > b.txt 2>&1 || exit 1\n");
            if report.kind == BugKind::HangCandidate {
                s.push_str("timeout 10 ./a.bin > /dev/null 2>&1\ntest $? -eq 124\n");
            } else {
                s.push_str("timeout 10 ./a.bin > a.txt 2>&1\ntest $? -ne 124 || exit 1\n! cmp -s a.txt b.txt\n");
            }
        }
        BugKind::SynthesisDefect => {
            s.push_str(&format!("! {cc} {flag} -c \"$PROG\" -o /dev/null > /dev/null 2>&1\n"));
        }
    }
    s
}

/// Save the program and its outcome under `out_dir/bugs/<bucket>/<n>/` and
/// start the reducer on it if one is configured.
pub fn bucket_and_report(
    report: &BugReport,
    program: &str,
    compilers: &[CompilerSpec],
    limits: &DiffLimits,
    out_dir: &Path,
    reducer: Option<&str>,
) -> std::io::Result<Artifact> {
    let bucket_dir = out_dir.join("bugs").join(&report.bucket);
    std::fs::create_dir_all(&bucket_dir)?;
    // create_dir is atomic, so concurrent reporters never share a slot
    let mut n = std::fs::read_dir(&bucket_dir)?.count() + 1;
    let dir = loop {
        let d = bucket_dir.join(n.to_string());
        match std::fs::create_dir(&d) {
            Ok(()) => break d,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
            Err(e) => return Err(e),
        }
    };
    std::fs::write(dir.join("prog.c"), program)?;
    std::fs::write(dir.join("matrix.json"), serde_json::to_string_pretty(report).expect("report serializes"))?;
    std::fs::write(dir.join("env.txt"), env_text(compilers, limits))?;
    let script = dir.join("interesting.sh");
    std::fs::write(&script, interestingness_script(report, compilers))?;
    set_executable(&script)?;

    let reducer = match reducer {
        None => {
            log::info!("no reducer configured; skipping reduction of {}", dir.display());
            None
        }
        Some(cmd) => {
            let log_file = std::fs::File::create(dir.join("reducer.log"))?;
            let child = Command::new("sh")
                .arg("-c")
                .arg(format!("{cmd} \"$0\" \"$1\""))
                .arg(dir.join("prog.c"))
                .arg(&script)
                .current_dir(&dir)
                .stdin(Stdio::null())
                .stdout(log_file.try_clone()?)
                .stderr(log_file)
                .spawn();
            match child {
                Ok(c) => Some(c),
                Err(e) => {
                    let mut f = std::fs::OpenOptions::new().append(true).open(dir.join("reducer.log"))?;
                    writeln!(f, "could not start reducer: {e}")?;
                    log::warn!("could not start reducer `{cmd}`: {e}");
                    None
                }
            }
        }
    };
    Ok(Artifact { dir, bucket: report.bucket.clone(), count: n, reducer })
}

fn set_executable(path: &Path) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let mut p = std::fs::metadata(path)?.permissions();
    p.set_mode(0o755);
    std::fs::set_permissions(path, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(level: Level, compile: CompileResult, run: RunResult) -> TestOutcome {
        TestOutcome { compiler: "cc".into(), level, compile, run }
    }

    fn ok(stdout: &str) -> (CompileResult, RunResult) {
        (CompileResult::Ok, RunResult::Ok { stdout: stdout.into() })
    }

    fn matrix(cells: Vec<(CompileResult, RunResult)>) -> Vec<TestOutcome> {
        cells.into_iter().zip(Level::ALL).map(|((c, r), l)| outcome(l, c, r)).collect()
    }

    const A: &str = "checksum = 0000000000000001\n";
    const B: &str = "checksum = 0000000000000002\n";

    #[test]
    fn levels_parse_and_print() {
        for l in Level::ALL {
            assert_eq!(l.to_string().parse::<Level>().unwrap(), l);
        }
        assert_eq!("-O2".parse::<Level>().unwrap(), Level::O2);
        assert!("O4".parse::<Level>().is_err());
    }

    #[test]
    fn identical_outputs_pass() {
        assert!(matches!(classify(matrix(vec![ok(A); 5])), Verdict::Pass { .. }));
    }

    #[test]
    fn differing_output_is_a_miscompilation() {
        let mut cells = vec![ok(A); 5];
        cells[4] = ok(B);
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        assert_eq!(r.kind, BugKind::MiscompilationCandidate);
        assert_eq!(r.cells, [4]);
        assert_eq!(r.bucket, "miscompilation-cc-O3-vs-cc-O0");
    }

    #[test]
    fn crash_outranks_everything() {
        let mut cells = vec![ok(A); 5];
        cells[1] = ok(B);
        cells[2] = (CompileResult::Error { stderr: "error: x".into() }, RunResult::Skipped);
        cells[3] = (CompileResult::Crash { signal: None, text: "internal compiler error: in foo, at bar.c:12".into() }, RunResult::Skipped);
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        assert_eq!(r.kind, BugKind::CompilerCrash);
        assert_eq!(r.cells, [3]);
    }

    #[test]
    fn compile_error_is_a_synthesis_defect() {
        let mut cells = vec![ok(A); 5];
        cells[0] = (CompileResult::Error { stderr: "p.c:3:1: error: expected ';'".into() }, RunResult::Skipped);
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        assert_eq!(r.kind, BugKind::SynthesisDefect);
    }

    #[test]
    fn partial_timeout_is_a_hang_but_total_timeout_passes() {
        let mut cells = vec![ok(A); 5];
        cells[2].1 = RunResult::Timeout;
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        assert_eq!(r.kind, BugKind::HangCandidate);
        let all = vec![(CompileResult::Ok, RunResult::Timeout); 5];
        assert!(matches!(classify(matrix(all)), Verdict::Pass { .. }));
    }

    #[test]
    fn run_crash_at_one_level_differs() {
        let mut cells = vec![ok(A); 5];
        cells[3].1 = RunResult::Crash { signal: Some(11), code: None, stderr: String::new() };
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        assert_eq!(r.kind, BugKind::MiscompilationCandidate);
    }

    #[test]
    fn crash_buckets_ignore_paths_and_numbers() {
        let c = |t: &str| outcome(Level::O2, CompileResult::Crash { signal: None, text: t.into() }, RunResult::Skipped);
        let a = crash_bucket(&c("/tmp/x1/p.c:4:2: internal compiler error: in expand_expr, at expr.c:123"));
        let b = crash_bucket(&c("/tmp/y7/q.c:9:5: internal compiler error: in expand_expr, at expr.c:123"));
        let d = crash_bucket(&c("/tmp/y7/q.c:9:5: internal compiler error: in fold_binary, at fold.c:9"));
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn checksum_output_shape() {
        assert!(is_checksum_output(A));
        assert!(!is_checksum_output("checksum = 1\n"));
        assert!(!is_checksum_output("checksum = 0000000000000001\nextra\n"));
    }

    #[test]
    fn artifacts_count_up_per_bucket() {
        let dir = tempfile::tempdir().unwrap();
        let mut cells = vec![ok(A); 5];
        cells[4] = ok(B);
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        let limits = DiffLimits::default();
        let a = bucket_and_report(&r, "int main(void){return 0;}\n", &[], &limits, dir.path(), None).unwrap();
        let b = bucket_and_report(&r, "int main(void){return 0;}\n", &[], &limits, dir.path(), None).unwrap();
        assert_eq!((a.count, b.count), (1, 2));
        assert_eq!(a.dir.parent(), b.dir.parent());
        for f in ["prog.c", "matrix.json", "env.txt", "interesting.sh"] {
            assert!(b.dir.join(f).exists(), "{f}");
        }
        let back: BugReport = serde_json::from_str(&std::fs::read_to_string(b.dir.join("matrix.json")).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn reducer_runs_with_program_and_script() {
        let dir = tempfile::tempdir().unwrap();
        let mut cells = vec![ok(A); 5];
        cells[4] = ok(B);
        let Verdict::Bug(r) = classify(matrix(cells)) else { panic!() };
        let art = bucket_and_report(&r, "x", &[], &DiffLimits::default(), dir.path(), Some("f() { test -x \"$2\" && echo reduced > \"$1\"; }; f")).unwrap();
        let status = art.reducer.unwrap().wait().unwrap();
        assert!(status.success());
        assert_eq!(std::fs::read_to_string(art.dir.join("prog.c")).unwrap(), "reduced\n");
    }
}
