//! Validation of candidate functions (compile checks, sanitized runs on random
//! inputs) and runtime profiling of the surviving (function, input) pairs.

pub(crate) mod harness;
mod probes;

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfront::types::{IntType, TypeDesc};
use crate::cfront::{self, Signature, SourceUnit, ALLOWED_HEADERS};
use crate::code_db::{FunctionEntry, Metrics};
use crate::toolchain::{compile_c, CompilerSpec, Exit, Limits, ToolError, GIB};

pub use probes::{probe_sites, ProbeSite};

/// Records a single invocation may log before the run is abandoned.
pub const RECORD_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputValue {
    Scalar {
        ty: TypeDesc,
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bits: Option<String>,
    },
    Buffer {
        elem: TypeDesc,
        values: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        bits: Vec<String>,
    },
}

impl InputValue {
    /// The integer value of a scalar integer input.
    pub fn as_int(&self) -> Option<i128> {
        match self {
            InputValue::Scalar { ty: TypeDesc::Int { .. }, value, .. } => value.parse().ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputVector(pub Vec<InputValue>);

impl std::fmt::Display for InputVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|v| match v {
                InputValue::Scalar { value, .. } => value.clone(),
                InputValue::Buffer { values, .. } => format!("[{}]", values.join(", ")),
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Whether a value was logged where the expression was evaluated, or for an
/// assignment target once its statement completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineObservation {
    pub line: u32,
    pub expr_text: String,
    pub phase: Phase,
    pub values: Vec<String>,
    /// Hex bit patterns, for floating-point expressions only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bits: Vec<String>,
}

impl LineObservation {
    pub fn is_stable(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }

    /// The single observed integer value, if stable and integral.
    pub fn stable_int(&self) -> Option<i128> {
        if self.is_stable() && self.bits.is_empty() {
            self.values[0].parse().ok()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub input: InputVector,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_bits: Option<String>,
    pub observations: Vec<LineObservation>,
    /// Evaluations of each probe site, in [`probe_sites`] order. Sites sharing
    /// a line and text share one observation but are counted apart here.
    #[serde(default)]
    pub site_hits: Vec<u64>,
    pub idempotent: bool,
}

impl Profile {
    pub fn output_int(&self) -> Option<i128> {
        self.output.parse().ok().filter(|_| self.output_bits.is_none())
    }

    /// Probe records logged by one invocation; a proxy for its running cost.
    pub fn record_count(&self) -> usize {
        self.observations.iter().map(|o| o.values.len()).sum()
    }

    pub fn observation(&self, line: u32, text: &str, phase: Phase) -> Option<&LineObservation> {
        self.observations.iter().find(|o| o.line == line && o.expr_text == text && o.phase == phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Syntax,
    Sanitize,
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub stage: Stage,
    pub verdict: Verdict,
    pub detail: String,
}

impl ValidationReport {
    fn pass(stage: Stage) -> Self {
        ValidationReport { stage, verdict: Verdict::Pass, detail: String::new() }
    }

    fn fail(stage: Stage, detail: impl Into<String>) -> Self {
        let mut detail = detail.into();
        if detail.trim().is_empty() {
            detail = "failed without diagnostics".into();
        }
        ValidationReport { stage, verdict: Verdict::Fail, detail }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("cannot instrument: {0}")]
    InstrumentationUnsupported(String),
    #[error("two identical runs logged different values")]
    NondeterministicRun,
    #[error("second in-process invocation diverged from the first")]
    NotIdempotent,
    #[error("more than {RECORD_CAP} probe records in one invocation")]
    RecordLimit,
    #[error("instrumented run failed: {0}")]
    RunFailed(String),
    #[error(transparent)]
    Tool(#[from] ToolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Sanitizer {
    Address,
    Undefined,
    Memory,
    Type,
}

impl Sanitizer {
    fn flag(self) -> &'static str {
        match self {
            Sanitizer::Address => "address",
            Sanitizer::Undefined => "undefined",
            Sanitizer::Memory => "memory",
            Sanitizer::Type => "type",
        }
    }
}

/// Sanitizers that can share one build: address and undefined combine, the
/// others need their own.
fn sanitizer_builds(set: &[Sanitizer]) -> Vec<Vec<Sanitizer>> {
    let mut builds = Vec::new();
    let combined: Vec<_> =
        [Sanitizer::Address, Sanitizer::Undefined].into_iter().filter(|s| set.contains(s)).collect();
    if !combined.is_empty() {
        builds.push(combined);
    }
    for s in [Sanitizer::Memory, Sanitizer::Type] {
        if set.contains(&s) {
            builds.push(vec![s]);
        }
    }
    builds
}

#[derive(Debug, Clone)]
pub struct ProfilerConfig {
    pub compiler: CompilerSpec,
    pub sanitizers: Vec<Sanitizer>,
    /// Distinct inputs tried per function.
    pub retry: usize,
    /// Stop after this many inputs survive.
    pub successes: usize,
    pub seed: u64,
    pub run_limits: Limits,
    pub compile_limits: Limits,
}

impl ProfilerConfig {
    pub fn new(compiler: CompilerSpec) -> Self {
        ProfilerConfig {
            compiler,
            sanitizers: vec![Sanitizer::Address, Sanitizer::Undefined],
            retry: 5,
            successes: 3,
            seed: 0,
            run_limits: Limits::run_default(),
            compile_limits: Limits::compile_default(),
        }
    }
}

/// Warnings that indicate a broken or ill-defined function.
const WERROR: &[&str] = &[
    "-Werror=implicit-function-declaration",
    "-Werror=implicit-int",
    "-Werror=return-type",
    "-Werror=int-conversion",
    "-Werror=incompatible-pointer-types",
    "-Werror=int-to-pointer-cast",
    "-Werror=pointer-to-int-cast",
    "-Werror=uninitialized",
    "-Werror=div-by-zero",
    "-Werror=shift-count-overflow",
    "-Werror=shift-count-negative",
    "-Werror=overflow",
    "-Werror=sequence-point",
    "-Werror=array-bounds",
    "-Werror=pointer-sign",
];

fn compile_log(out: &crate::toolchain::Output) -> String {
    match out.exit {
        Exit::Timeout => "compilation timed out".into(),
        _ => out.stderr_str(),
    }
}

/// Parse `text` and check it as [`validate_syntax`] does; parse failures are
/// syntax failures.
pub fn validate_source(text: &str, compiler: &CompilerSpec) -> Result<ValidationReport, ToolError> {
    match cfront::parse_function(text) {
        Ok(unit) => validate_syntax(&unit, compiler),
        Err(e) => Ok(ValidationReport::fail(Stage::Syntax, e.to_string())),
    }
}

/// Compile the unit inside a minimal harness at -O0 with selected warnings as
/// errors, then once more at -O2 where uninitialized reads are diagnosed.
pub fn validate_syntax(unit: &SourceUnit, compiler: &CompilerSpec) -> Result<ValidationReport, ToolError> {
    for (header, _) in unit.includes() {
        if !ALLOWED_HEADERS.contains(&header) {
            return Ok(ValidationReport::fail(Stage::Syntax, format!("disallowed header <{header}>")));
        }
    }
    if unit.name() == "main" {
        return Ok(ValidationReport::fail(Stage::Syntax, "a function named main cannot be harnessed"));
    }
    let dir = tempfile::tempdir()?;
    let src = harness::syntax_harness(unit);
    let limits = Limits::compile_default();
    let mut flags = vec!["-O0", "-std=gnu11"];
    flags.extend(WERROR);
    let (out, _) = compile_c(compiler, &src, dir.path(), "syntax", &flags, &limits)?;
    if !out.exit.success() {
        return Ok(ValidationReport::fail(Stage::Syntax, compile_log(&out)));
    }
    let flags = ["-O2", "-std=gnu11", "-c", "-Werror=uninitialized", "-Werror=maybe-uninitialized"];
    let (out, _) = compile_c(compiler, &src, dir.path(), "syntax_o2", &flags, &limits)?;
    if !out.exit.success() {
        return Ok(ValidationReport::fail(Stage::Syntax, compile_log(&out)));
    }
    if let Some(lint) = uninit_lint() {
        let flags = ["-fsyntax-only", "-std=gnu11", "-Werror=uninitialized", "-Werror=sometimes-uninitialized"];
        let (out, _) = compile_c(lint, &src, dir.path(), "lint", &flags, &limits)?;
        if !out.exit.success() {
            return Ok(ValidationReport::fail(Stage::Syntax, compile_log(&out)));
        }
    }
    Ok(ValidationReport::pass(Stage::Syntax))
}

/// clang, when installed, catches conditionally uninitialized reads that gcc
/// folds away before warning.
fn uninit_lint() -> Option<&'static CompilerSpec> {
    static LINT: std::sync::OnceLock<Option<CompilerSpec>> = std::sync::OnceLock::new();
    LINT.get_or_init(|| CompilerSpec::probe("clang").ok()).as_ref()
}

/// Draw from the value mixture for an integer type.
pub(crate) fn draw_int(rng: &mut ChaCha8Rng, t: IntType, attempt: u32) -> i128 {
    let class = match attempt {
        0 => 0,
        1 => 10,
        _ => rng.random_range(0..100),
    };
    match class {
        0..=9 => 0,
        10..=24 => {
            if attempt == 1 || !t.signed || rng.random_bool(0.5) {
                1
            } else {
                -1
            }
        }
        25..=54 => {
            let lo = if t.signed { -16 } else { 0 };
            rng.random_range(lo..=16)
        }
        55..=69 => {
            let c = [t.min(), t.min() + 1, t.max() - 1, t.max()];
            c[rng.random_range(0..4)]
        }
        _ => t.wrap(rng.random::<u64>() as i128),
    }
}

fn draw_float(rng: &mut ChaCha8Rng, wide: bool, attempt: u32) -> f64 {
    let class = match attempt {
        0 => 0,
        1 => 10,
        _ => rng.random_range(0..100),
    };
    let max = if wide { f64::MAX } else { f32::MAX as f64 };
    match class {
        0..=9 => 0.0,
        10..=24 => {
            if attempt == 1 || rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        }
        25..=54 => rng.random_range(-16.0..=16.0),
        55..=69 => [max, -max, f32::MIN_POSITIVE as f64, 0.5][rng.random_range(0..4)],
        _ => loop {
            let v = if wide { f64::from_bits(rng.random()) } else { f32::from_bits(rng.random()) as f64 };
            if v.is_finite() {
                break v;
            }
        },
    }
}

fn scalar_value(rng: &mut ChaCha8Rng, ty: &TypeDesc, attempt: u32) -> (String, Option<String>) {
    match ty {
        TypeDesc::Int { int } => (draw_int(rng, *int, attempt).to_string(), None),
        TypeDesc::Float32 => {
            let v = draw_float(rng, false, attempt) as f32;
            (format!("{v:e}"), Some(format!("0x{:08x}", v.to_bits())))
        }
        TypeDesc::Float64 => {
            let v = draw_float(rng, true, attempt);
            (format!("{v:e}"), Some(format!("0x{:016x}", v.to_bits())))
        }
        other => panic!("no inputs for non-numeric type {other}"),
    }
}

/// A random input for `sig`, reproducible from `(seed, attempt)`. Attempt 0
/// pins every scalar to zero and attempt 1 to one; later attempts draw from
/// the full mixture.
pub fn generate_input(sig: &Signature, seed: u64, attempt: u32) -> InputVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    let values = sig
        .params
        .iter()
        .map(|p| match p.decay() {
            TypeDesc::Pointer { elem } => {
                let len = rng.random_range(1..=8);
                let (values, bits): (Vec<_>, Vec<_>) = (0..len).map(|_| scalar_value(&mut rng, &elem, attempt)).unzip();
                InputValue::Buffer { elem: *elem, values, bits: bits.into_iter().flatten().collect() }
            }
            t => {
                let (value, bits) = scalar_value(&mut rng, &t, attempt);
                InputValue::Scalar { ty: t, value, bits }
            }
        })
        .collect();
    InputVector(values)
}

/// Whether every parameter and the return value are numeric at the boundary.
pub fn numeric_aligned(sig: &Signature) -> bool {
    sig.ret.is_arith() && sig.params.iter().all(|p| p.decay().is_numeric_or_numeric_pointer())
}

pub(crate) fn sanitizer_env(cmd: &mut std::process::Command) {
    cmd.env("ASAN_OPTIONS", "detect_leaks=1:hard_rss_limit_mb=1024:abort_on_error=0")
        .env("UBSAN_OPTIONS", "halt_on_error=1:print_stacktrace=0");
}

pub(crate) fn sanitizer_report(out: &crate::toolchain::Output) -> Option<String> {
    let err = out.stderr_str();
    let flagged = ["runtime error:", "ERROR: AddressSanitizer", "ERROR: LeakSanitizer", "WARNING: MemorySanitizer"]
        .iter()
        .any(|m| err.contains(m));
    match out.exit {
        Exit::Code(0) if !flagged => None,
        Exit::Timeout => Some("timed out".into()),
        Exit::Signal(s) => Some(format!("killed by signal {s}\n{err}")),
        Exit::Code(c) => Some(format!("exit code {c}\n{err}")),
    }
}

/// Sanitized builds of a harness that runs input `k` when given argument `k`.
struct SanitizedBinaries {
    _dir: tempfile::TempDir,
    bins: Vec<(Vec<Sanitizer>, Result<std::path::PathBuf, String>)>,
}

fn build_sanitized(
    unit: &SourceUnit,
    inputs: &[InputVector],
    tools: &[Sanitizer],
    compiler: &CompilerSpec,
    limits: &Limits,
) -> Result<SanitizedBinaries, ToolError> {
    let dir = tempfile::tempdir()?;
    let src = harness::call_harness(unit, inputs);
    let mut bins = Vec::new();
    for (i, group) in sanitizer_builds(tools).into_iter().enumerate() {
        let list: Vec<&str> = group.iter().map(|s| s.flag()).collect();
        let fs = format!("-fsanitize={}", list.join(","));
        let mut flags = vec!["-O0", "-g", "-std=gnu11", fs.as_str(), "-fno-omit-frame-pointer"];
        if group.contains(&Sanitizer::Undefined) {
            flags.extend(["-fno-sanitize-recover=all", "-fsanitize=float-divide-by-zero"]);
        }
        let (out, bin) = compile_c(compiler, &src, dir.path(), &format!("san{i}"), &flags, limits)?;
        let bin = if out.exit.success() { Ok(bin) } else { Err(compile_log(&out)) };
        bins.push((group, bin));
    }
    Ok(SanitizedBinaries { _dir: dir, bins })
}

impl SanitizedBinaries {
    fn run(&self, index: usize, limits: &Limits) -> Result<ValidationReport, ToolError> {
        for (group, bin) in &self.bins {
            let bin = match bin {
                Ok(b) => b,
                Err(log) => return Ok(ValidationReport::fail(Stage::Sanitize, format!("sanitized build failed\n{log}"))),
            };
            let mut cmd = std::process::Command::new(bin);
            cmd.arg(index.to_string());
            sanitizer_env(&mut cmd);
            // sanitizer runtimes reserve huge address ranges, so no RLIMIT_AS
            let limits = Limits::new(limits.timeout, None);
            let out = crate::toolchain::run_limited(&mut cmd, &limits)?;
            if let Some(report) = sanitizer_report(&out) {
                let names: Vec<&str> = group.iter().map(|s| s.flag()).collect();
                return Ok(ValidationReport::fail(Stage::Sanitize, format!("[{}] {report}", names.join("+"))));
            }
        }
        Ok(ValidationReport::pass(Stage::Sanitize))
    }
}

/// Run the function once on `input` under each sanitizer build.
pub fn run_sanitized(
    unit: &SourceUnit,
    input: &InputVector,
    tools: &[Sanitizer],
    compiler: &CompilerSpec,
    limits: &Limits,
) -> Result<ValidationReport, ToolError> {
    let bins = build_sanitized(unit, std::slice::from_ref(input), tools, compiler, &Limits::compile_default())?;
    bins.run(0, limits)
}

struct ProbeBinary {
    _dir: tempfile::TempDir,
    bin: std::path::PathBuf,
    sites: Vec<ProbeSite>,
}

fn build_probes(
    unit: &SourceUnit,
    inputs: &[InputVector],
    compiler: &CompilerSpec,
    limits: &Limits,
) -> Result<ProbeBinary, ProfileError> {
    let (text, sites) = probes::instrument(unit)?;
    let src = harness::probe_harness(unit, &text, inputs);
    let dir = tempfile::tempdir().map_err(ToolError::from)?;
    let (out, bin) = compile_c(compiler, &src, dir.path(), "probe", &["-O0", "-std=gnu11", "-w"], limits)?;
    if !out.exit.success() {
        return Err(ProfileError::InstrumentationUnsupported(compile_log(&out)));
    }
    Ok(ProbeBinary { _dir: dir, bin, sites })
}

impl ProbeBinary {
    fn run_log(&self, index: usize, limits: &Limits) -> Result<String, ProfileError> {
        let log = self._dir.path().join(format!("log{index}"));
        let mut cmd = std::process::Command::new(&self.bin);
        cmd.arg(index.to_string()).env("LF_PROBE_FILE", &log);
        let out = crate::toolchain::run_limited(&mut cmd, limits).map_err(ToolError::from)?;
        let text = std::fs::read_to_string(&log).unwrap_or_default();
        let _ = std::fs::remove_file(&log);
        if text.lines().any(|l| l == "X") {
            return Err(ProfileError::RecordLimit);
        }
        if !out.exit.success() {
            return Err(ProfileError::RunFailed(format!("{:?}: {}", out.exit, out.stderr_str())));
        }
        Ok(text)
    }

    fn profile(&self, unit: &SourceUnit, index: usize, input: &InputVector, limits: &Limits) -> Result<Profile, ProfileError> {
        let first = self.run_log(index, limits)?;
        let second = self.run_log(index, limits)?;
        if first != second {
            return Err(ProfileError::NondeterministicRun);
        }
        let (a, b) = probes::split_invocations(&first)?;
        if a != b {
            return Err(ProfileError::NotIdempotent);
        }
        probes::decode(unit, &self.sites, &a, input.clone())
    }
}

/// Profile one input: instrument, run twice, and check both in-process
/// invocations agree.
pub fn profile_function(
    unit: &SourceUnit,
    input: &InputVector,
    compiler: &CompilerSpec,
    limits: &Limits,
) -> Result<Profile, ProfileError> {
    let bin = build_probes(unit, std::slice::from_ref(input), compiler, &Limits::compile_default())?;
    bin.profile(unit, 0, input, limits)
}

/// The outcome of one tried input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputAttempt {
    pub input: InputVector,
    pub report: ValidationReport,
}

/// Everything learned while validating one candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Validation {
    pub syntax: ValidationReport,
    pub attempts: Vec<InputAttempt>,
    pub profiles: Vec<Profile>,
}

fn function_seed(base: u64, unit: &SourceUnit) -> u64 {
    let h = crate::corpus::content_id(&unit.original_text);
    base ^ u64::from_str_radix(&h[..16], 16).expect("hex digest")
}

/// Distinct inputs from successive attempts, at most `k` of them.
fn candidate_inputs(sig: &Signature, seed: u64, k: usize) -> Vec<InputVector> {
    let mut out: Vec<InputVector> = Vec::new();
    for attempt in 0..(k as u32 * 4) {
        if out.len() == k {
            break;
        }
        let v = generate_input(sig, seed, attempt);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Validate a parsed candidate and collect up to `successes` profiles from at
/// most `retry` distinct random inputs.
pub fn validate_and_profile(unit: &SourceUnit, config: &ProfilerConfig) -> Result<Validation, ToolError> {
    let sig = unit.signature();
    if !numeric_aligned(&sig) {
        let syntax = ValidationReport::fail(Stage::Syntax, "signature is not numeric");
        return Ok(Validation { syntax, attempts: vec![], profiles: vec![] });
    }
    let syntax = validate_syntax(unit, &config.compiler)?;
    if !syntax.passed() {
        return Ok(Validation { syntax, attempts: vec![], profiles: vec![] });
    }
    let inputs = candidate_inputs(&sig, function_seed(config.seed, unit), config.retry);
    let sanitized = build_sanitized(unit, &inputs, &config.sanitizers, &config.compiler, &config.compile_limits)?;
    let probe_bin = build_probes(unit, &inputs, &config.compiler, &config.compile_limits);
    let mut attempts = Vec::new();
    let mut profiles = Vec::new();
    for (i, input) in inputs.iter().enumerate() {
        if profiles.len() >= config.successes {
            break;
        }
        let mut report = sanitized.run(i, &config.run_limits)?;
        if report.passed() {
            let run_limits = Limits::new(config.run_limits.timeout, Some(GIB));
            let result = match &probe_bin {
                Ok(bin) => bin.profile(unit, i, input, &run_limits),
                Err(ProfileError::InstrumentationUnsupported(m)) => Err(ProfileError::InstrumentationUnsupported(m.clone())),
                Err(e) => Err(ProfileError::RunFailed(e.to_string())),
            };
            report = match result {
                Ok(p) => {
                    profiles.push(p);
                    ValidationReport::pass(Stage::Profile)
                }
                Err(ProfileError::Tool(e)) => return Err(e),
                Err(e) => ValidationReport::fail(Stage::Profile, e.to_string()),
            };
        }
        log::debug!("{} input {input}: {:?} {}", unit.name(), report.verdict, report.detail.lines().next().unwrap_or(""));
        attempts.push(InputAttempt { input: input.clone(), report });
    }
    Ok(Validation { syntax, attempts, profiles })
}

/// Why a candidate was not admitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub snippet_id: String,
    pub reason: String,
}

/// Stable short identifier of a function's canonical text.
pub fn entry_id(unit: &SourceUnit) -> String {
    crate::corpus::content_id(&unit.original_text)[..16].to_string()
}

/// Turn a profiled function into a database entry. File-scope names get a
/// prefix unique to the function, and every observation is re-keyed to the
/// renamed text.
pub fn admit_function(snippet_id: &str, unit: &SourceUnit, profiles: Vec<Profile>) -> Result<FunctionEntry, Rejection> {
    if profiles.is_empty() {
        return Err(Rejection { snippet_id: snippet_id.into(), reason: "no input survived validation".into() });
    }
    let id = entry_id(unit);
    let renamed = cfront::rename_globals(unit, &format!("lf{}", &id[..10]));
    let old_sites = probe_sites(unit);
    let new_sites = probe_sites(&renamed);
    assert_eq!(old_sites.len(), new_sites.len(), "renaming keeps the probe sites");
    let rekey: HashMap<(u32, &str, Phase), &str> = old_sites
        .iter()
        .zip(&new_sites)
        .map(|(o, n)| ((o.line, o.text.as_str(), o.phase), n.text.as_str()))
        .collect();
    let profiles = profiles
        .into_iter()
        .map(|mut p| {
            for o in &mut p.observations {
                o.expr_text = rekey[&(o.line, o.expr_text.as_str(), o.phase)].to_string();
            }
            p
        })
        .collect();
    Ok(FunctionEntry {
        id,
        signature: renamed.signature(),
        metrics: Metrics::of(&renamed),
        unit: renamed,
        profiles,
        origin: snippet_id.to_string(),
    })
}

/// Decimal rendering of a logged value given its type.
fn decode_value(ty: &TypeDesc, raw: &str) -> Option<(String, Option<String>)> {
    match ty {
        TypeDesc::Int { .. } => raw.parse::<i128>().ok().map(|v| (v.to_string(), None)),
        TypeDesc::Float32 => {
            let b = u32::from_str_radix(raw.strip_prefix("0x")?, 16).ok()?;
            Some((format!("{:e}", f32::from_bits(b)), Some(format!("0x{b:08x}"))))
        }
        TypeDesc::Float64 => {
            let b = u64::from_str_radix(raw.strip_prefix("0x")?, 16).ok()?;
            Some((format!("{:e}", f64::from_bits(b)), Some(format!("0x{b:016x}"))))
        }
        _ => None,
    }
}

/// Group validated records of one invocation into observations.
fn group_observations(records: Vec<(u32, String, Phase, String, Option<String>)>) -> Vec<LineObservation> {
    let mut map: BTreeMap<(u32, Phase, String), LineObservation> = BTreeMap::new();
    for (line, text, phase, value, bits) in records {
        let o = map.entry((line, phase, text.clone())).or_insert_with(|| LineObservation {
            line,
            expr_text: text,
            phase,
            values: vec![],
            bits: vec![],
        });
        o.values.push(value);
        if let Some(b) = bits {
            o.bits.push(b);
        }
    }
    map.into_values().collect()
}

#[cfg(test)]
mod tests;
