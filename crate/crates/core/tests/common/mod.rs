//! Helpers shared by the integration suites: stub corpora and a large
//! fixture database built once through the real pipeline and cached.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use splicefuzz::code_db::Database;
use splicefuzz::corpus::content_id;
use splicefuzz::llm::{LlmConfig, LlmMode, PromptTemplate};
use splicefuzz::pipeline::{build_database, BuildConfig, BuildSummary};
use splicefuzz::profiler::ProfilerConfig;
use splicefuzz::toolchain::{default_compiler, CompilerSpec};
use splicefuzz_testkit::gen::{numeric_corpus, stub_response};

pub fn cc() -> CompilerSpec {
    default_compiler().expect("a working C compiler")
}

/// A corpus file and the code the stubbed model answers with for it.
pub struct StubFile<'a> {
    pub name: &'a str,
    pub text: &'a str,
    pub response: Option<String>,
}

/// Write `files` under `dir`, with stub responses in `dir/responses`.
pub fn write_stub_corpus(dir: &Path, files: &[StubFile<'_>]) {
    let responses = dir.join("responses");
    std::fs::create_dir_all(&responses).unwrap();
    for f in files {
        std::fs::write(dir.join(f.name), f.text).unwrap();
        if let Some(r) = &f.response {
            std::fs::write(responses.join(format!("{}.response.txt", content_id(f.text))), r).unwrap();
        }
    }
}

pub fn build_config(corpus: &Path, out: &Path) -> BuildConfig {
    BuildConfig {
        corpus: corpus.to_path_buf(),
        out: out.to_path_buf(),
        llm: LlmConfig { mode: LlmMode::Stub, stub_dir: Some(corpus.join("responses")), ..LlmConfig::default() },
        template: PromptTemplate::default(),
        profiler: ProfilerConfig::new(cc()),
        jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        size_cap: splicefuzz::corpus::DEFAULT_CAP,
    }
}

/// Build a database from function texts that need no transformation.
pub fn build_from_functions(root: &Path, functions: &[(String, String)]) -> BuildSummary {
    let corpus = root.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    let files: Vec<StubFile> = functions
        .iter()
        .map(|(name, text)| StubFile { name, text, response: Some(stub_response(text)) })
        .collect();
    write_stub_corpus(&corpus, &files);
    build_database(&build_config(&corpus, &root.join("db"))).expect("database builds")
}

pub const FIXTURE_SEED: u64 = 1;
pub const FIXTURE_FUNCTIONS: u64 = 1100;
/// Bump when the pipeline changes in a way that invalidates cached databases.
const FIXTURE_REV: &str = "1";

fn fixture_dir() -> PathBuf {
    let corpus = numeric_corpus(FIXTURE_SEED, FIXTURE_FUNCTIONS);
    let mut key = String::from(FIXTURE_REV);
    for (_, text) in &corpus {
        key.push_str(text);
    }
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("fixture-db-{}", &content_id(&key)[..12]))
}

/// The large generated database, built on first use and cached across runs
/// and test binaries.
pub fn fixture_db() -> &'static Database {
    static DB: OnceLock<Database> = OnceLock::new();
    DB.get_or_init(|| {
        let dir = fixture_dir();
        let lock_path = dir.with_extension("lock");
        let lock = std::fs::File::create(&lock_path).unwrap();
        lock.lock().unwrap();
        if !dir.join("db").join("manifest.json").is_file() {
            let staging = dir.with_extension("staging");
            let _ = std::fs::remove_dir_all(&staging);
            let started = std::time::Instant::now();
            let summary = build_from_functions(&staging, &numeric_corpus(FIXTURE_SEED, FIXTURE_FUNCTIONS));
            eprintln!(
                "built fixture database: {} admitted of {} in {:.0?}",
                summary.admitted,
                summary.scanned,
                started.elapsed()
            );
            let _ = std::fs::remove_dir_all(&dir);
            std::fs::rename(&staging, &dir).unwrap();
        }
        lock.unlock().unwrap();
        Database::open(&dir.join("db")).expect("fixture database opens")
    })
}

/// Directory of [`fixture_db`], building it first if needed.
pub fn fixture_db_path() -> PathBuf {
    fixture_db();
    fixture_dir().join("db")
}
