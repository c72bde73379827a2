use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use splicefuzz::campaign::{run_campaign, CampaignConfig};
use splicefuzz::code_db::{db_stats, Database};
use splicefuzz::difftest::{differential_test, DiffLimits, Level, Verdict};
use splicefuzz::llm::{LlmConfig, LlmMode, PromptTemplate};
use splicefuzz::pipeline::{build_database, BuildConfig};
use splicefuzz::profiler::{ProfilerConfig, Sanitizer};
use splicefuzz::synth::{audit, RngChooser, SynthesisConfig, Synthesizer};
use splicefuzz::toolchain::{default_compiler, CompilerSpec, Limits, GIB};

/// Grow profiled numeric C functions into large programs with a known
/// checksum and test compilers against each other with them.
///
/// Progress and summaries are printed as key=value lines. Exit status is 0 on
/// success, 2 for configuration errors and 1 for runtime failures.
#[derive(Parser)]
#[command(name = "splicefuzz", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Transform, validate and profile a corpus of C snippets into a function database.
    BuildDb {
        /// Directory tree of .c/.h snippets, one function each.
        #[arg(long)]
        corpus: PathBuf,
        /// Database directory to create or extend.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "stub")]
        llm: LlmMode,
        /// Canned responses for stub mode (<snippet-id>.response.txt) [default: <corpus>/responses]
        #[arg(long)]
        stub_dir: Option<PathBuf>,
        /// TOML file overriding sections of the transformation prompt.
        #[arg(long)]
        prompt: Option<PathBuf>,
        /// Chat-completion endpoint for remote mode.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// Environment variable holding the API key.
        #[arg(long, default_value = "OPENAI_API_KEY")]
        api_key_env: String,
        /// Sanitizers every input must pass.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "address,undefined")]
        sanitizers: Vec<Sanitizer>,
        /// Distinct random inputs tried per function.
        #[arg(long, default_value_t = 5)]
        retry: usize,
        /// Profiles kept per function.
        #[arg(long, default_value_t = 3)]
        successes: usize,
        /// Seed for input generation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compiler used to validate and profile [default: $CC or cc]
        #[arg(long)]
        compiler: Option<PathBuf>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Snippets larger than this many bytes are skipped.
        #[arg(long, default_value_t = splicefuzz::corpus::DEFAULT_CAP)]
        size_cap: u64,
    },
    /// Synthesize one program from a database.
    Synthesize {
        #[arg(long)]
        db: PathBuf,
        /// Rewrite iterations.
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Where to write the program.
        #[arg(long)]
        out: PathBuf,
        /// Also write the replacement log and the self-checking variant, then
        /// build and run that variant to confirm every predicted value.
        #[arg(long)]
        audit: bool,
        /// Compiler for the audit run [default: $CC or cc]
        #[arg(long)]
        compiler: Option<PathBuf>,
    },
    /// Run a differential fuzzing campaign.
    Fuzz {
        #[arg(long)]
        db: PathBuf,
        /// Comma-separated compilers (names on PATH or paths) [default: $CC or cc]
        #[arg(long, value_delimiter = ',')]
        compilers: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "O0,O1,Os,O2,O3")]
        levels: Vec<Level>,
        /// Parallel compile/run cells.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Where bug reports and the summary go.
        #[arg(long)]
        out_dir: PathBuf,
        /// Reducer command, run as `CMD prog.c interesting.sh` in each report directory.
        #[arg(long)]
        reducer: Option<String>,
        /// Seed rounds to run [default: until interrupted]
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        /// Programs synthesized per seed function.
        #[arg(long, default_value_t = 10)]
        mutants: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Seconds allowed per compilation.
        #[arg(long, default_value_t = 200)]
        compile_timeout: u64,
        /// Seconds allowed per run.
        #[arg(long, default_value_t = 10)]
        run_timeout: u64,
    },
    /// Summarize a database.
    Stats {
        #[arg(long)]
        db: PathBuf,
    },
    /// Build a program at every level with one compiler and compare outputs.
    /// Exits 1 unless the verdict is pass.
    Check {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value = "cc")]
        compiler: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "O0,O1,Os,O2,O3")]
        levels: Vec<Level>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn config<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Config(msg.into()))
}

fn probe(path: Option<&Path>) -> Result<CompilerSpec, Failure> {
    let r = match path {
        Some(p) => CompilerSpec::probe(p),
        None => default_compiler(),
    };
    r.or_else(|e| config(format!("{e}; pass a working compiler with --compiler")))
}

fn open_db(path: &Path) -> Result<Database, Failure> {
    if !path.join("manifest.json").is_file() {
        return config(format!("{} is not a database (no manifest.json); create one with build-db", path.display()));
    }
    Database::open(path).or_else(|e| config(e.to_string()))
}

fn set_jobs(jobs: usize) -> Result<(), Failure> {
    if jobs == 0 {
        return config("--jobs must be at least 1");
    }
    // only the first call in a process takes effect
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::BuildDb {
            corpus,
            out,
            llm,
            stub_dir,
            prompt,
            endpoint,
            model,
            api_key_env,
            sanitizers,
            retry,
            successes,
            seed,
            compiler,
            jobs,
            size_cap,
        } => {
            if !corpus.is_dir() {
                return config(format!("corpus directory {} does not exist", corpus.display()));
            }
            if retry == 0 || successes == 0 {
                return config("--retry and --successes must be at least 1");
            }
            if jobs == 0 {
                return config("--jobs must be at least 1");
            }
            let template = match prompt {
                Some(p) => PromptTemplate::with_overrides(&p).or_else(|e| config(format!("prompt override {}: {e}", p.display())))?,
                None => PromptTemplate::default(),
            };
            let mut llm_cfg = LlmConfig { mode: llm, api_key_env, ..LlmConfig::default() };
            if let Some(e) = endpoint {
                llm_cfg.endpoint = e;
            }
            if let Some(m) = model {
                llm_cfg.model = m;
            }
            if llm == LlmMode::Stub {
                llm_cfg.stub_dir = Some(stub_dir.unwrap_or_else(|| corpus.join("responses")));
            } else if std::env::var_os(&llm_cfg.api_key_env).is_none() {
                return config(format!("remote mode needs an API key in ${}", llm_cfg.api_key_env));
            }
            llm_cfg.validate().or_else(config)?;
            let mut profiler = ProfilerConfig::new(probe(compiler.as_deref())?);
            profiler.sanitizers = sanitizers;
            profiler.retry = retry;
            profiler.successes = successes;
            profiler.seed = seed;
            let cfg = BuildConfig { corpus, out, llm: llm_cfg, template, profiler, jobs, size_cap };
            let s = build_database(&cfg)?;
            for r in &s.records {
                println!("snippet={} origin={} status={}", &r.snippet_id[..16], r.origin.display(), status_text(&r.status));
            }
            let rate = if s.scanned == 0 { 0.0 } else { s.io_violations as f64 / s.scanned as f64 };
            println!(
                "scanned={} admitted={} duplicates={} rejected={} io_violation_rate={rate:.3} entries={}",
                s.scanned, s.admitted, s.duplicates, s.rejected, s.manifest.entry_count
            );
        }
        Cmd::Synthesize { db, iters, rng_seed, out, audit: do_audit, compiler } => {
            let db = open_db(&db)?;
            let cfg = SynthesisConfig { iterations: iters, rng_seed, ..SynthesisConfig::default() };
            cfg.validate().or_else(|e| config(e.to_string()))?;
            let trusted = if do_audit { Some(probe(compiler.as_deref())?) } else { None };
            let program = Synthesizer::new(&db).synthesize_with(&cfg, &mut RngChooser::new(rng_seed), None)?;
            std::fs::write(&out, &program.text)?;
            println!(
                "out={} functions={} globals={} replacements={} loc={} checksum={:016x}",
                out.display(),
                program.functions.len(),
                program.globals.len(),
                program.replacement_log.len(),
                program.text.lines().count(),
                program.predicted_checksum
            );
            if let Some(cc) = trusted {
                let log = with_suffix(&out, "log");
                let audit_src = with_suffix(&out, "audit.c");
                std::fs::write(&log, program.log_text())?;
                std::fs::write(&audit_src, &program.audit_text)?;
                let r = audit(&program, &cc, Duration::from_secs(30))?;
                println!(
                    "audit={} checks={} failed={} unreached={} global_failures={} sanitizer={} log={}",
                    if r.clean() { "clean" } else { "dirty" },
                    r.checks,
                    r.failed.len(),
                    r.unreached.len(),
                    r.global_failures,
                    r.sanitizer.is_some(),
                    log.display()
                );
                if !r.clean() {
                    return Err(anyhow::anyhow!("audit failed: {}", r.sanitizer.as_deref().unwrap_or(&r.compile_log)).into());
                }
            }
        }
        Cmd::Fuzz {
            db,
            compilers,
            levels,
            jobs,
            out_dir,
            reducer,
            rounds,
            iters,
            mutants,
            rng_seed,
            compile_timeout,
            run_timeout,
        } => {
            set_jobs(jobs)?;
            let db = open_db(&db)?;
            let mut specs = Vec::new();
            if compilers.is_empty() {
                specs.push(probe(None)?);
            }
            for c in &compilers {
                let mut s = probe(Some(c))?;
                if specs.iter().any(|o: &CompilerSpec| o.name == s.name) {
                    s.name = format!("{}{}", s.name, specs.len());
                }
                specs.push(s);
            }
            let mut cfg = CampaignConfig::new(specs, out_dir);
            cfg.levels = levels;
            cfg.reducer = reducer;
            cfg.rounds = rounds;
            cfg.synthesis = SynthesisConfig { iterations: iters, rng_seed, mutants_per_seed: mutants, ..SynthesisConfig::default() };
            cfg.limits = DiffLimits {
                compile: Limits::new(Duration::from_secs(compile_timeout), Some(GIB)),
                run: Limits::new(Duration::from_secs(run_timeout), Some(GIB)),
            };
            cfg.validate().or_else(config)?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))?;
            let summary = run_campaign(&db, &cfg, &stop, &mut |line| println!("{line}"))?;
            println!("{}", summary.key_values());
        }
        Cmd::Stats { db } => {
            let s = db_stats(&open_db(&db)?);
            println!(
                "entries={} seed_eligible={} call_insertable={} mean_loc={} mean_branches={}",
                s.count,
                s.seed_eligible,
                s.call_insertable,
                s.mean_loc.map_or("na".into(), |m| format!("{m:.2}")),
                s.mean_branches.map_or("na".into(), |m| format!("{m:.2}"))
            );
            for (bucket, n) in &s.loc_histogram {
                println!("loc_bucket={}-{} count={n}", bucket * 10, bucket * 10 + 9);
            }
            for (b, n) in &s.branch_histogram {
                println!("branches={b} count={n}");
            }
        }
        Cmd::Check { file, compiler, levels } => {
            let text = std::fs::read_to_string(&file).or_else(|e| config(format!("{}: {e}", file.display())))?;
            let cc = probe(Some(&compiler))?;
            if levels.len() < 2 {
                return config("--levels needs at least two levels to compare");
            }
            let verdict = differential_test(&text, &[cc], &levels, &DiffLimits::default())?;
            for o in verdict.matrix() {
                let out = match &o.run {
                    splicefuzz::difftest::RunResult::Ok { stdout } => stdout.trim().replace(' ', ""),
                    other => format!("{other:?}").split_whitespace().next().unwrap_or("").to_string(),
                };
                println!("cell={} output={out}", o.cell());
            }
            match verdict {
                Verdict::Pass { .. } => println!("verdict=pass"),
                Verdict::Bug(r) => {
                    println!("verdict={} bucket={}", r.kind, r.bucket);
                    return Err(anyhow::anyhow!("{} across levels", r.kind).into());
                }
            }
        }
    }
    Ok(())
}

fn status_text(s: &splicefuzz::pipeline::SnippetStatus) -> String {
    use splicefuzz::pipeline::SnippetStatus::*;
    match s {
        Admitted { entry } => format!("admitted entry={entry}"),
        Duplicate { entry } => format!("duplicate entry={entry}"),
        Rejected { stage, reason } => format!("rejected stage={stage} reason={:?}", reason),
    }
}

/// `prog.c` with suffix `log` gives `prog.log`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
