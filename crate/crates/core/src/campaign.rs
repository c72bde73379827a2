//! Fuzzing campaigns: pick a seed, synthesize mutants around it, test each
//! one differentially and file whatever disagrees.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::code_db::Database;
use crate::difftest::{bucket_and_report, differential_test, BugKind, BugReport, DiffLimits, Level, Verdict};
use crate::synth::driver::audit;
use crate::synth::{RngChooser, SynthesisConfig, SynthesizedProgram, Synthesizer};
use crate::toolchain::{CompilerSpec, ToolError};

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub compilers: Vec<CompilerSpec>,
    pub levels: Vec<Level>,
    pub synthesis: SynthesisConfig,
    pub out_dir: PathBuf,
    pub limits: DiffLimits,
    pub reducer: Option<String>,
    /// Stop after this many seed rounds; run until interrupted when unset.
    pub rounds: Option<u64>,
}

impl CampaignConfig {
    pub fn new(compilers: Vec<CompilerSpec>, out_dir: PathBuf) -> Self {
        CampaignConfig {
            compilers,
            levels: Level::ALL.to_vec(),
            synthesis: SynthesisConfig::default(),
            out_dir,
            limits: DiffLimits::default(),
            reducer: None,
            rounds: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.compilers.is_empty() {
            return Err("at least one compiler is required".into());
        }
        if self.levels.is_empty() {
            return Err("at least one optimization level is required".into());
        }
        if self.compilers.len() * self.levels.len() < 2 {
            return Err("differential testing needs at least two compiler/level cells".into());
        }
        self.synthesis.validate().map_err(|e| e.to_string())
    }
}

/// Whether a disagreement survives the audit build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Triage {
    /// Every generated value checked out and the sanitizers stayed quiet, so
    /// the program is well defined and a compiler is at fault.
    CompilerBug,
    /// The program itself misbehaved.
    ValidityDefect,
}

impl std::fmt::Display for Triage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Triage::CompilerBug => "compiler-bug",
            Triage::ValidityDefect => "validity-defect",
        })
    }
}

pub fn triage(program: &SynthesizedProgram, trusted: &CompilerSpec, limits: &DiffLimits) -> Result<Triage, ToolError> {
    let report = audit(program, trusted, limits.run.timeout.max(Duration::from_secs(30)))?;
    Ok(if report.clean() { Triage::CompilerBug } else { Triage::ValidityDefect })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CampaignSummary {
    pub rounds: u64,
    pub programs: u64,
    pub passes: u64,
    pub bugs: BTreeMap<String, u64>,
    pub buckets: BTreeSet<String>,
    pub validity_defects: u64,
    pub interrupted: bool,
    pub elapsed_secs: f64,
}

impl CampaignSummary {
    pub fn bug_count(&self) -> u64 {
        self.bugs.values().sum()
    }

    pub fn key_values(&self) -> String {
        let mut s = format!(
            "rounds={} programs={} passes={} bugs={} buckets={} validity_defects={} interrupted={} elapsed_s={:.1}",
            self.rounds,
            self.programs,
            self.passes,
            self.bug_count(),
            self.buckets.len(),
            self.validity_defects,
            self.interrupted,
            self.elapsed_secs
        );
        for (k, n) in &self.bugs {
            s.push_str(&format!(" {k}={n}"));
        }
        s
    }
}

/// Seeds for round `round` and its mutants, all derived from the campaign seed.
fn derive(base: u64, round: u64, mutant: u64) -> u64 {
    let mut x = base ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ mutant.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Run rounds until `rounds` is reached or `stop` is raised. `progress`
/// receives one key=value line per tested program.
pub fn run_campaign(
    db: &Database,
    cfg: &CampaignConfig,
    stop: &AtomicBool,
    progress: &mut dyn FnMut(&str),
) -> anyhow::Result<CampaignSummary> {
    cfg.validate().map_err(anyhow::Error::msg)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let start = Instant::now();
    let mut synth = Synthesizer::new(db);
    let mut summary = CampaignSummary::default();
    let mut round = 0u64;
    'rounds: while cfg.rounds.is_none_or(|r| round < r) {
        if stop.load(Ordering::SeqCst) {
            summary.interrupted = true;
            break;
        }
        let seed = synth.prepare_seed(&mut RngChooser::new(derive(cfg.synthesis.rng_seed, round, u64::MAX)))?;
        for m in 0..cfg.synthesis.mutants_per_seed as u64 {
            if stop.load(Ordering::SeqCst) {
                summary.interrupted = true;
                break 'rounds;
            }
            let mut chooser = RngChooser::new(derive(cfg.synthesis.rng_seed, round, m));
            let program = synth.synthesize_with(&cfg.synthesis, &mut chooser, Some(seed))?;
            summary.programs += 1;
            let verdict = differential_test(&program.text, &cfg.compilers, &cfg.levels, &cfg.limits)?;
            match verdict {
                Verdict::Pass { .. } => {
                    summary.passes += 1;
                    progress(&format!("round={round} mutant={m} verdict=pass"));
                }
                Verdict::Bug(report) => {
                    let line = file_bug(&program, &report, cfg, &mut summary)?;
                    progress(&format!("round={round} mutant={m} {line}"));
                }
            }
        }
        round += 1;
        summary.rounds = round;
    }
    summary.elapsed_secs = start.elapsed().as_secs_f64();
    std::fs::write(cfg.out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn file_bug(
    program: &SynthesizedProgram,
    report: &BugReport,
    cfg: &CampaignConfig,
    summary: &mut CampaignSummary,
) -> anyhow::Result<String> {
    let mut triaged = None;
    if report.kind == BugKind::MiscompilationCandidate {
        let t = triage(program, &cfg.compilers[0], &cfg.limits)?;
        if t == Triage::ValidityDefect {
            summary.validity_defects += 1;
        }
        triaged = Some(t);
    }
    let art = bucket_and_report(report, &program.text, &cfg.compilers, &cfg.limits, &cfg.out_dir, cfg.reducer.as_deref())?;
    std::fs::write(art.dir.join("replacements.log"), program.log_text())?;
    if let Some(t) = triaged {
        std::fs::write(art.dir.join("triage.txt"), format!("{t}\n"))?;
    }
    // the reducer keeps running on its own; nothing here waits for it
    drop(art.reducer);
    *summary.bugs.entry(report.kind.to_string()).or_insert(0) += 1;
    summary.buckets.insert(report.bucket.clone());
    let mut line = format!("verdict={} bucket={} count={} dir={}", report.kind, art.bucket, art.count, art.dir.display());
    if let Some(t) = triaged {
        line.push_str(&format!(" triage={t}"));
    }
    Ok(line)
}
