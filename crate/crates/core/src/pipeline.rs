//! The offline phase end to end: scan a corpus, transform each snippet,
//! validate and profile the result, and store what survives.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cfront;
use crate::code_db::{DatabaseManifest, DbWriter};
use crate::corpus::{scan_corpus, CandidateSnippet};
use crate::llm::{transform_all, LlmConfig, PromptTemplate};
use crate::profiler::{admit_function, validate_and_profile, ProfilerConfig, Validation};

pub struct BuildConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub llm: LlmConfig,
    pub template: PromptTemplate,
    pub profiler: ProfilerConfig,
    pub jobs: usize,
    pub size_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SnippetStatus {
    Admitted { entry: String },
    Duplicate { entry: String },
    Rejected { stage: String, reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub snippet_id: String,
    pub origin: PathBuf,
    pub status: SnippetStatus,
    /// Present once the transformed code parsed.
    pub validation: Option<Validation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildSummary {
    pub scanned: usize,
    pub admitted: usize,
    pub duplicates: usize,
    pub rejected: usize,
    /// Rejected because the transformed function reads or writes outside its parameters.
    pub io_violations: usize,
    pub manifest: DatabaseManifest,
    pub records: Vec<SnippetRecord>,
}

impl BuildSummary {
    pub fn record(&self, origin_suffix: &str) -> Option<&SnippetRecord> {
        self.records.iter().find(|r| r.origin.ends_with(origin_suffix))
    }
}

fn config_digest(cfg: &BuildConfig) -> String {
    let mut h = Sha256::new();
    h.update(format!("{:?}", cfg.llm.mode));
    h.update(&cfg.llm.model);
    h.update(format!("{:?}", cfg.profiler.sanitizers));
    h.update(format!("{} {} {}", cfg.profiler.retry, cfg.profiler.successes, cfg.profiler.seed));
    h.update(&cfg.profiler.compiler.version);
    crate::corpus::hex(&h.finalize())[..16].to_string()
}

fn rejected(stage: &str, reason: impl Into<String>) -> SnippetStatus {
    SnippetStatus::Rejected { stage: stage.into(), reason: reason.into() }
}

/// One snippet through parsing, validation and profiling. Nothing is stored.
fn process(
    snippet: &CandidateSnippet,
    code: Result<String, String>,
    profiler: &ProfilerConfig,
) -> anyhow::Result<(SnippetStatus, Option<Validation>, Option<crate::code_db::FunctionEntry>)> {
    let code = match code {
        Ok(c) => c,
        Err(reason) => return Ok((rejected("transform", reason), None, None)),
    };
    let unit = match cfront::parse_function(&code) {
        Ok(u) => u,
        Err(e) => return Ok((rejected("parse", e.to_string()), None, None)),
    };
    let v = validate_and_profile(&unit, profiler)?;
    if !v.syntax.passed() {
        let reason = v.syntax.detail.lines().next().unwrap_or("").to_string();
        return Ok((rejected("syntax", reason), Some(v), None));
    }
    match admit_function(&snippet.id, &unit, v.profiles.clone()) {
        Ok(entry) => Ok((SnippetStatus::Admitted { entry: entry.id.clone() }, Some(v), Some(entry))),
        Err(r) => {
            let detail = v.attempts.last().map(|a| a.report.detail.lines().next().unwrap_or("").to_string());
            let reason = match detail {
                Some(d) if !d.is_empty() => format!("{}: {d}", r.reason),
                _ => r.reason,
            };
            Ok((rejected("profile", reason), Some(v), None))
        }
    }
}

/// Build (or extend) the database at `cfg.out` from `cfg.corpus`. A report
/// of every snippet's fate is written to `build-report.json` beside it.
pub fn build_database(cfg: &BuildConfig) -> anyhow::Result<BuildSummary> {
    let snippets = scan_corpus(&cfg.corpus, cfg.size_cap)?;
    let transforms = transform_all(&snippets, &cfg.template, &cfg.llm, cfg.jobs);
    let mut io_violations = 0;
    let codes: Vec<Result<String, String>> = transforms
        .into_iter()
        .map(|t| match t {
            Err(e) => Err(e.to_string()),
            Ok(t) if !t.violations.is_empty() => {
                if t.violations.iter().any(|v| v.is_io()) {
                    io_violations += 1;
                }
                let names: Vec<&str> = t.violations.iter().map(|v| v.as_str()).collect();
                Err(format!("violations: {}", names.join(", ")))
            }
            Ok(t) => t.extracted_code.ok_or_else(|| "no code extracted".to_string()),
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs.max(1)).build()?;
    let processed: Vec<_> = pool.install(|| {
        snippets.par_iter().zip(codes).map(|(s, code)| process(s, code, &cfg.profiler)).collect::<Vec<_>>()
    });

    let mut writer = DbWriter::create(&cfg.out, &config_digest(cfg))?;
    let mut records = Vec::new();
    for (s, p) in snippets.iter().zip(processed) {
        let (mut status, validation, entry) = p?;
        if let Some(entry) = entry {
            let (id, fresh) = writer.put_entry(&entry)?;
            if !fresh {
                status = SnippetStatus::Duplicate { entry: id };
            }
        }
        if let SnippetStatus::Rejected { stage, reason } = &status {
            log::info!("rejected {} at {stage}: {reason}", s.origin.display());
        }
        records.push(SnippetRecord { snippet_id: s.id.clone(), origin: s.origin.clone(), status, validation });
    }
    let manifest = writer.finish()?;
    let count = |f: fn(&SnippetStatus) -> bool| records.iter().filter(|r| f(&r.status)).count();
    let summary = BuildSummary {
        scanned: snippets.len(),
        admitted: count(|s| matches!(s, SnippetStatus::Admitted { .. })),
        duplicates: count(|s| matches!(s, SnippetStatus::Duplicate { .. })),
        rejected: count(|s| matches!(s, SnippetStatus::Rejected { .. })),
        io_violations,
        manifest,
        records,
    };
    write_report(&cfg.out, &summary)?;
    Ok(summary)
}

fn write_report(root: &Path, summary: &BuildSummary) -> anyhow::Result<()> {
    std::fs::write(root.join("build-report.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}
