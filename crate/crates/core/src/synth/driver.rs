//! Whole-program assembly: headers, generator globals, the placed functions
//! (callees before callers) and a `main` that calls them with their profiled
//! inputs and prints a checksum of everything observable.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::Serialize;

use super::rewrite::{render, render_audit, GlobalVar};
use super::{SynthesizedProgram, UseState};
use crate::code_db::Database;
use crate::profiler::harness::call_parts;
use crate::profiler::{sanitizer_env, sanitizer_report};
use crate::toolchain::{compile_c, run_limited, CompilerSpec, Limits, ToolError};

const BASE_HEADERS: [&str; 4] = ["stdio.h", "stdlib.h", "string.h", "stdint.h"];
const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// FNV-1a over the little-endian bytes of each word.
pub fn fnv1a_words(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// The checksum `main` prints given each placed function's return value.
pub(crate) fn checksum(returns: &[i128], globals: &[GlobalVar]) -> u64 {
    let rs: Vec<u64> = returns.iter().map(|&r| r as u64).collect();
    let mut words = rs.clone();
    for g in globals {
        let mut u = g.init as u64;
        for r in &rs {
            u = u.wrapping_mul(31).wrapping_add(*r);
        }
        words.push(g.ty.wrap(u as i128) as u64);
    }
    fnv1a_words(&words)
}

const AUDIT_HEAD: &str = "\
#define __LF_CHECK(id, e, p) ({ __auto_type __lf_c##id = (e); __lf_hits[id]++; \
if (__lf_c##id != (p)) __lf_fails[id]++; __lf_gcheck(); __lf_c##id; })
";

fn render_use(db: &Database, u: &UseState, audit: Option<(&mut usize, &mut Vec<usize>)>) -> String {
    let text = &db.entries[u.info.entry].unit.original_text;
    let mut edits: Vec<&super::Edit> = u.edits.iter().collect();
    edits.sort_by_key(|e| (e.start, e.end));
    let mut out = String::with_capacity(text.len() * 2);
    let mut pos = 0;
    let mut audit = audit;
    for e in edits {
        out.push_str(&text[pos..e.start]);
        let code = match audit.as_mut() {
            Some((next, owner)) => {
                let first = **next;
                let s = render_audit(&e.code, next);
                owner.extend(std::iter::repeat_n(e.log, **next - first));
                s
            }
            None => render(&e.code),
        };
        if e.insert {
            out.push(' ');
            out.push_str(&code);
        } else {
            out.push('(');
            out.push_str(&code);
            out.push(')');
        }
        pos = e.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Program text and, for the audit variant, the owning log entry of every
/// check.
pub(crate) fn assemble(db: &Database, uses: &[UseState], globals: &[GlobalVar], audit: bool) -> (String, Vec<usize>) {
    let mut next = 0usize;
    let mut owner = Vec::new();
    let mut bodies = Vec::new();
    let mut headers: Vec<String> = BASE_HEADERS.iter().map(|h| format!("#include <{h}>")).collect();
    let mut seen: BTreeSet<String> = headers.iter().cloned().collect();
    // callees are always placed after their callers, so reverse order defines
    // every function before its first use
    for u in uses.iter().rev() {
        let text = render_use(db, u, audit.then_some((&mut next, &mut owner)));
        let mut body = String::new();
        for line in text.lines() {
            if line.trim_start().starts_with("#include") {
                if seen.insert(line.trim().to_string()) {
                    headers.push(line.trim().to_string());
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        bodies.push(body);
    }

    let mut out = headers.join("\n");
    out.push_str("\n\n");
    for g in globals {
        out.push_str(&format!("{} {} = {};\n", g.ty.c_name(), g.name, g.ty.literal(g.init)));
    }
    if audit {
        out.push_str(&format!(
            "\nstatic unsigned long __lf_hits[{n}];\nstatic unsigned long __lf_fails[{n}];\nstatic unsigned long __lf_gfails;\n",
            n = next.max(1)
        ));
        let conds: Vec<String> =
            globals.iter().map(|g| format!("{} != {}", g.name, g.ty.literal(g.init))).collect();
        out.push_str(&format!(
            "static void __lf_gcheck(void) {{\n    if ({})\n        __lf_gfails++;\n}}\n",
            if conds.is_empty() { "0".to_string() } else { conds.join(" || ") }
        ));
        out.push_str(AUDIT_HEAD);
    }
    out.push('\n');
    for b in bodies {
        out.push_str(&b);
        out.push('\n');
    }
    out.push_str(&driver_main(db, uses, globals, audit.then_some(next)));
    (out, owner)
}

fn driver_main(db: &Database, uses: &[UseState], globals: &[GlobalVar], audit_checks: Option<usize>) -> String {
    let k = uses.len();
    let mut m = String::from("static uint64_t __lf_fnv(uint64_t h, uint64_t w) {\n");
    m.push_str("    for (int i = 0; i < 8; i++) {\n");
    m.push_str("        h ^= (w >> (8 * i)) & 0xff;\n");
    m.push_str(&format!("        h *= 0x{FNV_PRIME:x}ull;\n    }}\n    return h;\n}}\n\n"));
    if let Some(n) = audit_checks {
        m.push_str("static void __lf_report(void) {\n");
        m.push_str(&format!(
            "    for (int i = 0; i < {n}; i++)\n        fprintf(stderr, \"check %d %lu %lu\\n\", i, __lf_hits[i], __lf_fails[i]);\n"
        ));
        m.push_str("    fprintf(stderr, \"globals %lu\\n\", __lf_gfails);\n}\n\n");
    }
    m.push_str("int main(void) {\n");
    m.push_str(&format!("    uint64_t __lf_r[{k}];\n"));
    for (i, u) in uses.iter().enumerate() {
        let e = &db.entries[u.info.entry];
        let (decls, call) = call_parts(&e.unit, &e.profiles[u.info.profile].input, &format!("__lf_a{i}_"));
        for d in decls {
            m.push_str(&format!("    {d}\n"));
        }
        m.push_str(&format!("    __lf_r[{i}] = (uint64_t)({call});\n"));
    }
    m.push_str("    uint64_t __lf_u;\n");
    for g in globals {
        m.push_str(&format!("    __lf_u = (uint64_t){};\n", g.name));
        m.push_str(&format!("    for (int i = 0; i < {k}; i++)\n        __lf_u = __lf_u * 31u + __lf_r[i];\n"));
        m.push_str(&format!("    {} = ({})__lf_u;\n", g.name, g.ty.c_name()));
    }
    m.push_str(&format!("    uint64_t __lf_h = 0x{FNV_OFFSET:x}ull;\n"));
    m.push_str(&format!("    for (int i = 0; i < {k}; i++)\n        __lf_h = __lf_fnv(__lf_h, __lf_r[i]);\n"));
    for g in globals {
        m.push_str(&format!("    __lf_h = __lf_fnv(__lf_h, (uint64_t){});\n", g.name));
    }
    m.push_str("    printf(\"checksum = %016llx\\n\", (unsigned long long)__lf_h);\n");
    if audit_checks.is_some() {
        m.push_str("    __lf_report();\n");
    }
    m.push_str("    return 0;\n}\n");
    m
}

/// Parse `checksum = <hex>` from a program's standard output.
pub fn parse_checksum(stdout: &str) -> Option<u64> {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("checksum = "))
        .and_then(|h| u64::from_str_radix(h.trim(), 16).ok())
}

/// Outcome of running the audit build of a program.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub compiled: bool,
    pub compile_log: String,
    pub checksum: Option<u64>,
    pub predicted: u64,
    pub checks: usize,
    /// Checks never evaluated.
    pub unreached: Vec<usize>,
    /// Checks that saw a value other than the generated one.
    pub failed: Vec<usize>,
    /// Replacement-log indices owning a failed check.
    pub failed_replacements: Vec<usize>,
    /// Evaluations at which some generator global differed from its initial value.
    pub global_failures: u64,
    pub sanitizer: Option<String>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.compiled
            && self.sanitizer.is_none()
            && self.checksum == Some(self.predicted)
            && self.unreached.is_empty()
            && self.failed.is_empty()
            && self.global_failures == 0
    }
}

/// Build the audit variant at `-O0` with ASan and UBSan, run it, and compare
/// every generated value and the checksum with the prediction.
pub fn audit(program: &SynthesizedProgram, compiler: &CompilerSpec, run_timeout: Duration) -> Result<AuditReport, ToolError> {
    let dir = tempfile::tempdir()?;
    let flags = [
        "-O0",
        "-std=gnu11",
        "-w",
        "-g",
        "-fno-omit-frame-pointer",
        "-fsanitize=address,undefined",
        "-fno-sanitize-recover=all",
    ];
    let (out, bin) = compile_c(compiler, &program.audit_text, dir.path(), "audit", &flags, &Limits::compile_default())?;
    let checks = program.check_owner.len();
    let mut report = AuditReport {
        compiled: out.exit.success(),
        compile_log: out.stderr_str(),
        checksum: None,
        predicted: program.predicted_checksum,
        checks,
        unreached: vec![],
        failed: vec![],
        failed_replacements: vec![],
        global_failures: 0,
        sanitizer: None,
    };
    if !report.compiled {
        return Ok(report);
    }
    let mut cmd = std::process::Command::new(&bin);
    sanitizer_env(&mut cmd);
    let run = run_limited(&mut cmd, &Limits::new(run_timeout, None))?;
    report.sanitizer = sanitizer_report(&run);
    report.checksum = parse_checksum(&run.stdout_str());
    let mut seen = vec![false; checks];
    for line in run.stderr_str().lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["check", id, hits, fails] => {
                let (Ok(id), Ok(hits), Ok(fails)) = (id.parse::<usize>(), hits.parse::<u64>(), fails.parse::<u64>()) else {
                    continue;
                };
                if id >= checks {
                    continue;
                }
                seen[id] = true;
                if hits == 0 {
                    report.unreached.push(id);
                }
                if fails > 0 {
                    report.failed.push(id);
                }
            }
            ["globals", n] => report.global_failures = n.parse().unwrap_or(u64::MAX),
            _ => {}
        }
    }
    if report.sanitizer.is_none() {
        report.unreached.extend(seen.iter().enumerate().filter(|(_, s)| !**s).map(|(i, _)| i));
    }
    let mut owners: Vec<usize> = report.failed.iter().map(|&c| program.check_owner[c]).collect();
    owners.dedup();
    report.failed_replacements = owners;
    Ok(report)
}
