//! Source-level instrumentation. Every integer or floating rvalue basic
//! expression is wrapped in place by a statement expression that logs its
//! value; assignment targets and initialized locals are logged again after
//! their statement.

use std::collections::HashMap;

use super::{decode_value, group_observations, InputVector, Phase, Profile, ProfileError};
use crate::cfront::analysis::{plain_root, unconditional_subexprs, written_operand};
use crate::cfront::ast::*;
use crate::cfront::types::TypeDesc;
use crate::cfront::{basic_exprs_of, ExprContext, SourceUnit, SymKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeSite {
    pub line: u32,
    pub text: String,
    pub phase: Phase,
    pub ty: TypeDesc,
    /// Byte range wrapped in place (`Pre`), or an empty range at the end of
    /// the statement after which the value is logged (`Post`).
    pub start: usize,
    pub end: usize,
}

pub(crate) fn text_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn loggable(t: &TypeDesc) -> bool {
    t.is_arith()
}

/// Probe sites in source order, deterministic for a given unit.
pub fn probe_sites(unit: &SourceUnit) -> Vec<ProbeSite> {
    let mut out = Vec::new();
    unit.function.body.visit(&mut |s| stmt_sites(unit, s, &mut out));
    out
}

fn stmt_sites(unit: &SourceUnit, s: &Stmt, out: &mut Vec<ProbeSite>) {
    let exprs = match &s.kind {
        StmtKind::Case(_) => return,
        StmtKind::Decl(d) if d.spec.storage.is_some() => return,
        _ => s.own_exprs(),
    };
    for e in &exprs {
        for (x, ctx) in basic_exprs_of(unit, e) {
            if ctx == ExprContext::Rvalue && loggable(&x.ty) {
                out.push(ProbeSite {
                    line: x.span.line,
                    text: unit.text_of(x.span).to_string(),
                    phase: Phase::Pre,
                    ty: x.ty.clone(),
                    start: x.span.start,
                    end: x.span.end,
                });
            }
        }
    }
    let mut post: Vec<(String, TypeDesc)> = Vec::new();
    match &s.kind {
        StmtKind::Expr(e) => {
            for x in unconditional_subexprs(e) {
                let Some(target) = written_operand(x) else { continue };
                if plain_root(target).is_none() || !loggable(&target.ty) {
                    continue;
                }
                let target = target.unparen();
                post.push((unit.text_of(target.span).to_string(), target.ty.clone()));
            }
        }
        StmtKind::Decl(d) => {
            for item in d.items.iter().filter(|i| i.init.is_some()) {
                let sym = unit.sema.symbols.iter().find(|sym| {
                    sym.kind == SymKind::Local && sym.decl_stmt == Some(s.id) && sym.name == item.decl.name
                });
                if let Some(sym) = sym.filter(|sym| loggable(&sym.ty)) {
                    post.push((sym.name.clone(), sym.ty.clone()));
                }
            }
        }
        _ => {}
    }
    let mut seen = Vec::new();
    for (text, ty) in post {
        if seen.contains(&text) {
            continue;
        }
        seen.push(text.clone());
        out.push(ProbeSite { line: s.span.line, text, phase: Phase::Post, ty, start: s.span.end, end: s.span.end });
    }
}

fn log_fn(t: &TypeDesc) -> &'static str {
    match t {
        TypeDesc::Int { int } if int.signed => "__lf_pi",
        TypeDesc::Int { .. } => "__lf_pu",
        TypeDesc::Float32 => "__lf_pf",
        _ => "__lf_pd",
    }
}

/// The unit's text with every probe applied, and the sites it logs.
pub(crate) fn instrument(unit: &SourceUnit) -> Result<(String, Vec<ProbeSite>), ProfileError> {
    let sites = probe_sites(unit);
    let mut keys: HashMap<(u32, u64, Phase), &str> = HashMap::new();
    for s in &sites {
        let prev = keys.insert((s.line, text_hash(&s.text), s.phase), &s.text);
        if prev.is_some_and(|p| p != s.text) {
            return Err(ProfileError::InstrumentationUnsupported(format!("hash collision on line {}", s.line)));
        }
    }
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by_key(|&i| (sites[i].start, std::cmp::Reverse(sites[i].end), i));
    let text = &unit.original_text;
    let mut next = 0;
    let mut counter = 0;
    let out = render(text, 0, text.len(), &sites, &order, &mut next, &mut counter);
    Ok((out, sites))
}

fn render(
    text: &str,
    start: usize,
    end: usize,
    sites: &[ProbeSite],
    order: &[usize],
    next: &mut usize,
    counter: &mut usize,
) -> String {
    let mut out = String::new();
    let mut pos = start;
    while *next < order.len() {
        let index = order[*next];
        let site = &sites[index];
        let inside = if site.start == site.end { site.start <= end && start < end } else { site.start < end };
        if !inside || site.start < pos {
            break;
        }
        *next += 1;
        out.push_str(&text[pos..site.start]);
        let h = text_hash(&site.text);
        let f = log_fn(&site.ty);
        match site.phase {
            Phase::Pre => {
                let inner = render(text, site.start, site.end, sites, order, next, counter);
                let v = format!("__lf_v{counter}");
                *counter += 1;
                out.push_str(&format!(
                    "({{ __auto_type {v} = ({inner}); {f}('P', {}, 0x{h:016x}ull, {index}, {v}); {v}; }})",
                    site.line
                ));
            }
            Phase::Post => {
                out.push_str(&format!(" {f}('A', {}, 0x{h:016x}ull, {index}, ({}));", site.line, site.text));
            }
        }
        pos = site.end;
    }
    out.push_str(&text[pos..end]);
    out
}

/// The two invocations' log lines, each ending with its `O` record.
pub(crate) fn split_invocations(log: &str) -> Result<(Vec<&str>, Vec<&str>), ProfileError> {
    let mut parts: Vec<Vec<&str>> = Vec::new();
    for line in log.lines() {
        if line.starts_with("M\t") {
            parts.push(Vec::new());
        } else if let Some(p) = parts.last_mut() {
            p.push(line);
        } else {
            return Err(ProfileError::RunFailed("log does not start with an invocation marker".into()));
        }
    }
    let complete = |p: &Vec<&str>| p.last().is_some_and(|l| l.starts_with("O\t"));
    match <[Vec<&str>; 2]>::try_from(parts) {
        Ok([a, b]) if complete(&a) && complete(&b) => Ok((a, b)),
        _ => Err(ProfileError::RunFailed("incomplete probe log".into())),
    }
}

/// Build the profile from one invocation's log lines.
pub(crate) fn decode(
    unit: &SourceUnit,
    sites: &[ProbeSite],
    lines: &[&str],
    input: InputVector,
) -> Result<Profile, ProfileError> {
    let bad = |l: &str| ProfileError::RunFailed(format!("malformed probe record `{l}`"));
    let mut by_key: HashMap<(u32, u64, Phase), &ProbeSite> = HashMap::new();
    for s in sites {
        by_key.insert((s.line, text_hash(&s.text), s.phase), s);
    }
    let mut records = Vec::new();
    let mut site_hits = vec![0u64; sites.len()];
    let mut output = None;
    for l in lines {
        let f: Vec<&str> = l.split('\t').collect();
        match f.as_slice() {
            ["O", v] => output = Some(decode_value(&unit.function.ret_ty, v).ok_or_else(|| bad(l))?),
            [k @ ("P" | "A"), line, h, index, v] => {
                let phase = if *k == "P" { Phase::Pre } else { Phase::Post };
                let line: u32 = line.parse().map_err(|_| bad(l))?;
                let h = u64::from_str_radix(h, 16).map_err(|_| bad(l))?;
                let site = by_key.get(&(line, h, phase)).ok_or_else(|| bad(l))?;
                let index: usize = index.parse().map_err(|_| bad(l))?;
                if sites.get(index).is_none_or(|s| s.line != line || s.text != site.text || s.phase != phase) {
                    return Err(bad(l));
                }
                site_hits[index] += 1;
                let (value, bits) = decode_value(&site.ty, v).ok_or_else(|| bad(l))?;
                records.push((line, site.text.clone(), phase, value, bits));
            }
            _ => return Err(bad(l)),
        }
    }
    let (output, output_bits) = output.ok_or_else(|| ProfileError::RunFailed("no output record".into()))?;
    Ok(Profile { input, output, output_bits, observations: group_observations(records), site_hits, idempotent: true })
}
