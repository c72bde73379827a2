//! Where a profiled function may be rewritten, and which variables have a
//! known value there.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::cfront::analysis::{all_subexprs, storage_root, unconditional_subexprs, written_operand};
use crate::cfront::ast::*;
use crate::cfront::types::IntType;
use crate::cfront::{basic_exprs_of, ExprContext, SourceUnit, SymKind};
use crate::code_db::FunctionEntry;
use crate::profiler::{probe_sites, Phase, Profile};

/// A variable whose value is known wherever a given expression is evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Var {
    pub name: String,
    pub ty: IntType,
    pub value: i128,
}

/// An integer rvalue basic expression the profile saw evaluated.
#[derive(Debug, Clone, Serialize)]
pub struct MatchedExpr {
    pub owner: String,
    pub text: String,
    pub line: u32,
    pub start: usize,
    pub end: usize,
    pub ty: IntType,
    /// Every value observed for this text on this line.
    pub values: Vec<i128>,
    /// Evaluations of this occurrence per invocation.
    pub hits: u64,
    /// Variables usable as call arguments here.
    pub vars: Vec<Var>,
    /// Offset just past the enclosing statement, when a write-back of this
    /// expression may follow it.
    #[serde(skip)]
    pub write_at: Option<usize>,
}

impl MatchedExpr {
    pub fn stable(&self) -> Option<i128> {
        let first = *self.values.first()?;
        self.values.iter().all(|&v| v == first).then_some(first)
    }

    pub fn count(&self) -> u64 {
        self.hits
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone)]
pub struct EntryAnalysis {
    pub sites: Vec<MatchedExpr>,
    /// Every identifier spelled in the function's text.
    pub names: BTreeSet<String>,
    /// Probe records per invocation, plus one for the call itself.
    pub cost: u64,
}

/// Expressions evaluated by `s` itself, including `for` declarations.
fn stmt_exprs(s: &Stmt) -> Vec<&Expr> {
    let mut v = s.own_exprs();
    if let StmtKind::For { init: ForInit::Decl(d), .. } = &s.kind {
        v.extend(d.init_exprs());
    }
    v
}

fn identifiers(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|w| w.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_'))
        .map(str::to_string)
        .collect()
}

struct Facts {
    modified: HashSet<usize>,
    address_taken: HashSet<usize>,
}

fn facts<'a>(unit: &SourceUnit, exprs: impl IntoIterator<Item = &'a Expr>) -> Facts {
    let mut f = Facts { modified: HashSet::new(), address_taken: HashSet::new() };
    let sym = |e: &Expr| storage_root(e).and_then(|r| unit.sema.resolution.get(&r.id).copied());
    for e in exprs {
        for x in all_subexprs(e) {
            if let Some(i) = written_operand(x).and_then(sym) {
                f.modified.insert(i);
            }
            if let ExprKind::Unary { op: UnaryOp::AddrOf, operand } = &x.kind {
                if let Some(i) = sym(operand) {
                    f.address_taken.insert(i);
                }
            }
        }
    }
    f
}

pub fn analyze(entry: &FunctionEntry, profile: &Profile) -> EntryAnalysis {
    let unit = &entry.unit;
    let sema = &unit.sema;
    let mut stmts: Vec<&Stmt> = Vec::new();
    unit.function.body.visit(&mut |s| stmts.push(s));
    let whole = facts(unit, stmts.iter().flat_map(|s| stmt_exprs(s)));
    let line_of: HashMap<NodeId, u32> = stmts.iter().map(|s| (s.id, s.span.line)).collect();
    let observed = |line: u32, text: &str, phase: Phase| -> Option<Vec<i128>> {
        let o = profile.observation(line, text, phase)?;
        if !o.bits.is_empty() {
            return None;
        }
        o.values.iter().map(|v| v.parse().ok()).collect()
    };
    let stable_at = |line: u32, text: &str, phase: Phase| -> Option<i128> {
        let v = observed(line, text, phase)?;
        v.iter().all(|x| *x == v[0]).then(|| v[0])
    };

    // occurrences sharing a line and text share an observation; the per-site
    // counts tell which of them actually ran
    let hits: HashMap<(usize, usize), u64> = if profile.site_hits.is_empty() {
        HashMap::new()
    } else {
        probe_sites(unit)
            .iter()
            .zip(&profile.site_hits)
            .filter(|(p, _)| p.phase == Phase::Pre)
            .map(|(p, &h)| ((p.start, p.end), h))
            .collect()
    };

    let mut sites = Vec::new();
    for s in &stmts {
        match &s.kind {
            StmtKind::Case(_) => continue,
            StmtKind::Decl(d) if d.spec.storage.is_some() => continue,
            _ => {}
        }
        let own = stmt_exprs(s);
        let local = facts(unit, own.iter().copied());
        let declared_here: BTreeSet<&str> = sema
            .symbols
            .iter()
            .filter(|sym| sym.decl_stmt == Some(s.id))
            .map(|sym| sym.name.as_str())
            .collect();

        // Variables unmodified in the whole function with a known value.
        let mut rule_b: BTreeMap<String, Var> = BTreeMap::new();
        for &i in sema.visible.get(&s.id).map(|v| v.as_slice()).unwrap_or(&[]) {
            let sym = &sema.symbols[i];
            let Some(ty) = sym.ty.as_int() else { continue };
            if declared_here.contains(sym.name.as_str()) || whole.modified.contains(&i) || whole.address_taken.contains(&i) {
                continue;
            }
            let value = match sym.kind {
                SymKind::Param => sym.param_index.and_then(|k| profile.input.0.get(k)).and_then(|v| v.as_int()),
                SymKind::Local if !sym.is_static && !sym.in_switch_body && sym.has_init => sym
                    .decl_stmt
                    .and_then(|d| line_of.get(&d))
                    .and_then(|&line| stable_at(line, &sym.name, Phase::Post)),
                SymKind::Global => sym.const_value,
                _ => None,
            };
            if let Some(value) = value {
                rule_b.insert(sym.name.clone(), Var { name: sym.name.clone(), ty, value });
            }
        }

        let segments: Vec<Vec<&Expr>> = match &s.kind {
            StmtKind::Decl(_) => vec![own.clone()],
            _ => own.iter().map(|e| vec![*e]).collect(),
        };
        let block_level = matches!(s.kind, StmtKind::Expr(_) | StmtKind::Decl(_));
        for seg in segments {
            let unconditional: Vec<&Expr> = seg.iter().flat_map(|e| unconditional_subexprs(e)).collect();
            let always: HashSet<NodeId> = unconditional.iter().map(|x| x.id).collect();
            // Variables read on every evaluation of this segment and not
            // written by the statement: their observed value is their value.
            let mut vars = rule_b.clone();
            for x in &unconditional {
                let ExprKind::Ident(name) = &x.kind else { continue };
                let Some(&i) = sema.resolution.get(&x.id) else { continue };
                let sym = &sema.symbols[i];
                let Some(ty) = sym.ty.as_int() else { continue };
                if !matches!(sym.kind, SymKind::Local | SymKind::Param)
                    || declared_here.contains(name.as_str())
                    || local.modified.contains(&i)
                    || whole.address_taken.contains(&i)
                    || vars.contains_key(name)
                {
                    continue;
                }
                if let Some(value) = stable_at(x.span.line, name, Phase::Pre) {
                    vars.insert(name.clone(), Var { name: name.clone(), ty, value });
                }
            }
            let vars: Vec<Var> = vars.into_values().collect();
            for e in &seg {
                for (x, ctx) in basic_exprs_of(unit, e) {
                    if ctx != ExprContext::Rvalue {
                        continue;
                    }
                    let Some(ty) = x.ty.as_int() else { continue };
                    let text = unit.text_of(x.span);
                    let Some(values) = observed(x.span.line, text, Phase::Pre) else { continue };
                    let hits = if hits.is_empty() {
                        values.len() as u64
                    } else {
                        hits.get(&(x.span.start, x.span.end)).copied().unwrap_or(0)
                    };
                    if hits == 0 {
                        continue;
                    }
                    let stable = values.iter().all(|v| *v == values[0]);
                    let write_at = (block_level && stable && always.contains(&x.id))
                        .then(|| write_back_ok(unit, x, &declared_here, &local, &whole))
                        .filter(|ok| *ok)
                        .map(|_| s.span.end);
                    sites.push(MatchedExpr {
                        owner: unit.name().to_string(),
                        text: text.to_string(),
                        line: x.span.line,
                        start: x.span.start,
                        end: x.span.end,
                        ty,
                        values,
                        hits,
                        vars: vars.clone(),
                        write_at,
                    });
                }
            }
        }
    }
    sites.sort_by_key(|m| (m.start, std::cmp::Reverse(m.end)));
    EntryAnalysis {
        sites,
        names: identifiers(&unit.original_text),
        cost: profile.record_count() as u64 + 1,
    }
}

/// A plain variable that keeps its value once its statement completes.
fn write_back_ok(unit: &SourceUnit, x: &Expr, declared_here: &BTreeSet<&str>, local: &Facts, whole: &Facts) -> bool {
    let ExprKind::Ident(name) = &x.kind else { return false };
    let Some(&i) = unit.sema.resolution.get(&x.id) else { return false };
    let sym = &unit.sema.symbols[i];
    matches!(sym.kind, SymKind::Local | SymKind::Param | SymKind::Global)
        && !declared_here.contains(name.as_str())
        && !local.modified.contains(&i)
        && !whole.address_taken.contains(&i)
}
