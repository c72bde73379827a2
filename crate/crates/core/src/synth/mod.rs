//! Program synthesis: grow a seed function into a whole program by splicing
//! in calls to other profiled functions and reads and writes of fresh
//! globals, each placed so that the values the seed computes do not change.
//! The program's output checksum is therefore known before it is compiled.

pub mod analysis;
pub mod choose;
pub mod driver;
pub mod rewrite;

#[cfg(test)]
mod tests;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use analysis::{analyze, EntryAnalysis, MatchedExpr, Var};
pub use choose::{Ask, Choice, Chooser, RngChooser, ScriptedChooser};
pub use driver::{audit, fnv1a_words, AuditReport};
pub use rewrite::{
    massage, syn_func_call, syn_global, synthesize_expression, CallTarget, GlobalVar, Predicted, Rewrite,
    RewriteError, RewriteKind, SynthExpr,
};

use crate::cfront::types::IntType;
use crate::code_db::{Database, DbError, Filter};
use rewrite::Code;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Rounds of picking a function in the program and rewriting it.
    pub iterations: usize,
    /// Chance that a matched expression is rewritten at all.
    pub p_synth: f64,
    /// Chance that a rewrite inserts a call rather than using a global.
    pub p_call: f64,
    pub rng_seed: u64,
    /// Programs synthesized from each seed function by the fuzzing loop.
    pub mutants_per_seed: usize,
    /// Inclusive range for the number of generator globals.
    pub global_count: (usize, usize),
    /// Cap on the estimated number of probe-equivalent evaluations one run of
    /// the program performs; call insertions beyond it are skipped.
    pub cost_budget: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            iterations: 100,
            p_synth: 0.2,
            p_call: 0.5,
            rng_seed: 0,
            mutants_per_seed: 10,
            global_count: (1, 8),
            cost_budget: 20_000_000,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        for (name, p) in [("p_synth", self.p_synth), ("p_call", self.p_call)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        let (lo, hi) = self.global_count;
        if lo == 0 || lo > hi {
            return bad(format!("global_count ({lo}, {hi}) must satisfy 1 <= min <= max"));
        }
        if self.mutants_per_seed == 0 {
            return bad("mutants_per_seed must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
}

/// One function placed in the program, called with one fixed profiled input.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionUse {
    /// Index into the database's entries.
    pub entry: usize,
    pub id: String,
    pub name: String,
    pub profile: usize,
    /// Estimated calls per program run.
    pub invocations: u64,
}

/// A logged rewrite: `old` at `line` of `function` became `new`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replacement {
    pub entry: String,
    pub function: String,
    pub line: u32,
    pub kind: RewriteKind,
    pub old: String,
    pub new: String,
    pub predicted: Predicted,
}

impl Replacement {
    pub fn log_line(&self) -> String {
        format!("R\t{}\t{}\t{}\t{}\t{}", self.entry, self.line, self.old, self.new, self.predicted)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Edit {
    /// Byte range replaced, or an empty range where a statement is inserted.
    pub start: usize,
    pub end: usize,
    pub insert: bool,
    pub code: Vec<Code>,
    pub log: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct UseState {
    pub info: FunctionUse,
    pub edits: Vec<Edit>,
    consumed: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesizedProgram {
    pub text: String,
    /// The same program with every generated value checked at run time.
    #[serde(skip)]
    pub audit_text: String,
    /// For each audit check, the replacement it belongs to.
    #[serde(skip)]
    pub check_owner: Vec<usize>,
    pub functions: Vec<FunctionUse>,
    pub globals: Vec<GlobalVar>,
    pub replacement_log: Vec<Replacement>,
    pub predicted_checksum: u64,
    pub estimated_cost: u64,
}

impl SynthesizedProgram {
    pub fn log_text(&self) -> String {
        let mut s: String = self.replacement_log.iter().map(|r| r.log_line() + "\n").collect();
        s.push_str(&format!("C\t{:016x}\n", self.predicted_checksum));
        s
    }
}

pub const GLOBAL_TYPES: [IntType; 8] = [
    IntType::I8,
    IntType::U8,
    IntType::I16,
    IntType::U16,
    IntType::I32,
    IntType::U32,
    IntType::I64,
    IntType::U64,
];

/// Between `count.0` and `count.1` globals named `g0`, `g1`, ... with random
/// integer types and initial values.
pub fn generate_global_vars(chooser: &mut dyn Chooser, count: (usize, usize)) -> Vec<GlobalVar> {
    let n = count.0 + chooser.pick(Choice::GlobalCount, count.1 - count.0 + 1, &|i| (count.0 + i).to_string());
    (0..n)
        .map(|i| {
            let ty = GLOBAL_TYPES[chooser.pick(Choice::GlobalType, GLOBAL_TYPES.len(), &|k| {
                GLOBAL_TYPES[k].c_name().to_string()
            })];
            let init = ty.wrap(chooser.value(ty));
            GlobalVar { name: format!("g{i}"), ty, init }
        })
        .collect()
}

/// Synthesizes programs from one database, caching per-function analyses.
pub struct Synthesizer<'a> {
    db: &'a Database,
    cache: HashMap<(usize, usize), Arc<EntryAnalysis>>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(db: &'a Database) -> Self {
        Synthesizer { db, cache: HashMap::new() }
    }

    pub fn db(&self) -> &'a Database {
        self.db
    }

    pub fn analysis(&mut self, entry: usize, profile: usize) -> Arc<EntryAnalysis> {
        let db = self.db;
        self.cache
            .entry((entry, profile))
            .or_insert_with(|| {
                let e = &db.entries[entry];
                Arc::new(analyze(e, &e.profiles[profile]))
            })
            .clone()
    }

    /// Integer rvalue basic expressions of an entry observed under one of its
    /// profiles, in source order.
    pub fn get_matched_exprs(&mut self, entry: usize, profile: usize) -> Vec<MatchedExpr> {
        self.analysis(entry, profile).sites.clone()
    }

    /// A seed-eligible entry and one of its profiles.
    pub fn prepare_seed(&self, chooser: &mut dyn Chooser) -> Result<(usize, usize), SynthError> {
        let idx = self.db.indices(Filter::SeedEligible);
        if idx.is_empty() {
            return Err(DbError::EmptySelection(Filter::SeedEligible).into());
        }
        let entries = &self.db.entries;
        let e = idx[chooser.pick(Choice::Seed, idx.len(), &|i| entries[idx[i]].name().to_string())];
        let profiles = &entries[e].profiles;
        let p = chooser.pick(Choice::SeedProfile, profiles.len(), &|i| profiles[i].input.to_string());
        Ok((e, p))
    }

    pub fn synthesize(&mut self, config: &SynthesisConfig) -> Result<SynthesizedProgram, SynthError> {
        let mut chooser = RngChooser::new(config.rng_seed);
        self.synthesize_with(config, &mut chooser, None)
    }

    /// Run the synthesis loop with explicit choices, optionally from a fixed
    /// seed `(entry, profile)`.
    pub fn synthesize_with(
        &mut self,
        config: &SynthesisConfig,
        chooser: &mut dyn Chooser,
        seed: Option<(usize, usize)>,
    ) -> Result<SynthesizedProgram, SynthError> {
        config.validate()?;
        let globals = generate_global_vars(chooser, config.global_count);
        let (se, sp) = match seed {
            Some(s) => s,
            None => self.prepare_seed(chooser)?,
        };
        let db = self.db;
        let mut uses = vec![UseState {
            info: use_info(db, se, sp, 1),
            edits: vec![],
            consumed: vec![],
        }];
        let mut cost = self.analysis(se, sp).cost;
        let mut log: Vec<Replacement> = Vec::new();
        let callees = db.indices(Filter::CallInsertable);

        for _ in 0..config.iterations {
            let ti = chooser.pick(Choice::Target, uses.len(), &|i| uses[i].info.name.clone());
            let (te, tp) = (uses[ti].info.entry, uses[ti].info.profile);
            let an = self.analysis(te, tp);
            for m in &an.sites {
                let subject = format!("{}:{}:{}", m.owner, m.line, m.text);
                if uses[ti].consumed.iter().any(|&(a, b)| m.overlaps(a, b)) {
                    continue;
                }
                if !chooser.flip(Choice::Rewrite, config.p_synth, &subject) {
                    continue;
                }
                let outcome = if chooser.flip(Choice::UseCall, config.p_call, &subject) {
                    self.try_call(m, &an, &uses, ti, callees, cost, config.cost_budget, chooser)
                } else {
                    try_global(m, &an, &globals, chooser).map(|r| (r, None))
                };
                let (rw, callee) = match outcome {
                    Ok(x) => x,
                    Err(e) => {
                        log::trace!("{}:{} `{}`: {e}", m.owner, m.line, m.text);
                        continue;
                    }
                };
                if let Some((ce, cp, calls, added)) = callee {
                    cost += added;
                    uses.push(UseState { info: use_info(db, ce, cp, calls + 1), edits: vec![], consumed: vec![] });
                }
                let (start, end, insert) = match rw.kind {
                    RewriteKind::GlobalWrite => {
                        let at = m.write_at.expect("write-back site");
                        (at, at, true)
                    }
                    _ => (m.start, m.end, false),
                };
                let entry = &db.entries[te];
                log.push(Replacement {
                    entry: entry.id.clone(),
                    function: entry.name().to_string(),
                    line: m.line,
                    kind: rw.kind,
                    old: m.text.clone(),
                    new: rewrite::render(&rw.code),
                    predicted: rw.predicted,
                });
                let u = &mut uses[ti];
                u.consumed.push((m.start, m.end));
                u.edits.push(Edit { start, end, insert, code: rw.code, log: log.len() - 1 });
            }
        }

        let (text, _) = driver::assemble(db, &uses, &globals, false);
        let (audit_text, check_owner) = driver::assemble(db, &uses, &globals, true);
        let returns: Vec<i128> = uses
            .iter()
            .map(|u| db.entries[u.info.entry].profiles[u.info.profile].output_int().expect("integer return"))
            .collect();
        Ok(SynthesizedProgram {
            text,
            audit_text,
            check_owner,
            predicted_checksum: driver::checksum(&returns, &globals),
            functions: uses.into_iter().map(|u| u.info).collect(),
            globals,
            replacement_log: log,
            estimated_cost: cost,
        })
    }

    /// Pick a callee not yet in the program and build the call rewrite. On
    /// success also returns the callee, its profile, the calls it will get
    /// from this site and the added cost.
    #[allow(clippy::too_many_arguments)]
    fn try_call(
        &mut self,
        m: &MatchedExpr,
        an: &EntryAnalysis,
        uses: &[UseState],
        ti: usize,
        callees: &[usize],
        cost: u64,
        budget: u64,
        chooser: &mut dyn Chooser,
    ) -> Result<(Rewrite, Option<(usize, usize, u64, u64)>), RewriteError> {
        let skip = |why: String| Err(RewriteError::SkipRewrite(why));
        if callees.is_empty() {
            return skip("no call-insertable functions".into());
        }
        let entries = &self.db.entries;
        let ce = callees[chooser.pick(Choice::Callee, callees.len(), &|i| entries[callees[i]].name().to_string())];
        let callee = &entries[ce];
        if uses.iter().any(|u| u.info.entry == ce) {
            return skip(format!("{} is already in the program", callee.name()));
        }
        if an.names.contains(callee.name()) {
            return skip(format!("{} is shadowed here", callee.name()));
        }
        let cp = chooser.pick(Choice::CalleeProfile, callee.profiles.len(), &|i| callee.profiles[i].input.to_string());
        let calls = uses[ti].info.invocations.saturating_mul(m.count());
        let added = calls.saturating_mul(self.analysis(ce, cp).cost);
        if cost.saturating_add(added) > budget {
            return skip(format!("cost {added} exceeds the remaining budget"));
        }
        let profile = &callee.profiles[cp];
        let int = |t: &crate::cfront::types::TypeDesc| t.as_int().expect("call-insertable signature");
        let target = CallTarget {
            name: callee.name(),
            params: callee.signature.params.iter().map(int).collect(),
            inputs: profile.input.0.iter().map(|v| v.as_int().expect("scalar input")).collect(),
            ret: int(&callee.signature.ret),
            output: profile.output_int().expect("integer output"),
        };
        let rw = syn_func_call(m, &target, chooser)?;
        Ok((rw, Some((ce, cp, calls, added))))
    }
}

fn try_global(
    m: &MatchedExpr,
    an: &EntryAnalysis,
    globals: &[GlobalVar],
    chooser: &mut dyn Chooser,
) -> Result<Rewrite, RewriteError> {
    let g = &globals[chooser.pick(Choice::Global, globals.len(), &|i| globals[i].name.clone())];
    if an.names.contains(&g.name) {
        return Err(RewriteError::SkipRewrite(format!("{} is shadowed here", g.name)));
    }
    syn_global(m, g, chooser)
}

fn use_info(db: &Database, entry: usize, profile: usize, invocations: u64) -> FunctionUse {
    let e = &db.entries[entry];
    FunctionUse { entry, id: e.id.clone(), name: e.name().to_string(), profile, invocations }
}

/// Synthesize one program from `db` with a seeded RNG.
pub fn synthesize(db: &Database, config: &SynthesisConfig) -> Result<SynthesizedProgram, SynthError> {
    Synthesizer::new(db).synthesize(config)
}
