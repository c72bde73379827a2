//! The on-disk database of validated, profiled functions.
//!
//! Layout: `manifest.json`, then `entries/<id>.c` holding the canonical
//! source and `entries/<id>.meta.json` holding signature, metrics and profiles.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cfront::ast::{Expr, ExprKind, StmtKind};
use crate::cfront::types::TypeDesc;
use crate::cfront::{self, Signature, SourceUnit};
use crate::profiler::Profile;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    /// Non-blank lines of the canonical source.
    pub loc: usize,
    /// `if`, `?:`, `case` labels and loop headers.
    pub branches: usize,
}

impl Metrics {
    pub fn of(unit: &SourceUnit) -> Metrics {
        let loc = unit.original_text.lines().filter(|l| !l.trim().is_empty()).count();
        let mut branches = 0;
        let mut count_expr = |e: &Expr| {
            e.visit(&mut |x| {
                if matches!(x.kind, ExprKind::Cond { .. }) {
                    branches += 1;
                }
            })
        };
        let mut stmts = 0;
        unit.function.body.visit(&mut |s| {
            if matches!(
                s.kind,
                StmtKind::If { .. }
                    | StmtKind::While { .. }
                    | StmtKind::DoWhile { .. }
                    | StmtKind::For { .. }
                    | StmtKind::Case(_)
            ) {
                stmts += 1;
            }
            if !matches!(s.kind, StmtKind::Case(_)) {
                s.own_exprs().into_iter().for_each(&mut count_expr);
            }
        });
        Metrics { loc, branches: branches + stmts }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionEntry {
    pub id: String,
    /// Parsed canonical source, file-scope names already prefixed.
    pub unit: SourceUnit,
    pub signature: Signature,
    pub profiles: Vec<Profile>,
    pub metrics: Metrics,
    /// Identifier of the snippet the function came from.
    pub origin: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Filter {
    SeedEligible,
    CallInsertable,
}

impl FunctionEntry {
    pub fn name(&self) -> &str {
        self.unit.name()
    }

    pub fn matches(&self, filter: Filter) -> bool {
        let sig = &self.signature;
        if sig.involves_float() || sig.ret.as_int().is_none() {
            return false;
        }
        match filter {
            Filter::SeedEligible => sig.params.iter().all(|p| match p.decay() {
                TypeDesc::Pointer { elem } => elem.as_int().is_some(),
                t => t.as_int().is_some(),
            }),
            Filter::CallInsertable => sig.params.iter().all(|p| p.as_int().is_some()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryMeta {
    id: String,
    origin: String,
    signature: Signature,
    metrics: Metrics,
    profiles: Vec<Profile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseManifest {
    pub version: u32,
    pub entry_count: usize,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub builder_config_digest: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch in {path}: {detail}")]
    SchemaMismatch { path: PathBuf, detail: String },
    #[error("no entry matches filter {0:?}")]
    EmptySelection(Filter),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DbError + '_ {
    move |source| DbError::Io { path: path.to_path_buf(), source }
}

fn schema(path: &Path, detail: impl std::fmt::Display) -> DbError {
    DbError::SchemaMismatch { path: path.to_path_buf(), detail: detail.to_string() }
}

/// A database opened for building. Entries are written as they arrive; the
/// manifest is written by [`DbWriter::finish`].
pub struct DbWriter {
    root: PathBuf,
    ids: std::collections::BTreeSet<String>,
    digest: String,
}

impl DbWriter {
    /// Create `root` (or reopen it, keeping the entries already present).
    pub fn create(root: &Path, config_digest: &str) -> Result<DbWriter, DbError> {
        let entries = root.join("entries");
        std::fs::create_dir_all(&entries).map_err(io_err(&entries))?;
        let mut ids = std::collections::BTreeSet::new();
        for e in std::fs::read_dir(&entries).map_err(io_err(&entries))? {
            let name = e.map_err(io_err(&entries))?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".meta.json") {
                ids.insert(id.to_string());
            }
        }
        Ok(DbWriter { root: root.to_path_buf(), ids, digest: config_digest.to_string() })
    }

    /// Persist `entry` unless an entry with the same id exists. Returns the id
    /// and whether it was written.
    pub fn put_entry(&mut self, entry: &FunctionEntry) -> Result<(String, bool), DbError> {
        if self.ids.contains(&entry.id) {
            log::info!("entry {} already stored, skipping duplicate", entry.id);
            return Ok((entry.id.clone(), false));
        }
        let dir = self.root.join("entries");
        let src = dir.join(format!("{}.c", entry.id));
        std::fs::write(&src, &entry.unit.original_text).map_err(io_err(&src))?;
        let meta = EntryMeta {
            id: entry.id.clone(),
            origin: entry.origin.clone(),
            signature: entry.signature.clone(),
            metrics: entry.metrics,
            profiles: entry.profiles.clone(),
        };
        let path = dir.join(format!("{}.meta.json", entry.id));
        let json = serde_json::to_string_pretty(&meta).expect("entry serializes");
        std::fs::write(&path, json).map_err(io_err(&path))?;
        self.ids.insert(entry.id.clone());
        Ok((entry.id.clone(), true))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn finish(self) -> Result<DatabaseManifest, DbError> {
        let created_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let m = DatabaseManifest {
            version: FORMAT_VERSION,
            entry_count: self.ids.len(),
            created_at,
            builder_config_digest: self.digest,
        };
        let path = self.root.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&m).expect("manifest serializes")).map_err(io_err(&path))?;
        Ok(m)
    }
}

/// A loaded, read-only database. Entries are ordered by id.
#[derive(Debug, Clone)]
pub struct Database {
    pub manifest: DatabaseManifest,
    pub entries: Vec<FunctionEntry>,
    seed_eligible: Vec<usize>,
    call_insertable: Vec<usize>,
}

impl Database {
    pub fn open(root: &Path) -> Result<Database, DbError> {
        let mpath = root.join("manifest.json");
        let text = std::fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
        let manifest: DatabaseManifest = serde_json::from_str(&text).map_err(|e| schema(&mpath, e))?;
        if manifest.version != FORMAT_VERSION {
            return Err(schema(&mpath, format!("version {} (expected {FORMAT_VERSION})", manifest.version)));
        }
        let dir = root.join("entries");
        let mut ids = Vec::new();
        for e in std::fs::read_dir(&dir).map_err(io_err(&dir))? {
            let name = e.map_err(io_err(&dir))?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".meta.json") {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        let mut entries = Vec::with_capacity(ids.len());
        for id in ids {
            entries.push(load_entry(&dir, &id)?);
        }
        if entries.len() != manifest.entry_count {
            return Err(schema(&mpath, format!("entry_count {} but {} entries stored", manifest.entry_count, entries.len())));
        }
        Ok(Database::from_entries(manifest, entries))
    }

    pub fn from_entries(manifest: DatabaseManifest, mut entries: Vec<FunctionEntry>) -> Database {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let pick = |f| entries.iter().enumerate().filter(|(_, e)| e.matches(f)).map(|(i, _)| i).collect();
        let seed_eligible = pick(Filter::SeedEligible);
        let call_insertable = pick(Filter::CallInsertable);
        Database { manifest, entries, seed_eligible, call_insertable }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FunctionEntry> {
        self.entries.binary_search_by(|e| e.id.as_str().cmp(id)).ok().map(|i| &self.entries[i])
    }

    /// Indices of the entries passing `filter`, in id order.
    pub fn indices(&self, filter: Filter) -> &[usize] {
        match filter {
            Filter::SeedEligible => &self.seed_eligible,
            Filter::CallInsertable => &self.call_insertable,
        }
    }
}

fn load_entry(dir: &Path, id: &str) -> Result<FunctionEntry, DbError> {
    let mpath = dir.join(format!("{id}.meta.json"));
    let text = std::fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let meta: EntryMeta = serde_json::from_str(&text).map_err(|e| schema(&mpath, e))?;
    if meta.id != id {
        return Err(schema(&mpath, format!("id field {} does not match file name", meta.id)));
    }
    if meta.profiles.is_empty() {
        return Err(schema(&mpath, "entry without profiles"));
    }
    let spath = dir.join(format!("{id}.c"));
    let source = std::fs::read_to_string(&spath).map_err(io_err(&spath))?;
    let unit = cfront::parse_function(&source).map_err(|e| schema(&spath, e))?;
    if unit.original_text != source {
        return Err(schema(&spath, "source is not in canonical form"));
    }
    if unit.signature() != meta.signature {
        return Err(schema(&mpath, "stored signature differs from the source"));
    }
    Ok(FunctionEntry {
        id: meta.id,
        metrics: Metrics::of(&unit),
        unit,
        signature: meta.signature,
        profiles: meta.profiles,
        origin: meta.origin,
    })
}

/// A uniformly chosen entry passing `filter`.
pub fn sample_function<'a, R: Rng>(db: &'a Database, filter: Filter, rng: &mut R) -> Result<&'a FunctionEntry, DbError> {
    let idx = db.indices(filter);
    if idx.is_empty() {
        return Err(DbError::EmptySelection(filter));
    }
    Ok(&db.entries[idx[rng.random_range(0..idx.len())]])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbStats {
    pub count: usize,
    /// Lines of code bucketed by tens: key `k` counts entries with `10k <= loc < 10(k+1)`.
    pub loc_histogram: BTreeMap<usize, usize>,
    pub branch_histogram: BTreeMap<usize, usize>,
    pub mean_loc: Option<f64>,
    pub mean_branches: Option<f64>,
    pub seed_eligible: usize,
    pub call_insertable: usize,
}

pub fn db_stats(db: &Database) -> DbStats {
    let mut loc_histogram = BTreeMap::new();
    let mut branch_histogram = BTreeMap::new();
    for e in &db.entries {
        *loc_histogram.entry(e.metrics.loc / 10).or_insert(0) += 1;
        *branch_histogram.entry(e.metrics.branches).or_insert(0) += 1;
    }
    let n = db.entries.len();
    let mean = |f: fn(&Metrics) -> usize| {
        (n > 0).then(|| db.entries.iter().map(|e| f(&e.metrics) as f64).sum::<f64>() / n as f64)
    };
    DbStats {
        count: n,
        loc_histogram,
        branch_histogram,
        mean_loc: mean(|m| m.loc),
        mean_branches: mean(|m| m.branches),
        seed_eligible: db.seed_eligible.len(),
        call_insertable: db.call_insertable.len(),
    }
}
