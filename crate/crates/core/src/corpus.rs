//! Ingest C snippets from a directory tree, one snippet per file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_CAP: u64 = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSnippet {
    /// Hex SHA-256 of the text.
    pub id: String,
    pub origin: PathBuf,
    pub text: String,
    pub byte_len: u64,
}

impl CandidateSnippet {
    pub fn from_text(origin: impl Into<PathBuf>, text: String) -> CandidateSnippet {
        CandidateSnippet { id: content_id(&text), origin: origin.into(), byte_len: text.len() as u64, text }
    }
}

pub fn content_id(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read {path}: {source}")]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Every `.c`/`.h` file under `root` no larger than `cap` bytes, sorted by path.
pub fn scan_corpus(root: &Path, cap: u64) -> Result<Vec<CandidateSnippet>, IoError> {
    let mut files = Vec::new();
    collect(root, &mut files)?;
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let err = |source| IoError { path: path.clone(), source };
        let len = std::fs::metadata(&path).map_err(err)?.len();
        if len > cap {
            log::info!("skipping {} ({len} bytes exceeds cap of {cap})", path.display());
            continue;
        }
        let bytes = std::fs::read(&path).map_err(err)?;
        let text = String::from_utf8_lossy(&bytes).into_owned();
        out.push(CandidateSnippet::from_text(path, text));
    }
    Ok(out)
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), IoError> {
    let err = |source| IoError { path: dir.to_path_buf(), source };
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else if matches!(path.extension().and_then(|e| e.to_str()), Some("c" | "h")) {
            out.push(path);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_capped_and_hashed() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        std::fs::create_dir(root.join("sub")).unwrap();
        std::fs::write(root.join("b.c"), "int b;").unwrap();
        std::fs::write(root.join("a.h"), "int a;").unwrap();
        std::fs::write(root.join("sub/c.c"), "int b;").unwrap();
        std::fs::write(root.join("notes.txt"), "x").unwrap();
        std::fs::write(root.join("big.c"), vec![b' '; 2 * 1024 * 1024]).unwrap();
        let got = scan_corpus(root, 256 * 1024).unwrap();
        let names: Vec<_> = got.iter().map(|s| s.origin.strip_prefix(root).unwrap().to_owned()).collect();
        assert_eq!(names, [PathBuf::from("a.h"), "b.c".into(), "sub/c.c".into()]);
        assert_eq!(got[1].id, got[2].id);
        assert_ne!(got[0].id, got[1].id);
        assert_eq!(got[1].id, content_id("int b;"));
        assert_eq!(scan_corpus(root, 256 * 1024).unwrap(), got);
    }

    #[test]
    fn missing_root_is_io_error() {
        assert!(scan_corpus(Path::new("/nonexistent/corpus"), DEFAULT_CAP).is_err());
    }
}
