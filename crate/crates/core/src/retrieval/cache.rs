use crate::bio_io::{write_atomic, IoError};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Hex SHA-256 over the query bytes, the sorted database names and the mode.
pub fn cache_key(query: &[u8], databases: &[&str], mode: &str) -> String {
    let mut dbs = databases.to_vec();
    dbs.sort_unstable();
    dbs.dedup();
    let mut h = Sha256::new();
    h.update((query.len() as u64).to_le_bytes());
    h.update(query);
    for db in dbs {
        h.update([0u8]);
        h.update(db.as_bytes());
    }
    h.update([1u8]);
    h.update(mode.as_bytes());
    hex::encode(h.finalize())
}

/// Raw result documents on disk, one `<key>.json` file each.
#[derive(Debug, Clone)]
pub struct ResultCache {
    dir: PathBuf,
}

impl ResultCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, body: &str) -> Result<(), IoError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| IoError::io(&self.dir, e))?;
        write_atomic(&self.path(key), body.as_bytes())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_ignores_database_order() {
        let a = cache_key(b"ATOM", &["pdb100", "afdb50"], "3diaa");
        assert_eq!(a, cache_key(b"ATOM", &["afdb50", "pdb100"], "3diaa"));
        assert_eq!(a.len(), 64);
        assert_ne!(a, cache_key(b"ATOM", &["afdb50"], "3diaa"));
        assert_ne!(a, cache_key(b"ATOM!", &["afdb50", "pdb100"], "3diaa"));
        assert_ne!(a, cache_key(b"ATOM", &["afdb50", "pdb100"], "tmalign"));
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::new(dir.path().join("nested"));
        assert!(cache.get("k").is_none());
        cache.put("k", "{}").unwrap();
        assert_eq!(cache.get("k").as_deref(), Some("{}"));
    }
}
