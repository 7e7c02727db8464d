//! On-disk translation cache, one JSON file per content hash.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub translated_text: String,
    pub backend_meta: String,
}

/// Directory-backed cache keyed by a job's content hash. Writes go through a
/// temp file and rename, so concurrent readers never see a torn entry.
#[derive(Debug, Clone)]
pub struct TranslationCache {
    dir: PathBuf,
}

impl TranslationCache {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(TranslationCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, content_hash: &str) -> PathBuf {
        self.dir.join(format!("{content_hash}.json"))
    }

    pub fn get(&self, content_hash: &str) -> io::Result<Option<CacheEntry>> {
        let path = self.entry_path(content_hash);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let entry = serde_json::from_str(&raw).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("corrupt cache entry {}: {e}", path.display()),
            )
        })?;
        Ok(Some(entry))
    }

    pub fn put(&self, content_hash: &str, entry: &CacheEntry) -> io::Result<()> {
        let path = self.entry_path(content_hash);
        let tmp = self.dir.join(format!(".{content_hash}.tmp"));
        let body = serde_json::to_string_pretty(entry).expect("entry serializes");
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miss_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TranslationCache::new(dir.path().join("cache")).unwrap();
        assert_eq!(cache.get("abc").unwrap(), None);
        let entry = CacheEntry {
            translated_text: "hallo".into(),
            backend_meta: "m".into(),
        };
        cache.put("abc", &entry).unwrap();
        assert_eq!(cache.get("abc").unwrap(), Some(entry));
    }

    #[test]
    fn corrupt_entry_is_an_error_not_a_panic() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TranslationCache::new(dir.path()).unwrap();
        std::fs::write(dir.path().join("bad.json"), "{oops").unwrap();
        assert!(cache.get("bad").is_err());
    }
}
