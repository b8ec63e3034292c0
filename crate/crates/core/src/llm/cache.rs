use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::util::sha256_hex;

/// One cached completion, stored together with the prompt that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    pub reply: String,
    pub created_unix: u64,
}

/// Content-addressed store: `<dir>/<key>.json`, plus an in-memory layer.
///
/// Entries never expire; [`ResponseCache::purge`] removes them.
pub struct ResponseCache {
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, String>>,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn open(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        Ok(ResponseCache {
            dir,
            memory: RwLock::new(HashMap::new()),
            write_lock: Mutex::new(()),
        })
    }

    pub fn key(model: &str, prompt: &str, temperature: f64) -> String {
        let canonical = json!({ "model": model, "prompt": prompt, "temperature": temperature });
        sha256_hex(canonical.to_string().as_bytes())
    }

    fn path_for(dir: &Path, key: &str) -> PathBuf {
        dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<String>> {
        if let Some(hit) = self.memory.read().get(key) {
            return Ok(Some(hit.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = Self::path_for(dir, key);
        match fs::read_to_string(&path) {
            Ok(text) => {
                let entry: CacheEntry = serde_json::from_str(&text)?;
                self.memory.write().insert(key.to_string(), entry.reply.clone());
                Ok(Some(entry.reply))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// Persists an entry before it becomes visible to readers.
    pub fn put(&self, entry: CacheEntry) -> Result<()> {
        let _guard = self.write_lock.lock();
        if let Some(dir) = &self.dir {
            let path = Self::path_for(dir, &entry.key);
            let tmp = dir.join(format!(".{}.tmp", entry.key));
            let text = serde_json::to_string_pretty(&entry)?;
            fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
            fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        }
        self.memory.write().insert(entry.key, entry.reply);
        Ok(())
    }

    /// Deletes every entry; returns how many files were removed.
    pub fn purge(&self) -> Result<usize> {
        let _guard = self.write_lock.lock();
        self.memory.write().clear();
        let Some(dir) = &self.dir else {
            return Ok(0);
        };
        let mut removed = 0;
        for item in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = item.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(key: &str, reply: &str) -> CacheEntry {
        CacheEntry {
            key: key.into(),
            model: "m".into(),
            temperature: 0.0,
            prompt: "p".into(),
            reply: reply.into(),
            created_unix: 0,
        }
    }

    #[test]
    fn key_depends_on_every_field() {
        let k = ResponseCache::key("m", "p", 0.0);
        assert_eq!(k.len(), 64);
        assert_ne!(k, ResponseCache::key("m2", "p", 0.0));
        assert_ne!(k, ResponseCache::key("m", "p2", 0.0));
        assert_ne!(k, ResponseCache::key("m", "p", 0.5));
        assert_eq!(k, ResponseCache::key("m", "p", 0.0));
    }

    #[test]
    fn put_get_purge() {
        let dir = tempfile::tempdir().unwrap();
        let c = ResponseCache::open(Some(dir.path().to_path_buf())).unwrap();
        c.put(entry("abc", "reply \u{1F600}\n")).unwrap();
        assert!(dir.path().join("abc.json").exists());

        let fresh = ResponseCache::open(Some(dir.path().to_path_buf())).unwrap();
        assert_eq!(fresh.get("abc").unwrap().as_deref(), Some("reply \u{1F600}\n"));
        assert_eq!(fresh.purge().unwrap(), 1);
        assert_eq!(fresh.get("abc").unwrap(), None);
    }
}
