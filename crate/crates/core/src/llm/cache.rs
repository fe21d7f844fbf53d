use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CompletionResponse, LlmError};

/// Content-addressed response store: one JSON file per cache key, sharded by
/// the first two hex digits. Writes go to a temp file in the same directory
/// and are renamed into place, so concurrent writers never expose a torn file.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    text: String,
    prompt_tokens: u64,
    completion_tokens: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: u64,
    pub bytes: u64,
}

impl ResponseCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|source| LlmError::Cache {
            path: root.clone(),
            source,
        })?;
        Ok(ResponseCache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, key: &str) -> PathBuf {
        let shard = key.get(..2).unwrap_or("__");
        self.root.join(shard).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CompletionResponse>, LlmError> {
        let path = self.path_for(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(LlmError::Cache { path, source }),
        };
        // a corrupt entry is treated as a miss and overwritten later
        let Ok(entry) = serde_json::from_slice::<Entry>(&bytes) else {
            log::warn!("ignoring unreadable cache entry {}", path.display());
            return Ok(None);
        };
        if entry.key != key {
            return Ok(None);
        }
        Ok(Some(CompletionResponse {
            text: entry.text,
            prompt_tokens: entry.prompt_tokens,
            completion_tokens: entry.completion_tokens,
            cached: true,
        }))
    }

    pub fn put(&self, key: &str, response: &CompletionResponse) -> Result<(), LlmError> {
        let path = self.path_for(key);
        let dir = path.parent().expect("sharded path has a parent");
        let io_err = |source| LlmError::Cache {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let entry = Entry {
            key: key.to_owned(),
            text: response.text.clone(),
            prompt_tokens: response.prompt_tokens,
            completion_tokens: response.completion_tokens,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
        serde_json::to_writer(&mut tmp, &entry).map_err(|e| io_err(e.into()))?;
        tmp.flush().map_err(io_err)?;
        tmp.persist(&path).map_err(|e| io_err(e.error))?;
        Ok(())
    }

    pub fn stats(&self) -> Result<CacheStats, LlmError> {
        let mut stats = CacheStats::default();
        for entry in self.entry_files()? {
            stats.entries += 1;
            stats.bytes += std::fs::metadata(&entry).map(|m| m.len()).unwrap_or(0);
        }
        Ok(stats)
    }

    /// Removes every cache entry, returning how many were deleted.
    pub fn clear(&self) -> Result<u64, LlmError> {
        let mut removed = 0;
        for entry in self.entry_files()? {
            std::fs::remove_file(&entry).map_err(|source| LlmError::Cache {
                path: entry.clone(),
                source,
            })?;
            removed += 1;
        }
        Ok(removed)
    }

    fn entry_files(&self) -> Result<Vec<PathBuf>, LlmError> {
        let io_err = |path: &Path, source| LlmError::Cache {
            path: path.to_owned(),
            source,
        };
        let mut out = Vec::new();
        for shard in std::fs::read_dir(&self.root).map_err(|e| io_err(&self.root, e))? {
            let shard = shard.map_err(|e| io_err(&self.root, e))?.path();
            if !shard.is_dir() {
                continue;
            }
            for file in std::fs::read_dir(&shard).map_err(|e| io_err(&shard, e))? {
                let file = file.map_err(|e| io_err(&shard, e))?.path();
                if file.extension().is_some_and(|e| e == "json") {
                    out.push(file);
                }
            }
        }
        out.sort();
        Ok(out)
    }
}
