//! Append-only JSONL store for generation records.
//!
//! One record per line, keyed in memory by
//! (instance, kind, config fingerprint, model). Opening an existing file
//! replays it; inserts append and flush immediately, so a crashed run leaves
//! a usable cache behind. Writes are serialized; reads share the map.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use thiserror::Error;

use super::{GenerationKind, GenerationRecord};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Context(String),
}

#[derive(Debug, Clone, Hash, PartialEq, Eq)]
struct Key {
    instance_id: String,
    kind: GenerationKind,
    fingerprint: String,
    model_id: String,
}

impl Key {
    fn of(record: &GenerationRecord) -> Self {
        Self {
            instance_id: record.instance_id.clone(),
            kind: record.kind,
            fingerprint: record.config_fingerprint.clone(),
            model_id: record.model_id.clone(),
        }
    }
}

struct Inner {
    records: HashMap<Key, GenerationRecord>,
    writer: BufWriter<File>,
}

pub struct GenerationCache {
    inner: Mutex<Inner>,
}

impl GenerationCache {
    /// Opens (creating if needed) a cache file and replays its records.
    /// Later lines win on key collisions, matching append-only semantics.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let mut records = HashMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: GenerationRecord =
                    serde_json::from_str(line).map_err(|err| CacheError::Parse {
                        path: path.display().to_string(),
                        line: idx + 1,
                        message: err.to_string(),
                    })?;
                records.insert(Key::of(&record), record);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Mutex::new(Inner {
                records,
                writer: BufWriter::new(file),
            }),
        })
    }

    pub fn get(
        &self,
        instance_id: &str,
        kind: GenerationKind,
        fingerprint: &str,
        model_id: &str,
    ) -> Option<GenerationRecord> {
        let inner = self.inner.lock().unwrap();
        inner
            .records
            .get(&Key {
                instance_id: instance_id.to_string(),
                kind,
                fingerprint: fingerprint.to_string(),
                model_id: model_id.to_string(),
            })
            .cloned()
    }

    /// Appends a record to the file and the in-memory index.
    pub fn insert(&self, record: GenerationRecord) -> Result<(), CacheError> {
        let mut inner = self.inner.lock().unwrap();
        let line = serde_json::to_string(&record).expect("record serializes");
        inner.writer.write_all(line.as_bytes())?;
        inner.writer.write_all(b"\n")?;
        inner.writer.flush()?;
        inner.records.insert(Key::of(&record), record);
        Ok(())
    }

    /// All records matching a fingerprint and model, in arbitrary order.
    pub fn records_for(&self, fingerprint: &str, model_id: &str) -> Vec<GenerationRecord> {
        let inner = self.inner.lock().unwrap();
        inner
            .records
            .values()
            .filter(|r| r.config_fingerprint == fingerprint && r.model_id == model_id)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
