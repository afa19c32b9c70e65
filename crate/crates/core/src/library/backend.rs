use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use super::{LibraryError, Result, Segment, StoredRecord};

/// Raw storage: no schema checks, no search.
pub trait Backend: Send + Sync {
    /// Store `value`, keeping `created_at` of any previous record.
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<StoredRecord>;
    fn get(&self, segment: Segment, key: &str) -> Result<Option<StoredRecord>>;
    /// Keys of a segment in ascending order.
    fn keys(&self, segment: Segment) -> Result<Vec<String>>;
}

type Map = BTreeMap<(Segment, String), StoredRecord>;

/// Map-backed storage; clones share the same map.
#[derive(Debug, Clone, Default)]
pub struct MemoryBackend {
    map: Arc<RwLock<Map>>,
    writer: Arc<Mutex<()>>,
}

impl MemoryBackend {
    /// Deep copy of the current contents.
    pub fn snapshot(&self) -> MemoryBackend {
        let map = self.map.read().expect("library map poisoned").clone();
        MemoryBackend {
            map: Arc::new(RwLock::new(map)),
            writer: Arc::default(),
        }
    }

    /// Replace the contents with those of `other`.
    pub fn restore(&self, other: &MemoryBackend) {
        let src = other.map.read().expect("library map poisoned").clone();
        *self.map.write().expect("library map poisoned") = src;
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("library map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&self, rec: StoredRecord) {
        self.map
            .write()
            .expect("library map poisoned")
            .insert((rec.segment, rec.key.clone()), rec);
    }
}

impl Backend for MemoryBackend {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<StoredRecord> {
        let _w = self.writer.lock().expect("library writer poisoned");
        let rec = StoredRecord::new(segment, key, value, self.get(segment, key)?.as_ref());
        self.insert(rec.clone());
        Ok(rec)
    }

    fn get(&self, segment: Segment, key: &str) -> Result<Option<StoredRecord>> {
        Ok(self
            .map
            .read()
            .expect("library map poisoned")
            .get(&(segment, key.to_string()))
            .cloned())
    }

    fn keys(&self, segment: Segment) -> Result<Vec<String>> {
        Ok(self
            .map
            .read()
            .expect("library map poisoned")
            .keys()
            .filter(|(s, _)| *s == segment)
            .map(|(_, k)| k.clone())
            .collect())
    }
}

/// Append-only log file replayed into a [`MemoryBackend`] on open.
///
/// Each line of `library.log` is one JSON-encoded [`StoredRecord`]; the last
/// record for a key wins. A torn final line left by a crash is discarded and
/// truncated away on open.
#[derive(Debug, Clone)]
pub struct LogBackend {
    mem: MemoryBackend,
    file: Arc<Mutex<File>>,
    path: PathBuf,
    fsync: bool,
}

pub const LOG_FILE: &str = "library.log";

impl LogBackend {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(LibraryError::storage)?;
        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(LibraryError::storage)?;
        let mem = MemoryBackend::default();
        let mut good_len = 0u64;
        {
            let mut reader = BufReader::new(&mut file);
            let mut line = String::new();
            loop {
                line.clear();
                let n = reader.read_line(&mut line).map_err(LibraryError::storage)?;
                if n == 0 {
                    break;
                }
                if !line.ends_with('\n') {
                    break;
                }
                match serde_json::from_str::<StoredRecord>(line.trim_end()) {
                    Ok(rec) if rec.digest_matches() => mem.insert(rec),
                    _ => break,
                }
                good_len += n as u64;
            }
        }
        let total = file.seek(SeekFrom::End(0)).map_err(LibraryError::storage)?;
        if total != good_len {
            tracing::warn!(
                path = %path.display(),
                dropped = total - good_len,
                "discarding torn tail of library log"
            );
            file.set_len(good_len).map_err(LibraryError::storage)?;
        }
        Ok(LogBackend {
            mem,
            file: Arc::new(Mutex::new(file)),
            path,
            fsync: false,
        })
    }

    /// Call `fsync` after every append.
    pub fn with_fsync(mut self, on: bool) -> Self {
        self.fsync = on;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Backend for LogBackend {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<StoredRecord> {
        let mut file = self.file.lock().expect("library log poisoned");
        let rec = StoredRecord::new(segment, key, value, self.mem.get(segment, key)?.as_ref());
        let mut line = serde_json::to_vec(&rec).map_err(LibraryError::storage)?;
        line.push(b'\n');
        file.write_all(&line).map_err(LibraryError::storage)?;
        file.flush().map_err(LibraryError::storage)?;
        if self.fsync {
            file.sync_data().map_err(LibraryError::storage)?;
        }
        self.mem.insert(rec.clone());
        Ok(rec)
    }

    fn get(&self, segment: Segment, key: &str) -> Result<Option<StoredRecord>> {
        self.mem.get(segment, key)
    }

    fn keys(&self, segment: Segment) -> Result<Vec<String>> {
        self.mem.keys(segment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let digest = {
            let b = LogBackend::open(dir.path()).unwrap();
            b.put(Segment::Projects, "p1", b"one").unwrap();
            b.put(Segment::Projects, "p1", b"two").unwrap();
            b.put(Segment::Corpora, "c1", b"c").unwrap().content_digest
        };
        let b = LogBackend::open(dir.path()).unwrap();
        assert_eq!(b.get(Segment::Projects, "p1").unwrap().unwrap().value, b"two");
        assert_eq!(
            b.get(Segment::Corpora, "c1").unwrap().unwrap().content_digest,
            digest
        );
    }

    #[test]
    fn torn_tail_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        {
            let b = LogBackend::open(dir.path()).unwrap();
            b.put(Segment::Projects, "p1", b"one").unwrap();
        }
        let path = dir.path().join(LOG_FILE);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"segment":"projects","key":"p2","val"#).unwrap();
        drop(f);
        let b = LogBackend::open(dir.path()).unwrap();
        assert!(b.get(Segment::Projects, "p2").unwrap().is_none());
        b.put(Segment::Projects, "p3", b"three").unwrap();
        let b = LogBackend::open(dir.path()).unwrap();
        assert_eq!(b.keys(Segment::Projects).unwrap(), vec!["p1", "p3"]);
    }

    #[test]
    fn snapshot_is_independent() {
        let m = MemoryBackend::default();
        m.put(Segment::Projects, "a", b"1").unwrap();
        let snap = m.snapshot();
        m.put(Segment::Projects, "b", b"2").unwrap();
        assert_eq!(snap.len(), 1);
        m.restore(&snap);
        assert_eq!(m.keys(Segment::Projects).unwrap(), vec!["a"]);
    }
}
