//! Segmented key-value library store: the data tier.
//!
//! Values are opaque bytes, checked against a per-segment schema on the
//! way in. Two storage backends sit behind [`Backend`]: an embedded
//! append-log ([`LogBackend`], or [`MemoryBackend`] without a file) and a
//! Redis-protocol client ([`RedisBackend`]). [`Library`] adds validation and
//! search on top of a backend; [`RemoteStore`] speaks the framed wire
//! protocol to a [`serve`]d library. Both implement [`Store`], which is all
//! the logic tier sees.

mod backend;
mod client;
mod redis;
mod schema;
mod search;
mod server;
pub mod wire;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{Backend, LogBackend, MemoryBackend};
pub use client::RemoteStore;
pub use redis::RedisBackend;
pub use schema::{FieldType, Schema};
pub use search::{parse_criteria, Criterion, Op};
pub use server::{serve, ServerHandle};

use crate::digest::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LibraryError {
    #[error("UNKNOWN_SEGMENT: {0}")]
    UnknownSegment(String),
    #[error("SCHEMA_VIOLATION: {segment}: {reason}")]
    SchemaViolation { segment: Segment, reason: String },
    #[error("NOT_FOUND: {segment}/{key}")]
    NotFound { segment: Segment, key: String },
    #[error("INVALID_QUERY: {0}")]
    InvalidQuery(String),
    #[error("INVALID_KEY: {0:?}")]
    InvalidKey(String),
    #[error("BIND_FAILURE: {0}")]
    BindFailure(String),
    #[error("STORAGE_UNAVAILABLE: {0}")]
    StorageUnavailable(String),
    #[error("PROTOCOL_ERROR: {0}")]
    Protocol(String),
}

impl LibraryError {
    pub fn code(&self) -> &'static str {
        match self {
            LibraryError::UnknownSegment(_) => "UNKNOWN_SEGMENT",
            LibraryError::SchemaViolation { .. } => "SCHEMA_VIOLATION",
            LibraryError::NotFound { .. } => "NOT_FOUND",
            LibraryError::InvalidQuery(_) => "INVALID_QUERY",
            LibraryError::InvalidKey(_) => "INVALID_KEY",
            LibraryError::BindFailure(_) => "BIND_FAILURE",
            LibraryError::StorageUnavailable(_) => "STORAGE_UNAVAILABLE",
            LibraryError::Protocol(_) => "PROTOCOL_ERROR",
        }
    }

    pub(crate) fn storage(e: impl fmt::Display) -> Self {
        LibraryError::StorageUnavailable(e.to_string())
    }
}

pub type Result<T, E = LibraryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Ontologies,
    Documents,
    Corpora,
    Termsets,
    Conceptsets,
    Relationsets,
    Projects,
    Dictionaries,
    Indexes,
}

impl Segment {
    pub const ALL: [Segment; 9] = [
        Segment::Ontologies,
        Segment::Documents,
        Segment::Corpora,
        Segment::Termsets,
        Segment::Conceptsets,
        Segment::Relationsets,
        Segment::Projects,
        Segment::Dictionaries,
        Segment::Indexes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Segment::Ontologies => "ontologies",
            Segment::Documents => "documents",
            Segment::Corpora => "corpora",
            Segment::Termsets => "termsets",
            Segment::Conceptsets => "conceptsets",
            Segment::Relationsets => "relationsets",
            Segment::Projects => "projects",
            Segment::Dictionaries => "dictionaries",
            Segment::Indexes => "indexes",
        }
    }

    pub fn schema(self) -> Schema {
        Schema::for_segment(self)
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Segment {
    type Err = LibraryError;

    fn from_str(s: &str) -> Result<Self> {
        Segment::ALL
            .into_iter()
            .find(|seg| seg.as_str() == s)
            .ok_or_else(|| LibraryError::UnknownSegment(s.to_string()))
    }
}

/// Keys are non-empty, at most 256 bytes, and drawn from `[A-Za-z0-9._:@-]`
/// so they fit in a space-separated wire frame and a Redis key prefix.
pub fn validate_key(key: &str) -> Result<()> {
    let ok = !key.is_empty()
        && key.len() <= 256
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b':' | b'@' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(LibraryError::InvalidKey(key.to_string()))
    }
}

mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub segment: Segment,
    pub key: String,
    #[serde(with = "b64")]
    pub value: Vec<u8>,
    pub content_digest: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl StoredRecord {
    pub fn new(segment: Segment, key: &str, value: &[u8], previous: Option<&StoredRecord>) -> Self {
        let now = Utc::now();
        StoredRecord {
            segment,
            key: key.to_string(),
            value: value.to_vec(),
            content_digest: sha256_hex(value),
            created_at: previous.map_or(now, |p| p.created_at),
            updated_at: now,
        }
    }

    pub fn metadata(&self) -> RecordMeta {
        RecordMeta {
            segment: self.segment,
            key: self.key.clone(),
            content_digest: self.content_digest.clone(),
            created_at: self.created_at,
            updated_at: self.updated_at,
            size: self.value.len(),
        }
    }

    pub fn digest_matches(&self) -> bool {
        sha256_hex(&self.value) == self.content_digest
    }
}

/// A stored record without its value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub segment: Segment,
    pub key: String,
    pub content_digest: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub size: usize,
}

/// What the logic tier needs from the data tier.
pub trait Store: Send + Sync {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<RecordMeta>;
    fn get(&self, segment: Segment, key: &str) -> Result<Vec<u8>>;
    fn search(&self, segment: Segment, criteria: &[Criterion]) -> Result<Vec<String>>;
    fn keys(&self, segment: Segment) -> Result<Vec<String>>;

    fn contains(&self, segment: Segment, key: &str) -> Result<bool> {
        match self.get(segment, key) {
            Ok(_) => Ok(true),
            Err(LibraryError::NotFound { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

impl<S: Store + ?Sized> Store for std::sync::Arc<S> {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<RecordMeta> {
        (**self).put(segment, key, value)
    }
    fn get(&self, segment: Segment, key: &str) -> Result<Vec<u8>> {
        (**self).get(segment, key)
    }
    fn search(&self, segment: Segment, criteria: &[Criterion]) -> Result<Vec<String>> {
        (**self).search(segment, criteria)
    }
    fn keys(&self, segment: Segment) -> Result<Vec<String>> {
        (**self).keys(segment)
    }
}

/// JSON helpers over any [`Store`].
pub trait StoreExt: Store {
    fn put_json<T: Serialize + ?Sized>(&self, segment: Segment, key: &str, value: &T) -> Result<RecordMeta> {
        let bytes = serde_json::to_vec(value).map_err(|e| LibraryError::SchemaViolation {
            segment,
            reason: e.to_string(),
        })?;
        self.put(segment, key, &bytes)
    }

    fn get_json<T: DeserializeOwned>(&self, segment: Segment, key: &str) -> Result<T> {
        let bytes = self.get(segment, key)?;
        serde_json::from_slice(&bytes).map_err(|e| LibraryError::SchemaViolation {
            segment,
            reason: format!("{key}: {e}"),
        })
    }
}

impl<S: Store + ?Sized> StoreExt for S {}

/// Schema-validating, searchable library over a storage backend.
#[derive(Debug, Clone)]
pub struct Library<B> {
    backend: B,
}

impl Library<MemoryBackend> {
    pub fn in_memory() -> Self {
        Library::new(MemoryBackend::default())
    }
}

impl<B: Backend> Library<B> {
    pub fn new(backend: B) -> Self {
        Library { backend }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Validated write.
    pub fn put_record(&self, segment: Segment, key: &str, value: &[u8]) -> Result<StoredRecord> {
        validate_key(key)?;
        segment.schema().validate(segment, value)?;
        self.backend.put(segment, key, value)
    }

    pub fn get_record(&self, segment: Segment, key: &str) -> Result<StoredRecord> {
        self.backend
            .get(segment, key)?
            .ok_or_else(|| LibraryError::NotFound {
                segment,
                key: key.to_string(),
            })
    }
}

impl<B: Backend> Store for Library<B> {
    fn put(&self, segment: Segment, key: &str, value: &[u8]) -> Result<RecordMeta> {
        self.put_record(segment, key, value).map(|r| r.metadata())
    }

    fn get(&self, segment: Segment, key: &str) -> Result<Vec<u8>> {
        self.get_record(segment, key).map(|r| r.value)
    }

    fn search(&self, segment: Segment, criteria: &[Criterion]) -> Result<Vec<String>> {
        let schema = segment.schema();
        search::check_criteria(&schema, criteria)?;
        let mut out = Vec::new();
        for key in self.backend.keys(segment)? {
            if let Some(rec) = self.backend.get(segment, &key)? {
                if search::matches(&schema, &rec, criteria) {
                    out.push(key);
                }
            }
        }
        Ok(out)
    }

    fn keys(&self, segment: Segment) -> Result<Vec<String>> {
        self.backend.keys(segment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_json(id: &str, title: &str) -> Vec<u8> {
        serde_json::to_vec(&serde_json::json!({
            "id": id, "title": title, "language": "ru", "text": "Текст.",
            "source": "fixture", "ingested_at": "2024-01-01T00:00:00Z", "metadata": {}
        }))
        .unwrap()
    }

    #[test]
    fn put_then_get_round_trips() {
        let lib = Library::in_memory();
        let v = doc_json("d1", "Онтологии");
        lib.put(Segment::Documents, "d1", &v).unwrap();
        assert_eq!(lib.get(Segment::Documents, "d1").unwrap(), v);
        assert!(lib.get_record(Segment::Documents, "d1").unwrap().digest_matches());
    }

    #[test]
    fn schema_violation() {
        let lib = Library::in_memory();
        let err = lib.put(Segment::Ontologies, "o1", b"not json").unwrap_err();
        assert_eq!(err.code(), "SCHEMA_VIOLATION");
        let err = lib
            .put(Segment::Ontologies, "o1", br#"{"nodes": 3}"#)
            .unwrap_err();
        assert_eq!(err.code(), "SCHEMA_VIOLATION");
    }

    #[test]
    fn unknown_segment() {
        assert_eq!(
            "foo".parse::<Segment>().unwrap_err(),
            LibraryError::UnknownSegment("foo".into())
        );
    }

    #[test]
    fn missing_key() {
        let lib = Library::in_memory();
        assert_eq!(
            lib.get(Segment::Projects, "missing").unwrap_err().code(),
            "NOT_FOUND"
        );
    }

    #[test]
    fn last_writer_wins_and_updated_at_moves() {
        let lib = Library::in_memory();
        lib.put(Segment::Documents, "d1", &doc_json("d1", "a")).unwrap();
        let first = lib.get_record(Segment::Documents, "d1").unwrap();
        std::thread::sleep(std::time::Duration::from_millis(2));
        let v2 = doc_json("d1", "b");
        lib.put(Segment::Documents, "d1", &v2).unwrap();
        let second = lib.get_record(Segment::Documents, "d1").unwrap();
        assert_eq!(second.value, v2);
        assert_eq!(second.created_at, first.created_at);
        assert!(second.updated_at > first.updated_at);
    }

    #[test]
    fn bad_keys_are_rejected() {
        let lib = Library::in_memory();
        for key in ["", "a b", "ключ", &"x".repeat(257)] {
            assert_eq!(
                lib.put(Segment::Documents, key, &doc_json("d", "t")).unwrap_err().code(),
                "INVALID_KEY"
            );
        }
    }
}
