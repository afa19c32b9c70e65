//! Document acquisition and corpus formation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::digest::{sha256_hex, sha256_parts};
use crate::library::{LibraryError, Segment, Store, StoreExt};
use crate::linganalysis::{tokenize, Analyzer, TokenKind};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("EMPTY_DOCUMENT: {0}")]
    EmptyDocument(String),
    #[error("ENCODING_ERROR: {0}")]
    Encoding(String),
    #[error("UNKNOWN_DOCUMENT: {0}")]
    UnknownDocument(String),
    #[error("UNKNOWN_CORPUS: {0}")]
    UnknownCorpus(String),
    #[error("EMPTY_SELECTION: a corpus needs at least one document")]
    EmptySelection,
    #[error("SOURCE_UNAVAILABLE: {0}")]
    SourceUnavailable(String),
    #[error("UNSUPPORTED_SOURCE: {0}")]
    UnsupportedSource(String),
    #[error("UNSUPPORTED_LANGUAGE: {0}")]
    UnsupportedLanguage(String),
    #[error(transparent)]
    Library(#[from] LibraryError),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::EmptyDocument(_) => "EMPTY_DOCUMENT",
            CorpusError::Encoding(_) => "ENCODING_ERROR",
            CorpusError::UnknownDocument(_) => "UNKNOWN_DOCUMENT",
            CorpusError::UnknownCorpus(_) => "UNKNOWN_CORPUS",
            CorpusError::EmptySelection => "EMPTY_SELECTION",
            CorpusError::SourceUnavailable(_) => "SOURCE_UNAVAILABLE",
            CorpusError::UnsupportedSource(_) => "UNSUPPORTED_SOURCE",
            CorpusError::UnsupportedLanguage(_) => "UNSUPPORTED_LANGUAGE",
            CorpusError::Library(e) => e.code(),
        }
    }
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Uk,
    Ru,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Uk => "uk",
            Language::Ru => "ru",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uk" => Ok(Language::Uk),
            "ru" => Ok(Language::Ru),
            other => Err(CorpusError::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// Canonical text form: NFC with `\r\n` and lone `\r` turned into `\n`.
pub fn normalize(text: &str) -> String {
    let unified = if text.contains('\r') {
        text.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        text.to_string()
    };
    if is_nfc(&unified) {
        unified
    } else {
        unified.nfc().collect()
    }
}

/// Content address of a normalized text.
pub fn document_id(normalized: &str) -> String {
    sha256_hex(normalized.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// File path or URL the text came from.
    pub source: String,
    pub title: String,
    pub language: Language,
    pub text: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub ingested_at: DateTime<Utc>,
}

impl Document {
    /// A document with a caller-chosen id, bypassing content addressing.
    /// Handy for small hand-written corpora.
    pub fn with_id(id: &str, text: &str, language: Language) -> Document {
        Document {
            id: id.to_string(),
            source: "inline".into(),
            title: id.to_string(),
            language,
            text: normalize(text),
            metadata: BTreeMap::new(),
            ingested_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: String,
    pub name: String,
    pub doc_ids: Vec<String>,
}

impl Corpus {
    /// The id is derived from the name and member list, so forming the same
    /// corpus twice yields the same record.
    pub fn new(name: &str, doc_ids: Vec<String>) -> Corpus {
        let id = sha256_parts(
            std::iter::once("corpus/1")
                .chain(std::iter::once(name))
                .chain(doc_ids.iter().map(String::as_str)),
        );
        Corpus {
            id,
            name: name.to_string(),
            doc_ids,
        }
    }
}

/// Declared byte encoding of a source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextEncoding {
    #[default]
    Utf8,
    Windows1251,
}

/// Decode raw bytes; a leading UTF-8 byte-order mark is dropped.
pub fn decode(bytes: &[u8], encoding: TextEncoding) -> Result<String> {
    match encoding {
        TextEncoding::Utf8 => {
            let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
            std::str::from_utf8(bytes)
                .map(str::to_string)
                .map_err(|e| CorpusError::Encoding(format!("invalid UTF-8 at byte {}", e.valid_up_to())))
        }
        TextEncoding::Windows1251 => {
            let (text, _, had_errors) = encoding_rs::WINDOWS_1251.decode(bytes);
            if had_errors {
                Err(CorpusError::Encoding("invalid windows-1251 input".into()))
            } else {
                Ok(text.into_owned())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub language: Language,
    pub ru_hits: usize,
    pub uk_hits: usize,
    /// Set when neither language dominated and Russian was assumed.
    pub warning: Option<String>,
}

/// Ratio by which one language's stopword count must exceed the other's.
pub const DETECTION_RATIO: f64 = 1.5;

/// Guess the language from stopword frequencies.
pub fn detect_language(text: &str, analyzer: &Analyzer) -> Detection {
    let (mut ru, mut uk) = (0usize, 0usize);
    for t in tokenize(text).iter().filter(|t| t.kind == TokenKind::Word) {
        ru += usize::from(analyzer.stop_ru().contains(&t.surface));
        uk += usize::from(analyzer.stop_uk().contains(&t.surface));
    }
    let (language, warning) = if uk > 0 && uk as f64 >= DETECTION_RATIO * ru as f64 {
        (Language::Uk, None)
    } else if ru > 0 && ru as f64 >= DETECTION_RATIO * uk as f64 {
        (Language::Ru, None)
    } else {
        (
            Language::Ru,
            Some(format!(
                "language undecided (ru {ru}, uk {uk} stopwords); assuming ru"
            )),
        )
    };
    Detection {
        language,
        ru_hits: ru,
        uk_hits: uk,
        warning,
    }
}

/// Where a candidate document lives, as returned by [`search_external`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub uri: String,
    pub title: String,
    pub size: u64,
    #[serde(default)]
    pub encoding: TextEncoding,
}

impl SourceDescriptor {
    pub fn inline(title: &str) -> Self {
        SourceDescriptor {
            uri: "inline".into(),
            title: title.to_string(),
            size: 0,
            encoding: TextEncoding::Utf8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Adapter {
    /// `.txt` files under a local directory, recursively.
    Directory {
        root: PathBuf,
        #[serde(default)]
        encoding: TextEncoding,
    },
    /// Plain-text documents fetched over HTTP.
    UrlList {
        urls: Vec<String>,
        #[serde(default)]
        encoding: TextEncoding,
    },
}

const ADAPTER_KINDS: [&str; 2] = ["directory", "url_list"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub adapters: Vec<Adapter>,
}

impl SourceConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CorpusError::UnsupportedSource(e.to_string()))?;
        let adapters = raw
            .get("adapters")
            .and_then(|a| a.as_array())
            .ok_or_else(|| CorpusError::UnsupportedSource("missing adapters list".into()))?;
        for a in adapters {
            let kind = a.get("kind").and_then(|k| k.as_str()).unwrap_or("");
            if !ADAPTER_KINDS.contains(&kind) {
                return Err(CorpusError::UnsupportedSource(format!(
                    "unknown adapter kind {kind:?}"
                )));
            }
        }
        serde_json::from_value(raw).map_err(|e| CorpusError::UnsupportedSource(e.to_string()))
    }
}

const HTTP_TIMEOUT: Duration = Duration::from_secs(10);

fn http_get(url: &str) -> Result<Vec<u8>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(HTTP_TIMEOUT))
        .build()
        .into();
    let unavailable = |e: ureq::Error| CorpusError::SourceUnavailable(format!("{url}: {e}"));
    let mut resp = agent.get(url).call().map_err(unavailable)?;
    resp.body_mut()
        .with_config()
        .limit(64 << 20)
        .read_to_vec()
        .map_err(unavailable)
}

fn query_matches(text: &str, query: &str) -> bool {
    let q = query.trim();
    q == "*" || normalize(text).to_lowercase().contains(&normalize(q).to_lowercase())
}

fn directory_files(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(CorpusError::SourceUnavailable(format!(
            "{} is not a readable directory",
            root.display()
        )));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::SourceUnavailable(e.to_string()))?;
        let is_txt = entry.path().extension().is_some_and(|x| x.eq_ignore_ascii_case("txt"));
        if entry.file_type().is_file() && is_txt {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

/// List documents of the configured sources matching `query`.
///
/// `"*"` matches everything; any other query is a case-insensitive substring
/// test against the decoded text. Nothing is stored.
pub fn search_external(config: &SourceConfig, query: &str) -> Result<Vec<SourceDescriptor>> {
    let mut out = Vec::new();
    for adapter in &config.adapters {
        match adapter {
            Adapter::Directory { root, encoding } => {
                for path in directory_files(root)? {
                    let bytes = std::fs::read(&path)
                        .map_err(|e| CorpusError::SourceUnavailable(format!("{}: {e}", path.display())))?;
                    let text = match decode(&bytes, *encoding) {
                        Ok(t) => t,
                        Err(e) => {
                            tracing::warn!(path = %path.display(), error = %e, "skipping undecodable file");
                            continue;
                        }
                    };
                    if query_matches(&text, query) {
                        out.push(SourceDescriptor {
                            uri: path.display().to_string(),
                            title: path
                                .file_stem()
                                .map(|s| s.to_string_lossy().into_owned())
                                .unwrap_or_default(),
                            size: bytes.len() as u64,
                            encoding: *encoding,
                        });
                    }
                }
            }
            Adapter::UrlList { urls, encoding } => {
                for url in urls {
                    let bytes = http_get(url)?;
                    let text = decode(&bytes, *encoding)?;
                    if query_matches(&text, query) {
                        let title = url
                            .trim_end_matches('/')
                            .rsplit('/')
                            .next()
                            .unwrap_or(url)
                            .trim_end_matches(".txt")
                            .to_string();
                        out.push(SourceDescriptor {
                            uri: url.clone(),
                            title,
                            size: bytes.len() as u64,
                            encoding: *encoding,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Fetch the raw bytes behind a descriptor.
pub fn read_source(source: &SourceDescriptor) -> Result<Vec<u8>> {
    if source.uri.starts_with("http://") || source.uri.starts_with("https://") {
        http_get(&source.uri)
    } else {
        std::fs::read(&source.uri)
            .map_err(|e| CorpusError::SourceUnavailable(format!("{}: {e}", source.uri)))
    }
}

fn default_title(text: &str) -> String {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    first.chars().take(80).collect()
}

/// Decode, normalize and classify raw bytes without storing anything.
pub fn prepare_document(
    bytes: &[u8],
    source: &SourceDescriptor,
    analyzer: &Analyzer,
) -> Result<(Document, Detection)> {
    if bytes.is_empty() {
        return Err(CorpusError::EmptyDocument(source.uri.clone()));
    }
    let text = normalize(&decode(bytes, source.encoding)?);
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyDocument(source.uri.clone()));
    }
    let detection = detect_language(&text, analyzer);
    let title = if source.title.trim().is_empty() {
        default_title(&text)
    } else {
        source.title.trim().to_string()
    };
    let mut metadata = BTreeMap::new();
    metadata.insert("size".to_string(), bytes.len().to_string());
    if let Some(w) = &detection.warning {
        metadata.insert("language_warning".to_string(), w.clone());
    }
    let doc = Document {
        id: document_id(&text),
        source: source.uri.clone(),
        title,
        language: detection.language,
        text,
        metadata,
        ingested_at: Utc::now(),
    };
    Ok((doc, detection))
}

/// Decode, normalize, classify and store a document. Content already in the
/// store is not written again; the stored document is returned instead.
pub fn ingest_document(
    store: &dyn Store,
    bytes: &[u8],
    source: &SourceDescriptor,
    analyzer: &Analyzer,
) -> Result<Document> {
    let (doc, detection) = prepare_document(bytes, source, analyzer)?;
    if let Some(w) = detection.warning {
        tracing::warn!(source = %source.uri, "{w}");
    }
    match store.get_json::<Document>(Segment::Documents, &doc.id) {
        Ok(existing) => return Ok(existing),
        Err(LibraryError::NotFound { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    store.put_json(Segment::Documents, &doc.id, &doc)?;
    Ok(doc)
}

/// Form and store a corpus from stored documents. Repeated ids keep their
/// first position.
pub fn build_corpus(store: &dyn Store, name: &str, selection: &[String]) -> Result<Corpus> {
    if selection.is_empty() {
        return Err(CorpusError::EmptySelection);
    }
    let mut seen = BTreeSet::new();
    let ids: Vec<String> = selection
        .iter()
        .filter(|id| seen.insert(id.as_str()))
        .cloned()
        .collect();
    for id in &ids {
        let known = crate::library::validate_key(id).is_ok() && store.contains(Segment::Documents, id)?;
        if !known {
            return Err(CorpusError::UnknownDocument(id.clone()));
        }
    }
    let corpus = Corpus::new(name, ids);
    store.put_json(Segment::Corpora, &corpus.id, &corpus)?;
    Ok(corpus)
}

pub fn load_corpus(store: &dyn Store, id: &str) -> Result<Corpus> {
    match store.get_json(Segment::Corpora, id) {
        Err(LibraryError::NotFound { .. }) | Err(LibraryError::InvalidKey(_)) => {
            Err(CorpusError::UnknownCorpus(id.to_string()))
        }
        other => Ok(other?),
    }
}

pub fn load_document(store: &dyn Store, id: &str) -> Result<Document> {
    match store.get_json(Segment::Documents, id) {
        Err(LibraryError::NotFound { .. }) | Err(LibraryError::InvalidKey(_)) => {
            Err(CorpusError::UnknownDocument(id.to_string()))
        }
        other => Ok(other?),
    }
}

/// Member documents in corpus order.
pub fn load_documents(store: &dyn Store, corpus: &Corpus) -> Result<Vec<Document>> {
    corpus.doc_ids.iter().map(|id| load_document(store, id)).collect()
}

/// `(corpus id, document id)` for every corpus member missing from the store.
pub fn dangling_members(store: &dyn Store) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for key in store.keys(Segment::Corpora)? {
        let corpus: Corpus = store.get_json(Segment::Corpora, &key)?;
        for id in &corpus.doc_ids {
            if !store.contains(Segment::Documents, id)? {
                out.push((corpus.id.clone(), id.clone()));
            }
        }
    }
    Ok(out)
}
