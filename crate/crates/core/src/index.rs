//! Positional inverted index over a corpus, plus a headword index over
//! dictionaries.
//!
//! Serialized form (UTF-8, `\n` line ends, lemmas in byte order, postings
//! in doc-id order):
//!
//! ```text
//! ICONIDX 1
//! corpus_id <corpus id>
//! version <n>
//! analyzer <analyzer digest>
//! docs <N>
//! doc <doc id> <token count>          N lines, doc-id order
//! lemma <lemma> <df>                  one block per lemma ...
//! post <doc id> <p1>,<p2>,...         ... followed by df posting lines
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::digest::sha256_hex;
use crate::library::{LibraryError, Segment, Store};
use crate::linganalysis::{Analyzer, Dictionary, TokenKind};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("UNKNOWN_CORPUS: {0}")]
    UnknownCorpus(String),
    #[error("document {0} of the corpus was not supplied")]
    MissingDocument(String),
    #[error("EMPTY_QUERY: the query has no searchable words")]
    EmptyQuery,
    #[error("malformed index file, line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Library(#[from] LibraryError),
}

impl IndexError {
    pub fn code(&self) -> &'static str {
        match self {
            IndexError::UnknownCorpus(_) => "UNKNOWN_CORPUS",
            IndexError::MissingDocument(_) => "UNKNOWN_DOCUMENT",
            IndexError::EmptyQuery => "EMPTY_QUERY",
            IndexError::Malformed { .. } => "MALFORMED_INDEX",
            IndexError::Library(e) => e.code(),
        }
    }
}

pub type Result<T, E = IndexError> = std::result::Result<T, E>;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    /// Strictly increasing token offsets.
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub corpus_id: String,
    pub version: u64,
    pub analyzer_digest: String,
    /// Lemma -> postings in doc-id order.
    pub entries: BTreeMap<String, Vec<Posting>>,
    pub doc_count: usize,
    pub doc_lengths: BTreeMap<String, usize>,
}

/// Index the documents of `corpus`.
///
/// Every word and number token is indexed under its lemma at its position.
/// The result depends only on the corpus contents and the analyzer, except
/// for `version`: it is `previous.version` when the content is unchanged,
/// one more than it otherwise, and 1 without a previous index.
pub fn build_index(
    corpus: &Corpus,
    docs: &[Document],
    analyzer: &Analyzer,
    previous: Option<&InvertedIndex>,
) -> Result<InvertedIndex> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let members: BTreeSet<&str> = corpus.doc_ids.iter().map(String::as_str).collect();
    let mut entries: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = BTreeMap::new();
    for id in members {
        let doc = by_id
            .get(id)
            .ok_or_else(|| IndexError::MissingDocument(id.to_string()))?;
        let mut local: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut len = 0;
        for t in analyzer.analyze(&doc.text) {
            if t.kind == TokenKind::Punct {
                continue;
            }
            local.entry(t.lemma).or_default().push(t.position);
            len = t.position + 1;
        }
        doc_lengths.insert(id.to_string(), len);
        for (lemma, positions) in local {
            entries.entry(lemma).or_default().push(Posting {
                doc_id: id.to_string(),
                positions,
            });
        }
    }
    let mut index = InvertedIndex {
        corpus_id: corpus.id.clone(),
        version: 1,
        analyzer_digest: analyzer.digest().to_string(),
        doc_count: doc_lengths.len(),
        entries,
        doc_lengths,
    };
    if let Some(prev) = previous {
        index.version = if prev.content_digest() == index.content_digest() {
            prev.version
        } else {
            prev.version + 1
        };
    }
    Ok(index)
}

fn malformed(line: usize, reason: impl Into<String>) -> IndexError {
    IndexError::Malformed {
        line,
        reason: reason.into(),
    }
}

impl InvertedIndex {
    fn write_body(&self, out: &mut String) {
        let _ = writeln!(out, "docs {}", self.doc_count);
        for (id, len) in &self.doc_lengths {
            let _ = writeln!(out, "doc {id} {len}");
        }
        for (lemma, postings) in &self.entries {
            let _ = writeln!(out, "lemma {lemma} {}", postings.len());
            for p in postings {
                let positions: Vec<String> = p.positions.iter().map(usize::to_string).collect();
                let _ = writeln!(out, "post {} {}", p.doc_id, positions.join(","));
            }
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = format!(
            "ICONIDX {FORMAT_VERSION}\ncorpus_id {}\nversion {}\nanalyzer {}\n",
            self.corpus_id, self.version, self.analyzer_digest
        );
        self.write_body(&mut out);
        out
    }

    /// Digest of the full serialized form.
    pub fn digest(&self) -> String {
        sha256_hex(self.serialize().as_bytes())
    }

    /// Digest of everything but the version number.
    pub fn content_digest(&self) -> String {
        let mut out = format!("{}\n{}\n", self.corpus_id, self.analyzer_digest);
        self.write_body(&mut out);
        sha256_hex(out.as_bytes())
    }

    pub fn parse(text: &str) -> Result<InvertedIndex> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        fn field<'a>(
            lines: &mut impl Iterator<Item = (usize, &'a str)>,
            name: &str,
        ) -> Result<(usize, &'a str)> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| malformed(0, format!("unexpected end of file, expected {name}")))?;
            match line.split_once(' ') {
                Some((k, v)) if k == name => Ok((n, v)),
                _ => Err(malformed(n, format!("expected {name}"))),
            }
        }
        let (n, magic) = field(&mut lines, "ICONIDX")?;
        if magic != FORMAT_VERSION.to_string() {
            return Err(malformed(n, format!("unsupported format version {magic}")));
        }
        let corpus_id = field(&mut lines, "corpus_id")?.1.to_string();
        let (n, version) = field(&mut lines, "version")?;
        let version = version.parse().map_err(|_| malformed(n, "bad version"))?;
        let analyzer_digest = field(&mut lines, "analyzer")?.1.to_string();
        let (n, docs) = field(&mut lines, "docs")?;
        let doc_count: usize = docs.parse().map_err(|_| malformed(n, "bad doc count"))?;
        let mut doc_lengths = BTreeMap::new();
        for _ in 0..doc_count {
            let (n, rest) = field(&mut lines, "doc")?;
            let (id, len) = rest.split_once(' ').ok_or_else(|| malformed(n, "bad doc line"))?;
            let len = len.parse().map_err(|_| malformed(n, "bad doc length"))?;
            doc_lengths.insert(id.to_string(), len);
        }
        let mut entries = BTreeMap::new();
        while lines.peek().is_some() {
            let (n, rest) = field(&mut lines, "lemma")?;
            let (lemma, df) = rest.rsplit_once(' ').ok_or_else(|| malformed(n, "bad lemma line"))?;
            let df: usize = df.parse().map_err(|_| malformed(n, "bad df"))?;
            let mut postings = Vec::with_capacity(df);
            for _ in 0..df {
                let (n, rest) = field(&mut lines, "post")?;
                let (doc_id, list) = rest.split_once(' ').ok_or_else(|| malformed(n, "bad posting"))?;
                let positions = list
                    .split(',')
                    .map(|p| p.parse::<usize>().map_err(|_| malformed(n, "bad position")))
                    .collect::<Result<Vec<_>>>()?;
                postings.push(Posting {
                    doc_id: doc_id.to_string(),
                    positions,
                });
            }
            entries.insert(lemma.to_string(), postings);
        }
        Ok(InvertedIndex {
            corpus_id,
            version,
            analyzer_digest,
            entries,
            doc_count,
            doc_lengths,
        })
    }

    /// Postings of one lemma, empty when absent.
    pub fn postings(&self, lemma: &str) -> &[Posting] {
        self.entries.get(lemma).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// Documents containing at least one query lemma.
    Any,
    /// Documents containing every query lemma.
    All,
    /// Documents containing the lemma sequence at consecutive positions.
    Phrase,
}

impl std::str::FromStr for QueryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "any" => Ok(QueryMode::Any),
            "all" => Ok(QueryMode::All),
            "phrase" => Ok(QueryMode::Phrase),
            other => Err(format!("unknown query mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

/// Lemma sequence of a query, punctuation dropped.
pub fn query_lemmas(query: &str, analyzer: &Analyzer) -> Vec<String> {
    analyzer
        .analyze(query)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct)
        .map(|t| t.lemma)
        .collect()
}

fn phrase_at(index: &InvertedIndex, lemmas: &[String], doc_id: &str) -> bool {
    let lists: Vec<&[usize]> = lemmas
        .iter()
        .map(|l| {
            index
                .postings(l)
                .iter()
                .find(|p| p.doc_id == doc_id)
                .map_or(&[][..], |p| p.positions.as_slice())
        })
        .collect();
    lists[0].iter().any(|&start| {
        lists
            .iter()
            .enumerate()
            .skip(1)
            .all(|(k, list)| list.binary_search(&(start + k)).is_ok())
    })
}

/// Search the index. Scores are `sum of tf * ln(N / df)` over the distinct
/// query lemmas present in a document; ties are broken by ascending doc id.
pub fn query_index(index: &InvertedIndex, analyzer: &Analyzer, query: &str, mode: QueryMode) -> Result<Vec<Hit>> {
    let lemmas = query_lemmas(query, analyzer);
    query_lemma_seq(index, &lemmas, mode)
}

/// [`query_index`] over an already analyzed lemma sequence.
pub fn query_lemma_seq(index: &InvertedIndex, lemmas: &[String], mode: QueryMode) -> Result<Vec<Hit>> {
    if lemmas.is_empty() {
        return Err(IndexError::EmptyQuery);
    }
    let distinct: BTreeSet<&String> = lemmas.iter().collect();
    let n = index.doc_count;
    let mut scores: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for lemma in &distinct {
        let postings = index.postings(lemma);
        let idf = crate::linganalysis::idf(n, postings.len());
        for p in postings {
            let e = scores.entry(p.doc_id.as_str()).or_default();
            e.0 += p.positions.len() as f64 * idf;
            e.1 += 1;
        }
    }
    let mut hits: Vec<Hit> = scores
        .into_iter()
        .filter(|(doc, (_, matched))| match mode {
            QueryMode::Any => true,
            QueryMode::All => *matched == distinct.len(),
            QueryMode::Phrase => *matched == distinct.len() && phrase_at(index, lemmas, doc),
        })
        .map(|(doc, (score, _))| Hit {
            doc_id: doc.to_string(),
            score,
        })
        .collect();
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    Ok(hits)
}

/// Store an index under its corpus id.
pub fn save_index(store: &dyn Store, index: &InvertedIndex) -> Result<()> {
    store.put(Segment::Indexes, &index.corpus_id, index.serialize().as_bytes())?;
    Ok(())
}

/// The stored index of a corpus, if any.
pub fn load_index(store: &dyn Store, corpus_id: &str) -> Result<Option<InvertedIndex>> {
    match store.get(Segment::Indexes, corpus_id) {
        Ok(bytes) => {
            let text = String::from_utf8(bytes).map_err(|_| malformed(0, "not UTF-8"))?;
            InvertedIndex::parse(&text).map(Some)
        }
        Err(LibraryError::NotFound { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Rebuild the index of a stored corpus and store it, bumping the version
/// only when the content changed.
pub fn index_stored_corpus(store: &dyn Store, corpus_id: &str, analyzer: &Analyzer) -> Result<InvertedIndex> {
    use crate::corpus::{load_corpus, load_documents, CorpusError};
    let corpus = load_corpus(store, corpus_id).map_err(|e| match e {
        CorpusError::UnknownCorpus(id) => IndexError::UnknownCorpus(id),
        CorpusError::Library(l) => IndexError::Library(l),
        other => IndexError::UnknownCorpus(other.to_string()),
    })?;
    let docs = load_documents(store, &corpus).map_err(|e| match e {
        CorpusError::UnknownDocument(id) => IndexError::MissingDocument(id),
        CorpusError::Library(l) => IndexError::Library(l),
        other => IndexError::UnknownCorpus(other.to_string()),
    })?;
    let previous = load_index(store, corpus_id)?;
    let index = build_index(&corpus, &docs, analyzer, previous.as_ref())?;
    if previous.as_ref() != Some(&index) {
        save_index(store, &index)?;
    }
    Ok(index)
}

/// Dictionary entries by headword lemma key.
#[derive(Debug, Clone, Default)]
pub struct HeadwordIndex {
    entries: BTreeMap<String, Vec<(String, usize)>>,
}

impl HeadwordIndex {
    /// Build over normalized dictionaries.
    pub fn build(dictionaries: &[Dictionary]) -> Self {
        let mut entries: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
        for d in dictionaries {
            for (i, e) in d.entries.iter().enumerate() {
                entries.entry(e.headword.clone()).or_default().push((d.id.clone(), i));
            }
        }
        HeadwordIndex { entries }
    }

    /// `(dictionary id, entry index)` pairs for an exact headword.
    pub fn lookup(&self, lemma_key: &str) -> &[(String, usize)] {
        self.entries.get(lemma_key).map_or(&[], Vec::as_slice)
    }

    /// Headwords starting with `prefix`, in order.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .range(prefix.to_string()..)
            .take_while(move |(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
