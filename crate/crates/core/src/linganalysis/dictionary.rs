use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Analyzer;

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("invalid dictionary document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("dictionary {dictionary}: entry {index}: {reason}")]
    InvalidEntry {
        dictionary: String,
        index: usize,
        reason: &'static str,
    },
    #[error("dictionary id is empty")]
    EmptyId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Encyclopedic,
    Explanatory,
    Thesaurus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    #[serde(default)]
    pub dictionary_id: String,
    pub headword: String,
    pub definition: String,
    #[serde(default)]
    pub synonyms: BTreeSet<String>,
    #[serde(default = "default_kind")]
    pub source_kind: SourceKind,
}

fn default_kind() -> SourceKind {
    SourceKind::Explanatory
}

/// One imported encyclopedic dictionary, explanatory dictionary or thesaurus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionary {
    pub id: String,
    pub source_kind: SourceKind,
    pub entries: Vec<DictionaryEntry>,
}

impl Dictionary {
    /// Parse the import document and stamp each entry with the dictionary's
    /// id and kind.
    pub fn from_json(text: &str) -> Result<Self, DictionaryError> {
        let mut d: Dictionary = serde_json::from_str(text)?;
        if d.id.trim().is_empty() {
            return Err(DictionaryError::EmptyId);
        }
        for (index, e) in d.entries.iter_mut().enumerate() {
            if e.headword.trim().is_empty() {
                return Err(DictionaryError::InvalidEntry {
                    dictionary: d.id.clone(),
                    index,
                    reason: "empty headword",
                });
            }
            if e.definition.trim().is_empty() {
                return Err(DictionaryError::InvalidEntry {
                    dictionary: d.id.clone(),
                    index,
                    reason: "empty definition",
                });
            }
            e.dictionary_id = d.id.clone();
            e.source_kind = d.source_kind;
        }
        Ok(d)
    }

    /// Headwords and synonyms rewritten as lemma keys.
    pub fn normalized(&self, analyzer: &Analyzer) -> Dictionary {
        let entries = self
            .entries
            .iter()
            .map(|e| DictionaryEntry {
                headword: analyzer.lemma_key(&e.headword),
                synonyms: e
                    .synonyms
                    .iter()
                    .map(|s| analyzer.lemma_key(s))
                    .filter(|s| !s.is_empty())
                    .collect(),
                ..e.clone()
            })
            .collect();
        Dictionary {
            entries,
            ..self.clone()
        }
    }

    pub fn lookup<'a>(&'a self, lemma_key: &'a str) -> impl Iterator<Item = &'a DictionaryEntry> + 'a {
        self.entries.iter().filter(move |e| e.headword == lemma_key)
    }
}
