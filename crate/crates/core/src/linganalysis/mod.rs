//! Linguistic analysis of corpus documents: terms, concepts and relations.

mod concepts;
mod dictionary;
mod lemma;
mod relations;
mod terms;
mod tokenize;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use concepts::{form_concepts, Concept, ConceptKind, Interpretation, Thesaurus};
pub use dictionary::{Dictionary, DictionaryEntry, DictionaryError, SourceKind};
pub use lemma::Lemmatizer;
pub use relations::{extract_relations, Evidence, Relation, RelationType, PATTERN_CONFIDENCE};
pub use terms::{extract_terms, is_term_head, Term};
pub(crate) use terms::idf;
pub use tokenize::{split_sentences, tokenize, Token, TokenKind};

use crate::digest::sha256_parts;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("UNKNOWN_CORPUS: {0}")]
    UnknownCorpus(String),
    #[error("STALE_INDEX: index built for {index} does not match corpus {corpus}")]
    StaleIndex { index: String, corpus: String },
    #[error("document {0} of the corpus was not supplied")]
    MissingDocument(String),
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::UnknownCorpus(_) => "UNKNOWN_CORPUS",
            AnalysisError::StaleIndex { .. } => "STALE_INDEX",
            AnalysisError::MissingDocument(_) => "UNKNOWN_DOCUMENT",
        }
    }
}

const STOP_RU: &str = include_str!("../../resources/stop_ru.txt");
const STOP_UK: &str = include_str!("../../resources/stop_uk.txt");
const LEMMAS_RU: &str = include_str!("../../resources/lemmas_ru.txt");
const SUFFIXES_RU: &str = include_str!("../../resources/suffixes_ru.txt");

fn word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Tokenizer, lemmatizer and stoplists bundled under one digest, so that
/// anything built with an analyzer can record exactly which one it was.
#[derive(Debug, Clone)]
pub struct Analyzer {
    lemmatizer: Lemmatizer,
    stop_ru: BTreeSet<String>,
    stop_uk: BTreeSet<String>,
    digest: String,
}

impl Analyzer {
    pub fn builtin() -> Self {
        Self::from_resources(STOP_RU, STOP_UK, LEMMAS_RU, SUFFIXES_RU)
    }

    pub fn from_resources(stop_ru: &str, stop_uk: &str, lemmas: &str, suffixes: &str) -> Self {
        Analyzer {
            lemmatizer: Lemmatizer::new().with_dictionary(lemmas).with_rules(suffixes),
            stop_ru: word_list(stop_ru),
            stop_uk: word_list(stop_uk),
            digest: sha256_parts(["analyzer/1", stop_ru, stop_uk, lemmas, suffixes]),
        }
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn lemmatizer(&self) -> &Lemmatizer {
        &self.lemmatizer
    }

    pub fn stop_ru(&self) -> &BTreeSet<String> {
        &self.stop_ru
    }

    pub fn stop_uk(&self) -> &BTreeSet<String> {
        &self.stop_uk
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stop_ru.contains(word) || self.stop_uk.contains(word)
    }

    pub fn lemmatize(&self, token: &Token) -> String {
        match token.kind {
            TokenKind::Word => self.lemmatizer.lemmatize(&token.surface),
            _ => token.surface.clone(),
        }
    }

    /// Tokenize and fill in lemmas.
    pub fn analyze(&self, text: &str) -> Vec<Token> {
        let mut tokens = tokenize(text);
        for t in &mut tokens {
            t.lemma = self.lemmatize(t);
        }
        tokens
    }

    /// Space-joined lemmas of the non-punctuation tokens of a phrase.
    pub fn lemma_key(&self, phrase: &str) -> String {
        self.analyze(phrase)
            .into_iter()
            .filter(|t| t.kind != TokenKind::Punct)
            .map(|t| t.lemma)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Thresholds for term, concept and relation extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub tfidf_min: f64,
    pub cvalue_min: f64,
    pub pmi_min: f64,
    pub pmi_cap: f64,
    /// Longest multiword candidate, in words.
    pub max_ngram: usize,
    /// Minimum number of sentences two concepts must share before PMI is considered.
    pub min_cooccurrence: usize,
    /// Shortest word (in characters) eligible as a term.
    pub min_word_len: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tfidf_min: 1.0,
            cvalue_min: 2.0,
            pmi_min: 2.0,
            pmi_cap: 8.0,
            max_ngram: 4,
            min_cooccurrence: 2,
            min_word_len: 2,
        }
    }
}
