use std::path::{Path, PathBuf};

use icon_core::corpus::{build_corpus, ingest_document, Corpus, SourceDescriptor};
use icon_core::library::Store;
use icon_core::linganalysis::{Analyzer, Dictionary};

/// The repository's `fixtures/` directory.
pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `(file name, bytes)` of the ten fixture documents, in name order.
pub fn corpus_files() -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir().join("corpus"))
        .expect("fixture corpus")
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

pub fn dictionary_texts() -> Vec<String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir().join("dictionaries"))
        .expect("fixture dictionaries")
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect()
}

pub fn dictionaries(analyzer: &Analyzer) -> Vec<Dictionary> {
    dictionary_texts()
        .iter()
        .map(|t| Dictionary::from_json(t).unwrap().normalized(analyzer))
        .collect()
}

pub fn initial_ontology_json() -> String {
    std::fs::read_to_string(dir().join("initial_ontology.json")).unwrap()
}

/// Ingest the fixture documents into `store` and form one corpus of them.
pub fn ingest(store: &dyn Store, analyzer: &Analyzer) -> Corpus {
    let ids: Vec<String> = corpus_files()
        .iter()
        .map(|(name, bytes)| {
            let source = SourceDescriptor {
                uri: format!("fixture:{name}"),
                ..SourceDescriptor::inline("")
            };
            ingest_document(store, bytes, &source, analyzer).unwrap().id
        })
        .collect();
    build_corpus(store, "fixture", &ids).unwrap()
}
