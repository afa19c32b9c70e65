use std::collections::BTreeSet;

use icon_core::corpus::{Corpus, Document, Language};
use icon_core::index::{Hit, QueryMode};
use icon_core::linganalysis::{Analyzer, TokenKind};
use rand::Rng;

/// Surface vocabulary for random corpora: inflected forms sharing lemmas,
/// stopwords, mixed case, numbers, hyphenated words and punctuation.
pub const VOCAB: &[&str] = &[
    "онтология", "онтологии", "Онтологией", "понятие", "понятия", "понятий", "система", "системы",
    "данных", "база", "базы", "и", "в", "на", "граф", "графа", "термин", "терминов", "словарь",
    "словари", "кое-что", "42", "2024", ",", ".", "Graph", "graph", "корпус", "корпуса", "модель",
    "текст", "текстов", "знаний",
];

/// A corpus shape: each document is a list of indices into [`VOCAB`].
pub type CorpusShape = Vec<Vec<usize>>;

pub fn random_shape<R: Rng>(rng: &mut R, max_docs: usize, max_tokens: usize) -> CorpusShape {
    let n = rng.gen_range(1..=max_docs);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=max_tokens);
            (0..len).map(|_| rng.gen_range(0..VOCAB.len())).collect()
        })
        .collect()
}

pub fn materialize(shape: &CorpusShape) -> (Corpus, Vec<Document>) {
    let docs: Vec<Document> = shape
        .iter()
        .enumerate()
        .map(|(i, words)| {
            let text = words.iter().map(|&w| VOCAB[w]).collect::<Vec<_>>().join(" ");
            Document::with_id(&format!("doc{i:03}"), &text, Language::Ru)
        })
        .collect();
    let corpus = Corpus::new("random", docs.iter().map(|d| d.id.clone()).collect());
    (corpus, docs)
}

/// A document reduced to its sequence of non-punctuation lemmas.
pub struct ScanDoc {
    pub id: String,
    pub lemmas: Vec<String>,
}

pub fn scan_docs(docs: &[Document], analyzer: &Analyzer) -> Vec<ScanDoc> {
    docs.iter()
        .map(|d| ScanDoc {
            id: d.id.clone(),
            lemmas: analyzer
                .analyze(&d.text)
                .into_iter()
                .filter(|t| t.kind != TokenKind::Punct)
                .map(|t| t.lemma)
                .collect(),
        })
        .collect()
}

pub fn query_lemmas(query: &str, analyzer: &Analyzer) -> Vec<String> {
    analyzer
        .analyze(query)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct)
        .map(|t| t.lemma)
        .collect()
}

/// Linear scan: matching documents with `sum tf * ln(N / df)` scores.
pub fn scan_query(docs: &[ScanDoc], query: &[String], mode: QueryMode) -> Vec<(String, f64)> {
    let distinct: BTreeSet<&String> = query.iter().collect();
    let n = docs.len() as f64;
    let df = |l: &String| docs.iter().filter(|d| d.lemmas.contains(l)).count();
    let mut out = Vec::new();
    for d in docs {
        let present: Vec<&&String> = distinct.iter().filter(|l| d.lemmas.contains(l)).collect();
        let ok = match mode {
            QueryMode::Any => !present.is_empty(),
            QueryMode::All => present.len() == distinct.len(),
            QueryMode::Phrase => {
                d.lemmas.len() >= query.len() && d.lemmas.windows(query.len()).any(|w| w == query)
            }
        };
        if ok {
            let score = present
                .iter()
                .map(|l| {
                    let tf = d.lemmas.iter().filter(|x| *x == **l).count() as f64;
                    tf * (n / df(l) as f64).ln()
                })
                .sum();
            out.push((d.id.clone(), score));
        }
    }
    out
}

/// Compare index hits with the scan: same documents, scores within a
/// relative tolerance, and hits ordered by score desc then id asc.
pub fn hits_agree(hits: &[Hit], expected: &[(String, f64)], tol: f64) -> Result<(), String> {
    let got: BTreeSet<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
    let want: BTreeSet<&str> = expected.iter().map(|(d, _)| d.as_str()).collect();
    if got != want || hits.len() != expected.len() {
        return Err(format!("documents differ: index {got:?}, scan {want:?}"));
    }
    for h in hits {
        let (_, s) = expected.iter().find(|(d, _)| *d == h.doc_id).unwrap();
        if !close(h.score, *s, tol) {
            return Err(format!("{}: score {} vs {}", h.doc_id, h.score, s));
        }
    }
    for w in hits.windows(2) {
        let ordered = w[0].score > w[1].score
            || (w[0].score == w[1].score && w[0].doc_id < w[1].doc_id);
        if !ordered {
            return Err(format!("hits out of order at {} / {}", w[0].doc_id, w[1].doc_id));
        }
    }
    Ok(())
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Queries drawn for one corpus: single words, pairs, words absent from the
/// vocabulary and phrases cut out of the documents.
pub fn random_queries<R: Rng>(rng: &mut R, shape: &CorpusShape, count: usize) -> Vec<String> {
    (0..count)
        .map(|i| match i % 4 {
            0 => VOCAB[rng.gen_range(0..VOCAB.len())].to_string(),
            1 => format!(
                "{} {}",
                VOCAB[rng.gen_range(0..VOCAB.len())],
                VOCAB[rng.gen_range(0..VOCAB.len())]
            ),
            2 => format!("{} отсутствует", VOCAB[rng.gen_range(0..VOCAB.len())]),
            _ => {
                let doc = &shape[rng.gen_range(0..shape.len())];
                let start = rng.gen_range(0..doc.len());
                let len = rng.gen_range(1..=3).min(doc.len() - start);
                doc[start..start + len].iter().map(|&w| VOCAB[w]).collect::<Vec<_>>().join(" ")
            }
        })
        .collect()
}
