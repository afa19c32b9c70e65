use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisConfig, AnalysisError, Analyzer, Token, TokenKind};
use crate::corpus::{Corpus, Document};
use crate::index::InvertedIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Space-joined lemmas, one to four words.
    pub lemma_key: String,
    pub tf: usize,
    pub df: usize,
    pub tfidf: f64,
    /// Only set for multiword terms.
    pub cvalue: Option<f64>,
    /// `tfidf` for single words, `cvalue` for multiword terms.
    pub score: f64,
    /// `(doc_id, position of the first word)`, in corpus order.
    pub occurrences: Vec<(String, usize)>,
}

impl Term {
    pub fn word_count(&self) -> usize {
        self.lemma_key.split(' ').count()
    }
}

pub(crate) fn idf(n_docs: usize, df: usize) -> f64 {
    if df == 0 || n_docs == 0 {
        0.0
    } else {
        (n_docs as f64 / df as f64).ln()
    }
}

/// Candidate statistics accumulated over the corpus.
#[derive(Debug, Default, Clone)]
struct Counts {
    tf: usize,
    df: usize,
    occurrences: Vec<(String, usize)>,
}

/// Score and filter term candidates.
///
/// Single words come straight from the index postings and are scored by
/// `tf * ln(N / df)`. Word sequences of length 2..=`max_ngram` are counted
/// from a token pass over each document; they may not start or end on a
/// stopword, may not cross punctuation or numbers, and are scored by C-value.
/// Single words and the last word of a sequence must pass [`is_term_head`].
/// C-value:
/// `log2|a| * f(a)` when `a` is not nested in a longer candidate, otherwise
/// `log2|a| * (f(a) - mean f(b))` over the longer candidates `b` containing it.
pub fn extract_terms(
    corpus: &Corpus,
    docs: &[Document],
    index: &InvertedIndex,
    analyzer: &Analyzer,
    config: &AnalysisConfig,
) -> Result<Vec<Term>, AnalysisError> {
    if index.corpus_id != corpus.id
        || index.analyzer_digest != analyzer.digest()
        || !index.doc_lengths.keys().eq(sorted(&corpus.doc_ids))
    {
        return Err(AnalysisError::StaleIndex {
            index: index.corpus_id.clone(),
            corpus: corpus.id.clone(),
        });
    }
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let ordered: Vec<&Document> = corpus
        .doc_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| AnalysisError::MissingDocument(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let n_docs = index.doc_count;

    let mut terms = Vec::new();

    for (lemma, postings) in &index.entries {
        if !is_candidate_word(lemma, analyzer, config) || !is_term_head(lemma) {
            continue;
        }
        let tf: usize = postings.iter().map(|p| p.positions.len()).sum();
        let df = postings.len();
        let tfidf = tf as f64 * idf(n_docs, df);
        if tfidf < config.tfidf_min {
            continue;
        }
        let occurrences = ordered
            .iter()
            .filter_map(|d| postings.iter().find(|p| p.doc_id == d.id))
            .flat_map(|p| p.positions.iter().map(move |&pos| (p.doc_id.clone(), pos)))
            .collect();
        terms.push(Term {
            lemma_key: lemma.clone(),
            tf,
            df,
            tfidf,
            cvalue: None,
            score: tfidf,
            occurrences,
        });
    }

    let per_doc: Vec<BTreeMap<String, Vec<usize>>> = ordered
        .par_iter()
        .map(|d| ngram_candidates(&analyzer.analyze(&d.text), analyzer, config))
        .collect();
    let mut counts: BTreeMap<String, Counts> = BTreeMap::new();
    for (doc, cands) in ordered.iter().zip(per_doc) {
        for (key, positions) in cands {
            let c = counts.entry(key).or_default();
            c.tf += positions.len();
            c.df += 1;
            c.occurrences
                .extend(positions.into_iter().map(|p| (doc.id.clone(), p)));
        }
    }

    let cvalues = cvalues(&counts);
    for (key, c) in counts {
        let cvalue = cvalues[&key];
        if cvalue < config.cvalue_min {
            continue;
        }
        terms.push(Term {
            tfidf: c.tf as f64 * idf(n_docs, c.df),
            lemma_key: key,
            tf: c.tf,
            df: c.df,
            cvalue: Some(cvalue),
            score: cvalue,
            occurrences: c.occurrences,
        });
    }

    terms.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.lemma_key.cmp(&b.lemma_key))
    });
    Ok(terms)
}

fn sorted(ids: &[String]) -> impl Iterator<Item = &String> {
    ids.iter().collect::<BTreeSet<_>>().into_iter()
}

fn is_candidate_word(lemma: &str, analyzer: &Analyzer, config: &AnalysisConfig) -> bool {
    lemma.chars().any(char::is_alphabetic)
        && lemma.chars().count() >= config.min_word_len
        && !analyzer.is_stopword(lemma)
}

const ADJECTIVE_ENDINGS: &[&str] = &["ый", "ий", "ой", "ая", "яя", "ое", "ее", "ые", "ие"];
const VERB_ENDINGS: &[&str] = &[
    "ться", "ется", "ются", "ится", "ятся", "ает", "яет", "еет", "ует", "ают", "яют", "еют", "уют",
];

/// Whether a lemma can head a term: adjectival and finite-verb endings are
/// rejected, everything else is taken as nominal.
pub fn is_term_head(lemma: &str) -> bool {
    !ADJECTIVE_ENDINGS
        .iter()
        .chain(VERB_ENDINGS)
        .any(|e| lemma.ends_with(e))
}

fn is_boundary_ok(t: &Token, analyzer: &Analyzer, config: &AnalysisConfig) -> bool {
    !analyzer.is_stopword(&t.surface) && is_candidate_word(&t.lemma, analyzer, config)
}

/// Multiword candidates of one document: lemma key -> start positions.
fn ngram_candidates(
    tokens: &[Token],
    analyzer: &Analyzer,
    config: &AnalysisConfig,
) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for run in tokens.split(|t| t.kind != TokenKind::Word) {
        for start in 0..run.len() {
            if !is_boundary_ok(&run[start], analyzer, config) {
                continue;
            }
            for n in 2..=config.max_ngram.min(run.len() - start) {
                let last = &run[start + n - 1];
                if !is_boundary_ok(last, analyzer, config) || !is_term_head(&last.lemma) {
                    continue;
                }
                let key = run[start..start + n]
                    .iter()
                    .map(|t| t.lemma.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.entry(key).or_default().push(run[start].position);
            }
        }
    }
    out
}

fn cvalues(counts: &BTreeMap<String, Counts>) -> HashMap<String, f64> {
    // nested-in sets: candidate -> longer candidates containing it
    let mut containers: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for longer in counts.keys() {
        let words: Vec<&str> = longer.split(' ').collect();
        for n in 2..words.len() {
            for start in 0..=words.len() - n {
                let sub = words[start..start + n].join(" ");
                if let Some((k, _)) = counts.get_key_value(sub.as_str()) {
                    containers.entry(k.as_str()).or_default().insert(longer.as_str());
                }
            }
        }
    }
    counts
        .iter()
        .map(|(key, c)| {
            let len = key.split(' ').count() as f64;
            let f = c.tf as f64;
            let value = match containers.get(key.as_str()) {
                Some(ts) if !ts.is_empty() => {
                    let nested: f64 = ts.iter().map(|b| counts[*b].tf as f64).sum();
                    len.log2() * (f - nested / ts.len() as f64)
                }
                _ => len.log2() * f,
            };
            (key.clone(), value)
        })
        .collect()
}
