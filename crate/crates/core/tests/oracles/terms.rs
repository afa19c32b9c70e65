use std::collections::{BTreeMap, BTreeSet};

use icon_core::corpus::Document;
use icon_core::linganalysis::{is_term_head, AnalysisConfig, Analyzer, Token, TokenKind};

#[derive(Debug, Clone, PartialEq)]
pub struct TermStat {
    pub tf: usize,
    pub df: usize,
    pub tfidf: f64,
    pub cvalue: Option<f64>,
}

fn eligible(lemma: &str, analyzer: &Analyzer, config: &AnalysisConfig) -> bool {
    lemma.chars().any(char::is_alphabetic)
        && lemma.chars().count() >= config.min_word_len
        && !analyzer.is_stopword(lemma)
}

fn edge_ok(t: &Token, analyzer: &Analyzer, config: &AnalysisConfig) -> bool {
    !analyzer.is_stopword(&t.surface) && eligible(&t.lemma, analyzer, config)
}

/// Every term candidate with its statistics, computed by direct counting and
/// before any threshold is applied.
pub fn brute_force_candidates(
    docs: &[Document],
    analyzer: &Analyzer,
    config: &AnalysisConfig,
) -> BTreeMap<String, TermStat> {
    let n = docs.len() as f64;
    let mut tf: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen_in: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut multi: BTreeSet<String> = BTreeSet::new();

    for (i, d) in docs.iter().enumerate() {
        let tokens = analyzer.analyze(&d.text);
        for t in tokens.iter().filter(|t| t.kind != TokenKind::Punct) {
            if eligible(&t.lemma, analyzer, config) && is_term_head(&t.lemma) {
                *tf.entry(t.lemma.clone()).or_default() += 1;
                seen_in.entry(t.lemma.clone()).or_default().insert(i);
            }
        }
        // word sequences: scan every start and length inside word-only runs
        for a in 0..tokens.len() {
            for len in 2..=config.max_ngram {
                let b = a + len;
                if b > tokens.len() {
                    break;
                }
                let window = &tokens[a..b];
                if window.iter().any(|t| t.kind != TokenKind::Word) {
                    break;
                }
                let last = &window[len - 1];
                if !edge_ok(&window[0], analyzer, config)
                    || !edge_ok(last, analyzer, config)
                    || !is_term_head(&last.lemma)
                {
                    continue;
                }
                let key = window.iter().map(|t| t.lemma.as_str()).collect::<Vec<_>>().join(" ");
                *tf.entry(key.clone()).or_default() += 1;
                seen_in.entry(key.clone()).or_default().insert(i);
                multi.insert(key);
            }
        }
    }

    let words: BTreeMap<&str, Vec<&str>> =
        multi.iter().map(|k| (k.as_str(), k.split(' ').collect())).collect();
    let mut out = BTreeMap::new();
    for (key, &f) in &tf {
        let df = seen_in[key].len();
        let tfidf = f as f64 * (n / df as f64).ln();
        let cvalue = multi.contains(key).then(|| {
            let mine = &words[key.as_str()];
            let containers: Vec<usize> = words
                .iter()
                .filter(|(_, w)| w.len() > mine.len() && w.windows(mine.len()).any(|x| x == &mine[..]))
                .map(|(k, _)| tf[*k])
                .collect();
            let len = (mine.len() as f64).log2();
            if containers.is_empty() {
                len * f as f64
            } else {
                let mean = containers.iter().sum::<usize>() as f64 / containers.len() as f64;
                len * (f as f64 - mean)
            }
        });
        out.insert(key.clone(), TermStat { tf: f, df, tfidf, cvalue });
    }
    out
}

/// The candidates that survive the configured thresholds.
pub fn expected_terms(
    candidates: &BTreeMap<String, TermStat>,
    config: &AnalysisConfig,
) -> BTreeSet<String> {
    candidates
        .iter()
        .filter(|(_, s)| match s.cvalue {
            Some(c) => c >= config.cvalue_min,
            None => s.tfidf >= config.tfidf_min,
        })
        .map(|(k, _)| k.clone())
        .collect()
}
