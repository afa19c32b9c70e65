mod oracles;

use std::collections::BTreeSet;

use icon_core::corpus::load_documents;
use icon_core::index::build_index;
use icon_core::library::Library;
use icon_core::linganalysis::{extract_terms, AnalysisConfig, Analyzer};
use oracles::index::close;
use oracles::terms::{brute_force_candidates, expected_terms};

#[test]
fn fixture_terms_match_direct_counting() {
    let analyzer = Analyzer::builtin();
    let lib = Library::in_memory();
    let corpus = oracles::fixture::ingest(&lib, &analyzer);
    let docs = load_documents(&lib, &corpus).unwrap();
    let index = build_index(&corpus, &docs, &analyzer, None).unwrap();
    let config = AnalysisConfig::default();
    let terms = extract_terms(&corpus, &docs, &index, &analyzer, &config).unwrap();

    let candidates = brute_force_candidates(&docs, &analyzer, &config);
    let got: BTreeSet<String> = terms.iter().map(|t| t.lemma_key.clone()).collect();
    assert_eq!(got, expected_terms(&candidates, &config));
    assert!(terms.len() > 50, "fixture should yield a useful term list");
    assert!(terms.iter().any(|t| t.cvalue.is_some()), "no multiword terms");

    for t in &terms {
        let want = &candidates[&t.lemma_key];
        assert_eq!((t.tf, t.df), (want.tf, want.df), "{}", t.lemma_key);
        assert!(close(t.tfidf, want.tfidf, 1e-9), "{}: tfidf {} vs {}", t.lemma_key, t.tfidf, want.tfidf);
        match (t.cvalue, want.cvalue) {
            (None, None) => {}
            (Some(a), Some(b)) => assert!(close(a, b, 1e-9), "{}: C-value {a} vs {b}", t.lemma_key),
            other => panic!("{}: C-value presence differs {other:?}", t.lemma_key),
        }
        assert_eq!(t.occurrences.len(), t.tf, "{}", t.lemma_key);
    }
}
