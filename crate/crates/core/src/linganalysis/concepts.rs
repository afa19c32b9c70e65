use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Dictionary, SourceKind, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptKind {
    Object,
    Process,
}

const PROCESS_SUFFIXES: [&str; 4] = ["ние", "ция", "ка", "ство"];

impl ConceptKind {
    /// Process when the last word of the label ends in a deverbal suffix.
    pub fn classify(label: &str) -> ConceptKind {
        let last = label.rsplit(' ').next().unwrap_or(label);
        if PROCESS_SUFFIXES.iter().any(|s| last.ends_with(s)) {
            ConceptKind::Process
        } else {
            ConceptKind::Object
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interpretation {
    pub dictionary_id: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub label: String,
    pub synonyms: BTreeSet<String>,
    pub kind: ConceptKind,
    #[serde(default)]
    pub interpretations: Vec<Interpretation>,
    /// Lemma keys of the terms the concept was formed from.
    #[serde(default)]
    pub provenance: BTreeSet<String>,
    #[serde(default)]
    pub score: f64,
    /// `(doc_id, position)` occurrences of any member term.
    #[serde(default)]
    pub occurrences: Vec<(String, usize)>,
}

impl Concept {
    /// A bare concept, as authored by hand in an initial ontology.
    pub fn named(label: &str) -> Concept {
        Concept {
            id: label.to_string(),
            label: label.to_string(),
            synonyms: BTreeSet::from([label.to_string()]),
            kind: ConceptKind::classify(label),
            interpretations: Vec::new(),
            provenance: BTreeSet::new(),
            score: 0.0,
            occurrences: Vec::new(),
        }
    }

    pub fn occurs_in(&self, doc_id: &str) -> bool {
        self.occurrences.iter().any(|(d, _)| d == doc_id)
    }
}

/// Synonym classes induced by thesaurus entries (headword plus synonyms),
/// closed transitively.
#[derive(Debug, Clone, Default)]
pub struct Thesaurus {
    parent: BTreeMap<String, String>,
}

impl Thesaurus {
    /// Build from already-normalized dictionaries; only thesaurus-kind
    /// entries contribute.
    pub fn from_dictionaries(dicts: &[Dictionary]) -> Thesaurus {
        let mut t = Thesaurus::default();
        for e in dicts.iter().flat_map(|d| &d.entries) {
            if e.source_kind != SourceKind::Thesaurus {
                continue;
            }
            for s in &e.synonyms {
                t.union(&e.headword, s);
            }
        }
        t
    }

    fn find(&self, key: &str) -> String {
        let mut cur = key;
        while let Some(p) = self.parent.get(cur) {
            if p == cur {
                break;
            }
            cur = p;
        }
        cur.to_string()
    }

    pub fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            self.parent.entry(ra.clone()).or_insert(ra);
            return;
        }
        // smaller key becomes the representative, so classes are order-free
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent.insert(child, root.clone());
        self.parent.entry(root.clone()).or_insert(root);
    }

    /// Class representative: the lexicographically smallest member.
    pub fn canonical(&self, key: &str) -> String {
        self.find(key)
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }
}

/// Group terms into concepts.
///
/// Terms sharing a thesaurus class form one concept; its label is the
/// highest-scoring member. Interpretations are collected from every
/// dictionary entry whose headword is a member key, label first.
pub fn form_concepts(terms: &[Term], dictionaries: &[Dictionary]) -> Vec<Concept> {
    let thesaurus = Thesaurus::from_dictionaries(dictionaries);
    let mut groups: BTreeMap<String, Vec<&Term>> = BTreeMap::new();
    for t in terms {
        groups
            .entry(thesaurus.canonical(&t.lemma_key))
            .or_default()
            .push(t);
    }
    let mut concepts: Vec<Concept> = groups
        .into_values()
        .map(|mut members| {
            members.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then_with(|| a.lemma_key.cmp(&b.lemma_key))
            });
            let label = members[0].lemma_key.clone();
            let synonyms: BTreeSet<String> =
                members.iter().map(|t| t.lemma_key.clone()).collect();
            let mut occurrences: Vec<(String, usize)> = members
                .iter()
                .flat_map(|t| t.occurrences.iter().cloned())
                .collect();
            occurrences.sort();
            occurrences.dedup();
            Concept {
                id: label.clone(),
                kind: ConceptKind::classify(&label),
                interpretations: interpretations_for(&label, &synonyms, dictionaries),
                provenance: synonyms.clone(),
                score: members[0].score,
                label,
                synonyms,
                occurrences,
            }
        })
        .collect();
    concepts.sort_by(|a, b| a.id.cmp(&b.id));
    concepts
}

pub(crate) fn interpretations_for(
    label: &str,
    synonyms: &BTreeSet<String>,
    dictionaries: &[Dictionary],
) -> Vec<Interpretation> {
    let keys = std::iter::once(label).chain(synonyms.iter().map(String::as_str).filter(|s| *s != label));
    let mut out: Vec<Interpretation> = Vec::new();
    for key in keys {
        for d in dictionaries {
            for e in d.lookup(key) {
                let i = Interpretation {
                    dictionary_id: d.id.clone(),
                    definition: e.definition.clone(),
                };
                if !out.contains(&i) {
                    out.push(i);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linganalysis::Analyzer;

    fn term(key: &str, score: f64) -> Term {
        Term {
            lemma_key: key.into(),
            tf: 1,
            df: 1,
            tfidf: score,
            cvalue: None,
            score,
            occurrences: vec![("d1".into(), 0)],
        }
    }

    fn dicts() -> Vec<Dictionary> {
        let a = Analyzer::builtin();
        [
            r#"{"id":"expl","source_kind":"explanatory","entries":[
                {"headword":"онтология","definition":"Явная спецификация концептуализации."}]}"#,
            r#"{"id":"thes","source_kind":"thesaurus","entries":[
                {"headword":"ЭВМ","definition":"Электронная вычислительная машина.","synonyms":["компьютер"]}]}"#,
        ]
        .iter()
        .map(|t| Dictionary::from_json(t).unwrap().normalized(&a))
        .collect()
    }

    #[test]
    fn dictionary_headword_gives_interpretation() {
        let c = form_concepts(&[term("онтология", 3.0)], &dicts());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].interpretations.len(), 1);
        assert_eq!(c[0].interpretations[0].dictionary_id, "expl");
        assert_eq!(c[0].kind, ConceptKind::Object);
    }

    #[test]
    fn thesaurus_synonyms_share_a_concept() {
        let c = form_concepts(&[term("эвм", 1.0), term("компьютер", 2.0)], &dicts());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].synonyms.len(), 2);
        assert_eq!(c[0].label, "компьютер");
    }

    #[test]
    fn process_suffix_heuristic() {
        assert_eq!(ConceptKind::classify("индексация"), ConceptKind::Process);
        assert_eq!(ConceptKind::classify("построение"), ConceptKind::Process);
        assert_eq!(ConceptKind::classify("разработка"), ConceptKind::Process);
        assert_eq!(ConceptKind::classify("производство"), ConceptKind::Process);
        assert_eq!(ConceptKind::classify("предметный область"), ConceptKind::Object);
    }

    #[test]
    fn no_dictionaries_no_interpretations() {
        let c = form_concepts(&[term("граф", 1.0), term("онтология", 2.0)], &[]);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.interpretations.is_empty()));
    }

    #[test]
    fn grouping_is_a_partition() {
        let terms: Vec<Term> = ["эвм", "компьютер", "граф", "онтология", "узел"]
            .iter()
            .enumerate()
            .map(|(i, k)| term(k, i as f64))
            .collect();
        let c = form_concepts(&terms, &dicts());
        for t in &terms {
            let n = c.iter().filter(|c| c.synonyms.contains(&t.lemma_key)).count();
            assert_eq!(n, 1, "{}", t.lemma_key);
        }
        assert!(c.iter().all(|c| c.synonyms.contains(&c.label)));
    }
}
