use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{split_sentences, AnalysisConfig, Analyzer, Concept, Token, TokenKind};
use crate::corpus::Document;

pub const PATTERN_CONFIDENCE: f64 = 0.9;
pub const PMI_EVIDENCE: &str = "pmi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    IsA,
    PartOf,
    SynonymOf,
    AssociatedWith,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Evidence {
    pub doc_id: String,
    /// Byte span of the sentence in the document text.
    pub start: usize,
    pub end: usize,
    /// Pattern id, or `"pmi"` for co-occurrence edges.
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub source: String,
    pub target: String,
    pub rtype: RelationType,
    pub confidence: f64,
    pub evidence: Vec<Evidence>,
}

impl Relation {
    pub fn key(&self) -> (String, String, RelationType) {
        (self.source.clone(), self.target.clone(), self.rtype)
    }

    /// Fold another observation of the same edge into this one.
    pub fn absorb(&mut self, other: &Relation) {
        self.confidence = self.confidence.max(other.confidence);
        for e in &other.evidence {
            if !self.evidence.contains(e) {
                self.evidence.push(e.clone());
            }
        }
        self.evidence.sort();
    }
}

/// Which slot of a pattern is the relation source.
#[derive(Clone, Copy)]
enum Direction {
    LeftToRight,
    RightToLeft,
}

struct Pattern {
    id: &'static str,
    /// Each step matches one token surface from the alternatives.
    steps: &'static [&'static [&'static str]],
    /// Trailing steps that may be absent.
    optional_tail: &'static [&'static [&'static str]],
    rtype: RelationType,
    direction: Direction,
}

const PATTERNS: &[Pattern] = &[
    Pattern {
        id: "isa_dash",
        steps: &[&["–", "—", "-"], &["это"]],
        optional_tail: &[],
        rtype: RelationType::IsA,
        direction: Direction::LeftToRight,
    },
    Pattern {
        id: "isa_verb",
        steps: &[&["является", "являются", "являлся", "являлась"]],
        optional_tail: &[],
        rtype: RelationType::IsA,
        direction: Direction::LeftToRight,
    },
    Pattern {
        id: "such_as",
        steps: &[&[","], &["такой", "такая", "такое", "такие", "таких", "таким"], &["как"]],
        optional_tail: &[],
        rtype: RelationType::IsA,
        direction: Direction::RightToLeft,
    },
    Pattern {
        id: "consists_of",
        steps: &[&["состоит", "состоят"], &["из"]],
        optional_tail: &[],
        rtype: RelationType::PartOf,
        direction: Direction::RightToLeft,
    },
    Pattern {
        id: "includes",
        steps: &[&["включает", "включают"]],
        optional_tail: &[&["в"], &["себя"]],
        rtype: RelationType::PartOf,
        direction: Direction::RightToLeft,
    },
];

/// Lemma-key lookup of concept synonyms.
struct SynonymIndex<'a> {
    by_key: HashMap<&'a str, &'a str>,
    max_words: usize,
}

impl<'a> SynonymIndex<'a> {
    fn new(concepts: &'a [Concept]) -> Self {
        let mut by_key = HashMap::new();
        let mut max_words = 1;
        for c in concepts {
            for s in c.synonyms.iter().chain(std::iter::once(&c.label)) {
                by_key.entry(s.as_str()).or_insert(c.id.as_str());
                max_words = max_words.max(s.split(' ').count());
            }
        }
        SynonymIndex { by_key, max_words }
    }

    fn lookup(&self, words: &[&Token]) -> Option<&'a str> {
        let key = words
            .iter()
            .map(|t| t.lemma.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        self.by_key.get(key.as_str()).copied()
    }

    /// Longest concept phrase ending just before `end` (exclusive).
    fn match_ending_at(&self, tokens: &[Token], end: usize) -> Option<&'a str> {
        (1..=self.max_words.min(end)).rev().find_map(|n| {
            let slice = &tokens[end - n..end];
            if slice.iter().all(|t| t.kind == TokenKind::Word) {
                self.lookup(&slice.iter().collect::<Vec<_>>())
            } else {
                None
            }
        })
    }

    /// Longest concept phrase starting at `start`.
    fn match_starting_at(&self, tokens: &[Token], start: usize) -> Option<&'a str> {
        let avail = tokens.len().saturating_sub(start);
        (1..=self.max_words.min(avail)).rev().find_map(|n| {
            let slice = &tokens[start..start + n];
            if slice.iter().all(|t| t.kind == TokenKind::Word) {
                self.lookup(&slice.iter().collect::<Vec<_>>())
            } else {
                None
            }
        })
    }

    /// Every concept mentioned anywhere in the tokens.
    fn mentions(&self, tokens: &[Token]) -> BTreeSet<&'a str> {
        let mut out = BTreeSet::new();
        for run in tokens.split(|t| t.kind != TokenKind::Word) {
            for i in 0..run.len() {
                for n in 1..=self.max_words.min(run.len() - i) {
                    if let Some(id) = self.lookup(&run[i..i + n].iter().collect::<Vec<_>>()) {
                        out.insert(id);
                    }
                }
            }
        }
        out
    }
}

fn match_steps(tokens: &[Token], at: usize, steps: &[&[&str]]) -> Option<usize> {
    let mut i = at;
    for alts in steps {
        let t = tokens.get(i)?;
        if !alts.contains(&t.surface.as_str()) {
            return None;
        }
        i += 1;
    }
    Some(i)
}

struct SentenceFacts<'a> {
    evidence: Evidence,
    mentions: BTreeSet<&'a str>,
    hits: Vec<(String, String, RelationType, &'static str)>,
}

fn analyze_document<'a>(
    doc: &Document,
    synonyms: &SynonymIndex<'a>,
    analyzer: &Analyzer,
) -> Vec<SentenceFacts<'a>> {
    split_sentences(&doc.text)
        .into_iter()
        .map(|(start, end)| {
            let tokens = analyzer.analyze(&doc.text[start..end]);
            let mut hits = Vec::new();
            for i in 0..tokens.len() {
                for p in PATTERNS {
                    let Some(mut after) = match_steps(&tokens, i, p.steps) else {
                        continue;
                    };
                    if let Some(j) = match_steps(&tokens, after, p.optional_tail) {
                        after = j;
                    }
                    let (Some(left), Some(right)) = (
                        synonyms.match_ending_at(&tokens, i),
                        synonyms.match_starting_at(&tokens, after),
                    ) else {
                        continue;
                    };
                    let (source, target) = match p.direction {
                        Direction::LeftToRight => (left, right),
                        Direction::RightToLeft => (right, left),
                    };
                    if source != target {
                        hits.push((source.to_string(), target.to_string(), p.rtype, p.id));
                    }
                }
            }
            SentenceFacts {
                evidence: Evidence {
                    doc_id: doc.id.clone(),
                    start,
                    end,
                    pattern: String::new(),
                },
                mentions: synonyms.mentions(&tokens),
                hits,
            }
        })
        .collect()
}

/// Extract typed relations between known concepts.
///
/// A pattern pass emits `is_a` / `part_of` edges when both slots of a
/// lexico-syntactic pattern are concept phrases. A co-occurrence pass emits
/// `associated_with` for concept pairs whose sentence-level PMI reaches
/// `pmi_min`. Repeated edges are merged.
pub fn extract_relations(
    docs: &[Document],
    concepts: &[Concept],
    analyzer: &Analyzer,
    config: &AnalysisConfig,
) -> Vec<Relation> {
    if concepts.is_empty() {
        return Vec::new();
    }
    let synonyms = SynonymIndex::new(concepts);
    let per_doc: Vec<Vec<SentenceFacts>> = docs
        .par_iter()
        .map(|d| analyze_document(d, &synonyms, analyzer))
        .collect();

    let mut edges: BTreeMap<(String, String, RelationType), Relation> = BTreeMap::new();
    let mut add = |rel: Relation| match edges.get_mut(&rel.key()) {
        Some(existing) => existing.absorb(&rel),
        None => {
            edges.insert(rel.key(), rel);
        }
    };

    let mut n_sentences = 0usize;
    let mut single: BTreeMap<&str, usize> = BTreeMap::new();
    let mut pairs: BTreeMap<(&str, &str), Vec<Evidence>> = BTreeMap::new();
    for facts in per_doc.iter().flatten() {
        n_sentences += 1;
        for (source, target, rtype, pattern) in &facts.hits {
            add(Relation {
                source: source.clone(),
                target: target.clone(),
                rtype: *rtype,
                confidence: PATTERN_CONFIDENCE,
                evidence: vec![Evidence {
                    pattern: pattern.to_string(),
                    ..facts.evidence.clone()
                }],
            });
        }
        for &a in &facts.mentions {
            *single.entry(a).or_default() += 1;
        }
        let ids: Vec<&str> = facts.mentions.iter().copied().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                pairs.entry((a, b)).or_default().push(Evidence {
                    pattern: PMI_EVIDENCE.to_string(),
                    ..facts.evidence.clone()
                });
            }
        }
    }

    for ((a, b), evidence) in pairs {
        if evidence.len() < config.min_cooccurrence.max(1) {
            continue;
        }
        let pmi = pmi(evidence.len(), single[a], single[b], n_sentences);
        if pmi < config.pmi_min {
            continue;
        }
        add(Relation {
            source: a.to_string(),
            target: b.to_string(),
            rtype: RelationType::AssociatedWith,
            confidence: (pmi / config.pmi_cap).clamp(0.0, 1.0),
            evidence,
        });
    }

    edges.into_values().collect()
}

/// `log2(P(a,b) / (P(a) P(b)))` with probabilities over sentences.
pub(crate) fn pmi(joint: usize, a: usize, b: usize, n: usize) -> f64 {
    ((joint as f64 * n as f64) / (a as f64 * b as f64)).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;
    use crate::linganalysis::Concept;

    fn concepts(labels: &[&str]) -> Vec<Concept> {
        labels.iter().map(|l| Concept::named(l)).collect()
    }

    fn doc(text: &str) -> Document {
        Document::with_id("d1", text, Language::Ru)
    }

    fn run(text: &str, labels: &[&str]) -> Vec<Relation> {
        extract_relations(
            &[doc(text)],
            &concepts(labels),
            &Analyzer::builtin(),
            &AnalysisConfig::default(),
        )
    }

    fn pattern_edges(rels: &[Relation]) -> Vec<(String, String, RelationType)> {
        rels.iter()
            .filter(|r| r.rtype != RelationType::AssociatedWith)
            .map(Relation::key)
            .collect()
    }

    #[test]
    fn is_a_by_verb() {
        let rels = run("Онтология является спецификацией.", &["онтология", "спецификация"]);
        assert_eq!(
            pattern_edges(&rels),
            vec![("онтология".into(), "спецификация".into(), RelationType::IsA)]
        );
        let r = &rels[0];
        assert_eq!(r.confidence, PATTERN_CONFIDENCE);
        assert_eq!(r.evidence[0].pattern, "isa_verb");
        assert_eq!((r.evidence[0].start, r.evidence[0].end), (0, doc("Онтология является спецификацией.").text.len()));
    }

    #[test]
    fn is_a_by_dash() {
        let rels = run("Тезаурус – это словарь.", &["тезаурус", "словарь"]);
        assert_eq!(
            pattern_edges(&rels),
            vec![("тезаурус".into(), "словарь".into(), RelationType::IsA)]
        );
    }

    #[test]
    fn such_as_reverses_direction() {
        let rels = run("Словари, такие как тезаурус, полезны.", &["тезаурус", "словарь"]);
        assert_eq!(
            pattern_edges(&rels),
            vec![("тезаурус".into(), "словарь".into(), RelationType::IsA)]
        );
    }

    #[test]
    fn part_of_patterns() {
        let rels = run(
            "Онтология состоит из понятий. Система включает в себя модуль.",
            &["онтология", "понятие", "система", "модуль"],
        );
        let edges = pattern_edges(&rels);
        assert!(edges.contains(&("понятие".into(), "онтология".into(), RelationType::PartOf)));
        assert!(edges.contains(&("модуль".into(), "система".into(), RelationType::PartOf)));
    }

    #[test]
    fn unknown_slot_yields_nothing() {
        let rels = run("Онтология является спецификацией.", &["онтология"]);
        assert!(rels.is_empty());
    }

    #[test]
    fn multiword_slot_prefers_longest_match() {
        let rels = run(
            "Онтология является моделью предметной области.",
            &["онтология", "модель", "модель предметный область"],
        );
        let edges = pattern_edges(&rels);
        assert_eq!(
            edges,
            vec![(
                "онтология".into(),
                "модель предметный область".into(),
                RelationType::IsA
            )]
        );
    }

    #[test]
    fn pmi_threshold() {
        // граф and узел co-occur in 2 of 6 sentences, each appearing only there: PMI = log2(3)
        let text = "Граф узел. Граф узел. Дерево лист. Дерево лист. Сеть. Сеть.";
        let labels = ["граф", "узел", "дерево", "лист", "сеть"];
        let rels = run(text, &labels);
        let assoc: Vec<_> = rels
            .iter()
            .filter(|r| r.rtype == RelationType::AssociatedWith)
            .collect();
        assert!(assoc.is_empty(), "log2(3) < 2.0 must not pass");

        let cfg = AnalysisConfig {
            pmi_min: 1.5,
            ..AnalysisConfig::default()
        };
        let rels = extract_relations(&[doc(text)], &concepts(&labels), &Analyzer::builtin(), &cfg);
        let assoc: Vec<_> = rels
            .iter()
            .filter(|r| r.rtype == RelationType::AssociatedWith)
            .collect();
        assert_eq!(assoc.len(), 2);
        let expected = (3f64.log2() / 8.0).min(1.0);
        assert!((assoc[0].confidence - expected).abs() < 1e-12);
        assert_eq!(assoc[0].evidence.len(), 2);
    }

    #[test]
    fn duplicates_merge_evidence() {
        let rels = run(
            "Онтология является спецификацией. Онтология является спецификацией.",
            &["онтология", "спецификация"],
        );
        let isa: Vec<_> = rels.iter().filter(|r| r.rtype == RelationType::IsA).collect();
        assert_eq!(isa.len(), 1);
        assert_eq!(isa[0].evidence.len(), 2);
    }
}
