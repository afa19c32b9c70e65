//! Ontographs, ontologies and the operations that build, check, merge and
//! verify them.

mod consistency;
mod exchange;
mod merge;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use consistency::{check_consistency, ConsistencyReport, Finding, FindingKind};
pub use exchange::{ExchangeDocument, EXCHANGE_FORMAT};
pub use merge::{bind_to_initial, merge_ontographs, BindOutcome, FlagKind, MergeContext, MergeFlag, MergeOutcome};

use crate::corpus::Corpus;
use crate::linganalysis::{Analyzer, Concept, Dictionary, Interpretation, Relation, RelationType};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("NO_INITIAL_ONTOLOGY: the project has no initial ontograph")]
    NoInitialOntology,
    #[error("UNKNOWN_DOCUMENT: {0}")]
    UnknownDocument(String),
    #[error("INCONSISTENT_INPUT: graph {index} is inconsistent ({} findings)", report.findings.len())]
    InconsistentInput { index: usize, report: ConsistencyReport },
    #[error("VERIFICATION_BLOCKED: the ontograph is inconsistent ({} findings)", report.findings.len())]
    VerificationBlocked { report: ConsistencyReport },
    #[error("INVALID_STATE: expected {expected}, found {actual}")]
    InvalidState { expected: Status, actual: Status },
    #[error("INVALID_DOCUMENT: {0}")]
    InvalidDocument(String),
    #[error("DIGEST_MISMATCH: document says {stated}, content hashes to {actual}")]
    DigestMismatch { stated: String, actual: String },
}

impl OntologyError {
    pub fn code(&self) -> &'static str {
        match self {
            OntologyError::NoInitialOntology => "NO_INITIAL_ONTOLOGY",
            OntologyError::UnknownDocument(_) => "UNKNOWN_DOCUMENT",
            OntologyError::InconsistentInput { .. } => "INCONSISTENT_INPUT",
            OntologyError::VerificationBlocked { .. } => "VERIFICATION_BLOCKED",
            OntologyError::InvalidState { .. } => "INVALID_STATE",
            OntologyError::InvalidDocument(_) => "INVALID_DOCUMENT",
            OntologyError::DigestMismatch { .. } => "DIGEST_MISMATCH",
        }
    }
}

pub type Result<T, E = OntologyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Document,
    Merged,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Draft,
    UnderVerification,
    Verified,
    Rejected,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Draft => "draft",
            Status::UnderVerification => "under_verification",
            Status::Verified => "verified",
            Status::Rejected => "rejected",
        })
    }
}

pub type EdgeKey = (String, String, RelationType);

/// Concept graph: nodes by id, at most one edge per `(source, target, type)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontograph {
    pub nodes: BTreeMap<String, Concept>,
    pub edges: BTreeMap<EdgeKey, Relation>,
    pub provenance: Provenance,
}

impl Ontograph {
    pub fn new(provenance: Provenance) -> Self {
        Ontograph {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            provenance,
        }
    }

    pub fn add_node(&mut self, concept: Concept) {
        self.nodes.insert(concept.id.clone(), concept);
    }

    /// Insert an edge, folding it into an existing parallel edge.
    pub fn add_edge(&mut self, relation: Relation) {
        match self.edges.get_mut(&relation.key()) {
            Some(e) => e.absorb(&relation),
            None => {
                self.edges.insert(relation.key(), relation);
            }
        }
    }

    /// Remove a node and every edge touching it.
    pub fn remove_node(&mut self, id: &str) -> Option<Concept> {
        let removed = self.nodes.remove(id)?;
        self.edges.retain(|(s, t, _), _| s != id && t != id);
        Some(removed)
    }

    pub fn has_edge(&self, source: &str, target: &str, rtype: RelationType) -> bool {
        self.edges
            .contains_key(&(source.to_string(), target.to_string(), rtype))
    }

    /// Weakly connected components, each sorted, ordered by first member.
    pub fn components(&self) -> Vec<Vec<String>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self.nodes.keys().map(|k| (k.as_str(), vec![])).collect();
        for (s, t, _) in self.edges.keys() {
            if self.nodes.contains_key(s) && self.nodes.contains_key(t) {
                adj.get_mut(s.as_str()).expect("node").push(t);
                adj.get_mut(t.as_str()).expect("node").push(s);
            }
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in adj.keys() {
            if !seen.insert(*start) {
                continue;
            }
            let mut comp = vec![start.to_string()];
            let mut stack = vec![*start];
            while let Some(n) = stack.pop() {
                for &m in &adj[n] {
                    if seen.insert(m) {
                        comp.push(m.to_string());
                        stack.push(m);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }
}

/// An ontograph with its interpretation functions: attributed definitions
/// per concept.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    pub ontograph: Ontograph,
    pub interpretations: BTreeMap<String, Vec<Interpretation>>,
    pub status: Status,
}

impl Ontology {
    /// Wrap a graph, moving the definitions carried on its nodes into the
    /// interpretation map.
    pub fn from_graph(mut ontograph: Ontograph, status: Status) -> Ontology {
        let mut interpretations = BTreeMap::new();
        for (id, node) in &mut ontograph.nodes {
            let defs = std::mem::take(&mut node.interpretations);
            if !defs.is_empty() {
                interpretations.insert(id.clone(), defs);
            }
        }
        Ontology {
            ontograph,
            interpretations,
            status,
        }
    }

    /// Interpretation keys naming no node.
    pub fn dangling_interpretations(&self) -> Vec<&str> {
        self.interpretations
            .keys()
            .filter(|k| !self.ontograph.nodes.contains_key(*k))
            .map(String::as_str)
            .collect()
    }

    pub fn is_defined(&self, id: &str) -> bool {
        self.interpretations.get(id).is_some_and(|v| !v.is_empty())
    }
}

fn push_unique(list: &mut Vec<Interpretation>, items: impl IntoIterator<Item = Interpretation>) {
    for i in items {
        if !list.contains(&i) {
            list.push(i);
        }
    }
}

/// Definitions for a concept from normalized dictionaries: the label first,
/// then the synonyms, each tried verbatim and as a lemma key.
pub fn lookup_interpretations(concept: &Concept, dictionaries: &[Dictionary], analyzer: &Analyzer) -> Vec<Interpretation> {
    let mut keys: Vec<String> = Vec::new();
    for k in std::iter::once(&concept.label).chain(concept.synonyms.iter()) {
        for candidate in [k.clone(), analyzer.lemma_key(k)] {
            if !candidate.is_empty() && !keys.contains(&candidate) {
                keys.push(candidate);
            }
        }
    }
    let mut out = Vec::new();
    for key in &keys {
        for d in dictionaries {
            push_unique(
                &mut out,
                d.lookup(key).map(|e| Interpretation {
                    dictionary_id: d.id.clone(),
                    definition: e.definition.clone(),
                }),
            );
        }
    }
    out
}

/// Turn a stored initial ontograph into a draft ontology with definitions
/// fetched from the dictionaries.
pub fn load_initial_ontology(
    initial: Option<&Ontograph>,
    dictionaries: &[Dictionary],
    analyzer: &Analyzer,
) -> Result<Ontology> {
    let graph = initial.ok_or(OntologyError::NoInitialOntology)?;
    let mut ontology = Ontology::from_graph(graph.clone(), Status::Draft);
    for (id, node) in &ontology.ontograph.nodes {
        let found = lookup_interpretations(node, dictionaries, analyzer);
        if !found.is_empty() {
            push_unique(ontology.interpretations.entry(id.clone()).or_default(), found);
        }
    }
    Ok(ontology)
}

/// Subgraph evidenced by one document: concepts occurring in it and
/// relations with evidence from it (restricted to that evidence).
pub fn build_document_ontograph(
    doc_id: &str,
    corpus: &Corpus,
    concepts: &[Concept],
    relations: &[Relation],
) -> Result<Ontograph> {
    if !corpus.doc_ids.iter().any(|d| d == doc_id) {
        return Err(OntologyError::UnknownDocument(doc_id.to_string()));
    }
    let mut g = Ontograph::new(Provenance::Document);
    for c in concepts.iter().filter(|c| c.occurs_in(doc_id)) {
        let mut node = c.clone();
        node.occurrences.retain(|(d, _)| d == doc_id);
        g.add_node(node);
    }
    for r in relations {
        if !(g.nodes.contains_key(&r.source) && g.nodes.contains_key(&r.target)) {
            continue;
        }
        let evidence: Vec<_> = r.evidence.iter().filter(|e| e.doc_id == doc_id).cloned().collect();
        if !evidence.is_empty() {
            g.add_edge(Relation {
                evidence,
                ..r.clone()
            });
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompletenessReport {
    /// Concepts still without any interpretation.
    pub missing: Vec<String>,
    /// `(concept id, dictionary id)` for every definition added.
    pub filled: Vec<(String, String)>,
    /// Concepts found in no dictionary.
    pub unresolved: Vec<String>,
}

/// Fill in definitions for concepts that have none.
pub fn analyze_interpretation_completeness(
    ontology: &Ontology,
    dictionaries: &[Dictionary],
    analyzer: &Analyzer,
) -> (Ontology, CompletenessReport) {
    let mut out = ontology.clone();
    let mut report = CompletenessReport::default();
    for (id, node) in &ontology.ontograph.nodes {
        if ontology.is_defined(id) {
            continue;
        }
        let found = lookup_interpretations(node, dictionaries, analyzer);
        if found.is_empty() {
            report.unresolved.push(id.clone());
            report.missing.push(id.clone());
            continue;
        }
        for i in &found {
            let pair = (id.clone(), i.dictionary_id.clone());
            if !report.filled.contains(&pair) {
                report.filled.push(pair);
            }
        }
        push_unique(out.interpretations.entry(id.clone()).or_default(), found);
    }
    (out, report)
}

/// Move a draft to verification.
pub fn submit_for_verification(ontology: &Ontology) -> Result<Ontology> {
    if ontology.status != Status::Draft {
        return Err(OntologyError::InvalidState {
            expected: Status::Draft,
            actual: ontology.status,
        });
    }
    Ok(Ontology {
        status: Status::UnderVerification,
        ..ontology.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Approve,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub actor: String,
    pub verdict: Verdict,
    pub timestamp: DateTime<Utc>,
    /// Exchange-document digest of the graph that was judged.
    pub digest: String,
    #[serde(default)]
    pub comment: String,
}

/// Record a human verdict on an ontology under verification.
pub fn verify_ontograph(
    ontology: &Ontology,
    verdict: Verdict,
    actor: &str,
    comment: &str,
) -> Result<(Ontology, AuditRecord)> {
    if ontology.status != Status::UnderVerification {
        return Err(OntologyError::InvalidState {
            expected: Status::UnderVerification,
            actual: ontology.status,
        });
    }
    if verdict == Verdict::Approve {
        let report = check_consistency(&ontology.ontograph);
        if !report.consistent {
            return Err(OntologyError::VerificationBlocked { report });
        }
    }
    let status = match verdict {
        Verdict::Approve => Status::Verified,
        Verdict::Reject => Status::Rejected,
    };
    let audit = AuditRecord {
        actor: actor.to_string(),
        verdict,
        timestamp: Utc::now(),
        digest: ExchangeDocument::from_ontology(ontology).digest,
        comment: comment.to_string(),
    };
    Ok((
        Ontology {
            status,
            ..ontology.clone()
        },
        audit,
    ))
}
