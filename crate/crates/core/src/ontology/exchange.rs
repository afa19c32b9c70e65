use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{OntologyError, Ontograph, Ontology, Provenance, Result, Status};
use crate::digest::sha256_hex;
use crate::linganalysis::{Concept, Interpretation, Relation};

pub const EXCHANGE_FORMAT: &str = "icon-ontology/1";

/// The JSON interchange form of an ontology.
///
/// `digest` is the SHA-256 of the compact JSON serialization of the same
/// document with `digest` set to the empty string. Nodes are in id order,
/// edges in `(source, target, rtype)` order, so equal ontologies always
/// serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeDocument {
    pub format: String,
    pub provenance: Provenance,
    pub status: Status,
    pub nodes: Vec<Concept>,
    pub edges: Vec<Relation>,
    #[serde(default)]
    pub interpretations: BTreeMap<String, Vec<Interpretation>>,
    #[serde(default)]
    pub digest: String,
}

impl ExchangeDocument {
    pub fn from_ontology(o: &Ontology) -> ExchangeDocument {
        let mut doc = ExchangeDocument {
            format: EXCHANGE_FORMAT.to_string(),
            provenance: o.ontograph.provenance,
            status: o.status,
            nodes: o.ontograph.nodes.values().cloned().collect(),
            edges: o.ontograph.edges.values().cloned().collect(),
            interpretations: o.interpretations.clone(),
            digest: String::new(),
        };
        doc.digest = doc.compute_digest();
        doc
    }

    pub fn compute_digest(&self) -> String {
        let unsigned = ExchangeDocument {
            digest: String::new(),
            ..self.clone()
        };
        sha256_hex(&serde_json::to_vec(&unsigned).expect("exchange document serializes"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("exchange document serializes")
    }

    /// Parse and check format and, when present, the digest.
    pub fn parse(text: &str) -> Result<ExchangeDocument> {
        let doc: ExchangeDocument =
            serde_json::from_str(text).map_err(|e| OntologyError::InvalidDocument(e.to_string()))?;
        if doc.format != EXCHANGE_FORMAT {
            return Err(OntologyError::InvalidDocument(format!(
                "unsupported format {:?}",
                doc.format
            )));
        }
        if !doc.digest.is_empty() {
            let actual = doc.compute_digest();
            if actual != doc.digest {
                return Err(OntologyError::DigestMismatch {
                    stated: doc.digest,
                    actual,
                });
            }
        }
        Ok(doc)
    }

    /// Rebuild the ontology. Node ids and edge keys must be unique and every
    /// interpretation must name a node; dangling edges are kept as they are
    /// (the consistency check reports them).
    pub fn into_ontology(self) -> Result<Ontology> {
        let mut graph = Ontograph::new(self.provenance);
        for n in self.nodes {
            if graph.nodes.contains_key(&n.id) {
                return Err(OntologyError::InvalidDocument(format!("duplicate node {:?}", n.id)));
            }
            graph.add_node(n);
        }
        for e in self.edges {
            if graph.edges.contains_key(&e.key()) {
                return Err(OntologyError::InvalidDocument(format!(
                    "duplicate edge {} -> {}",
                    e.source, e.target
                )));
            }
            if !(0.0..=1.0).contains(&e.confidence) {
                return Err(OntologyError::InvalidDocument(format!(
                    "confidence {} out of range",
                    e.confidence
                )));
            }
            graph.edges.insert(e.key(), e);
        }
        if let Some(k) = self.interpretations.keys().find(|k| !graph.nodes.contains_key(*k)) {
            return Err(OntologyError::InvalidDocument(format!(
                "interpretations for unknown node {k:?}"
            )));
        }
        Ok(Ontology {
            ontograph: graph,
            interpretations: self.interpretations,
            status: self.status,
        })
    }
}

impl Ontology {
    pub fn to_exchange_json(&self) -> String {
        ExchangeDocument::from_ontology(self).to_json()
    }

    pub fn from_exchange_json(text: &str) -> Result<Ontology> {
        ExchangeDocument::parse(text)?.into_ontology()
    }

    pub fn digest(&self) -> String {
        ExchangeDocument::from_ontology(self).digest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linganalysis::{Concept, RelationType};
    use crate::ontology::tests::edge;

    fn sample() -> Ontology {
        let mut g = Ontograph::new(Provenance::Bound);
        let mut a = Concept::named("онтология");
        a.score = 0.1 + 0.2;
        a.occurrences = vec![("d1".into(), 3)];
        g.add_node(a);
        g.add_node(Concept::named("спецификация"));
        g.add_edge(edge("онтология", "спецификация", RelationType::IsA, 1.0 / 3.0));
        let mut o = Ontology::from_graph(g, Status::Draft);
        o.interpretations.insert(
            "онтология".into(),
            vec![Interpretation {
                dictionary_id: "expl".into(),
                definition: "Формальное описание.".into(),
            }],
        );
        o
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let o = sample();
        let json = o.to_exchange_json();
        let back = Ontology::from_exchange_json(&json).unwrap();
        assert_eq!(back, o);
        assert_eq!(back.to_exchange_json(), json);
        assert_eq!(back.digest(), o.digest());
    }

    #[test]
    fn tampering_is_detected() {
        let json = sample().to_exchange_json().replace("Формальное", "Неформальное");
        assert_eq!(
            Ontology::from_exchange_json(&json).unwrap_err().code(),
            "DIGEST_MISMATCH"
        );
    }

    #[test]
    fn unsigned_documents_are_accepted() {
        let mut doc = ExchangeDocument::from_ontology(&sample());
        doc.digest.clear();
        let o = Ontology::from_exchange_json(&doc.to_json()).unwrap();
        assert_eq!(o, sample());
    }

    #[test]
    fn bad_references_are_rejected() {
        let mut doc = ExchangeDocument::from_ontology(&sample());
        doc.digest.clear();
        doc.interpretations.insert("nobody".into(), vec![]);
        assert_eq!(
            ExchangeDocument::parse(&doc.to_json()).unwrap().into_ontology().unwrap_err().code(),
            "INVALID_DOCUMENT"
        );
        let wrong_format = sample().to_exchange_json().replace(EXCHANGE_FORMAT, "other/9");
        assert_eq!(
            Ontology::from_exchange_json(&wrong_format).unwrap_err().code(),
            "INVALID_DOCUMENT"
        );
    }
}
