use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{check_consistency, push_unique, OntologyError, Ontograph, Ontology, Provenance, Result, Status};
use crate::linganalysis::{Analyzer, Concept, Relation, RelationType, Thesaurus};

/// How node identity is decided when graphs are combined.
#[derive(Debug, Clone, Copy)]
pub struct MergeContext<'a> {
    pub analyzer: &'a Analyzer,
    pub thesaurus: &'a Thesaurus,
}

impl MergeContext<'_> {
    /// Lemma key of the label, mapped to its thesaurus class representative.
    pub fn identity_key(&self, label: &str) -> String {
        let key = self.analyzer.lemma_key(label);
        let key = if key.is_empty() { label.to_lowercase() } else { key };
        self.thesaurus.canonical(&key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlagKind {
    /// Two graphs disagree on a concept's kind; the earlier one is kept.
    KindConflict,
    /// An `is_a` edge would close a cycle and was dropped.
    IsaCycleDropped,
    /// An edge would make a pair both synonyms and `is_a`-related; dropped.
    SynonymConflictDropped,
    /// Both endpoints collapsed into one node; the edge was dropped.
    SelfLoopDropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeFlag {
    pub kind: FlagKind,
    /// Position of the input graph the flagged item came from.
    pub graph: usize,
    /// Node id or `source -rtype-> target`.
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub graph: Ontograph,
    pub flags: Vec<MergeFlag>,
}

fn reaches_isa(g: &Ontograph, from: &str, to: &str) -> bool {
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (s, t, r) in g.edges.keys() {
        if *r == RelationType::IsA {
            children.entry(s).or_default().push(t);
        }
    }
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        for &c in children.get(n).into_iter().flatten() {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    false
}

/// Why an edge may not join `g`, if it may not.
fn edge_conflict(g: &Ontograph, s: &str, t: &str, rtype: RelationType) -> Option<FlagKind> {
    if s == t {
        return Some(FlagKind::SelfLoopDropped);
    }
    if g.has_edge(s, t, rtype) {
        return None;
    }
    let linked = |r| g.has_edge(s, t, r) || g.has_edge(t, s, r);
    match rtype {
        RelationType::IsA if linked(RelationType::SynonymOf) => Some(FlagKind::SynonymConflictDropped),
        RelationType::IsA if reaches_isa(g, t, s) => Some(FlagKind::IsaCycleDropped),
        RelationType::SynonymOf if linked(RelationType::IsA) => Some(FlagKind::SynonymConflictDropped),
        _ => None,
    }
}

fn merge_node(into: &mut Concept, other: &Concept, graph: usize, flags: &mut Vec<MergeFlag>) {
    if into.kind != other.kind {
        flags.push(MergeFlag {
            kind: FlagKind::KindConflict,
            graph,
            subject: into.id.clone(),
        });
    }
    into.synonyms.insert(other.label.clone());
    into.synonyms.extend(other.synonyms.iter().cloned());
    into.provenance.extend(other.provenance.iter().cloned());
    push_unique(&mut into.interpretations, other.interpretations.iter().cloned());
    into.score = into.score.max(other.score);
    into.occurrences.extend(other.occurrences.iter().cloned());
    into.occurrences.sort();
    into.occurrences.dedup();
}

/// Fold `g` into `acc`; returns the map from `g`'s node ids to `acc` ids.
fn fold_into(
    acc: &mut Ontograph,
    g: &Ontograph,
    graph: usize,
    ctx: &MergeContext<'_>,
    flags: &mut Vec<MergeFlag>,
) -> BTreeMap<String, String> {
    let mut remap = BTreeMap::new();
    for (id, node) in &g.nodes {
        let key = ctx.identity_key(&node.label);
        remap.insert(id.clone(), key.clone());
        match acc.nodes.get_mut(&key) {
            Some(existing) => merge_node(existing, node, graph, flags),
            None => {
                let mut fresh = node.clone();
                fresh.id = key.clone();
                fresh.synonyms.insert(node.label.clone());
                acc.nodes.insert(key, fresh);
            }
        }
    }
    for rel in g.edges.values() {
        let (Some(s), Some(t)) = (remap.get(&rel.source), remap.get(&rel.target)) else {
            continue;
        };
        if let Some(kind) = edge_conflict(acc, s, t, rel.rtype) {
            flags.push(MergeFlag {
                kind,
                graph,
                subject: format!("{s} -{:?}-> {t}", rel.rtype),
            });
            continue;
        }
        acc.add_edge(Relation {
            source: s.clone(),
            target: t.clone(),
            ..rel.clone()
        });
    }
    debug_assert!(check_consistency(acc).consistent, "merge guard let an inconsistency through");
    remap
}

/// Left fold of the graphs into one.
///
/// Nodes are identified by [`MergeContext::identity_key`] of their label;
/// merged nodes union synonyms, provenance, definitions and occurrences.
/// Parallel edges keep the highest confidence and all evidence. Edges that
/// would introduce an `is_a` cycle, a synonym/`is_a` clash or a self-loop are
/// dropped and flagged, so the result is always consistent.
pub fn merge_ontographs(graphs: &[Ontograph], ctx: &MergeContext<'_>) -> Result<MergeOutcome> {
    for (index, g) in graphs.iter().enumerate() {
        let report = check_consistency(g);
        if !report.consistent {
            return Err(OntologyError::InconsistentInput { index, report });
        }
    }
    let mut acc = Ontograph::new(Provenance::Merged);
    let mut flags = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        fold_into(&mut acc, g, i, ctx, &mut flags);
    }
    Ok(MergeOutcome { graph: acc, flags })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindOutcome {
    pub ontology: Ontology,
    /// Flags with `graph` 0 concern the initial ontology, 1 the merged graph.
    pub flags: Vec<MergeFlag>,
    /// Weakly connected components when there is more than one, else empty.
    pub components: Vec<Vec<String>>,
}

/// Attach the merged document graph to the initial ontology.
///
/// The initial ontology goes in first, so on any edge conflict its edge is
/// the one that survives. Definitions are unioned per concept, initial
/// ones first.
pub fn bind_to_initial(merged: &Ontograph, initial: &Ontology, ctx: &MergeContext<'_>) -> BindOutcome {
    let mut acc = Ontograph::new(Provenance::Bound);
    let mut flags = Vec::new();
    let remap = fold_into(&mut acc, &initial.ontograph, 0, ctx, &mut flags);
    fold_into(&mut acc, merged, 1, ctx, &mut flags);

    let mut interpretations: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for (id, defs) in &initial.interpretations {
        if let Some(key) = remap.get(id) {
            push_unique(interpretations.entry(key.clone()).or_default(), defs.iter().cloned());
        }
    }
    for (id, node) in &mut acc.nodes {
        let defs = std::mem::take(&mut node.interpretations);
        if !defs.is_empty() {
            push_unique(interpretations.entry(id.clone()).or_default(), defs);
        }
    }
    let components = acc.components();
    let components = if components.len() > 1 { components } else { Vec::new() };
    BindOutcome {
        ontology: Ontology {
            ontograph: acc,
            interpretations,
            status: Status::Draft,
        },
        flags,
        components,
    }
}
