use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Ontograph;
use crate::linganalysis::RelationType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    IsaCycle,
    MutualIsa,
    DanglingEdge,
    SynonymIsaConflict,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRef {
    pub source: String,
    pub target: String,
    pub rtype: RelationType,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// Nodes involved, sorted.
    pub nodes: Vec<String>,
    /// Edges involved, sorted.
    pub edges: Vec<EdgeRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub findings: Vec<Finding>,
}

impl ConsistencyReport {
    pub fn of_kind(&self, kind: FindingKind) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.kind == kind)
    }

    /// Every node lying on an `is_a` cycle, self-loops included.
    pub fn cyclic_nodes(&self) -> BTreeSet<&str> {
        self.findings
            .iter()
            .filter(|f| matches!(f.kind, FindingKind::IsaCycle | FindingKind::MutualIsa))
            .flat_map(|f| f.nodes.iter().map(String::as_str))
            .collect()
    }
}

fn edge_ref(s: &str, t: &str, rtype: RelationType) -> EdgeRef {
    EdgeRef {
        source: s.to_string(),
        target: t.to_string(),
        rtype,
    }
}

/// Strongly connected components of a directed graph given as adjacency
/// lists over `0..n` (iterative Tarjan).
pub(crate) fn strongly_connected(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, next child to visit)
        let mut work = vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = work.last_mut() {
            if let Some(&w) = adj[v].get(*child) {
                *child += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}

/// Check an ontograph for `is_a` cycles, dangling edges and pairs linked
/// both by `synonym_of` and `is_a`.
///
/// Two nodes that are each other's `is_a` parent yield one `MUTUAL_ISA`
/// finding. Every other `is_a` cycle is reported once per strongly
/// connected component of three or more nodes, and once per self-loop, as
/// `ISA_CYCLE`.
pub fn check_consistency(graph: &Ontograph) -> ConsistencyReport {
    let mut findings = Vec::new();
    for (s, t, rtype) in graph.edges.keys() {
        if !graph.nodes.contains_key(s) || !graph.nodes.contains_key(t) {
            let nodes: BTreeSet<String> = [s, t]
                .into_iter()
                .filter(|n| !graph.nodes.contains_key(*n))
                .cloned()
                .collect();
            findings.push(Finding {
                kind: FindingKind::DanglingEdge,
                nodes: nodes.into_iter().collect(),
                edges: vec![edge_ref(s, t, *rtype)],
            });
        }
    }

    let ids: Vec<&str> = graph.nodes.keys().map(String::as_str).collect();
    let pos: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    let isa: Vec<(usize, usize)> = graph
        .edges
        .keys()
        .filter(|(_, _, r)| *r == RelationType::IsA)
        .filter_map(|(s, t, _)| Some((*pos.get(s.as_str())?, *pos.get(t.as_str())?)))
        .collect();
    for &(s, t) in &isa {
        adj[s].push(t);
    }

    for (i, j) in &isa {
        if i < j && adj[*j].contains(i) {
            findings.push(Finding {
                kind: FindingKind::MutualIsa,
                nodes: vec![ids[*i].to_string(), ids[*j].to_string()],
                edges: vec![
                    edge_ref(ids[*i], ids[*j], RelationType::IsA),
                    edge_ref(ids[*j], ids[*i], RelationType::IsA),
                ],
            });
        }
    }

    for comp in strongly_connected(&adj) {
        if comp.len() <= 2 {
            // pairs are covered by MUTUAL_ISA; self-loops still need a finding
            for &v in comp.iter().filter(|&&v| adj[v].contains(&v)) {
                findings.push(Finding {
                    kind: FindingKind::IsaCycle,
                    nodes: vec![ids[v].to_string()],
                    edges: vec![edge_ref(ids[v], ids[v], RelationType::IsA)],
                });
            }
            continue;
        }
        let members: BTreeSet<usize> = comp.iter().copied().collect();
        let mut edges: Vec<EdgeRef> = isa
            .iter()
            .filter(|(s, t)| members.contains(s) && members.contains(t))
            .map(|&(s, t)| edge_ref(ids[s], ids[t], RelationType::IsA))
            .collect();
        edges.sort();
        findings.push(Finding {
            kind: FindingKind::IsaCycle,
            nodes: comp.iter().map(|&i| ids[i].to_string()).collect(),
            edges,
        });
    }

    let mut conflicts = BTreeSet::new();
    for (s, t, rtype) in graph.edges.keys() {
        if *rtype != RelationType::SynonymOf {
            continue;
        }
        for (a, b) in [(s, t), (t, s)] {
            if graph.has_edge(a, b, RelationType::IsA) {
                let pair = if s <= t { (s, t) } else { (t, s) };
                conflicts.insert((pair, edge_ref(s, t, *rtype), edge_ref(a, b, RelationType::IsA)));
            }
        }
    }
    let mut grouped: BTreeMap<(&String, &String), Vec<EdgeRef>> = BTreeMap::new();
    for (pair, syn, isa) in conflicts {
        let e = grouped.entry(pair).or_default();
        for r in [syn, isa] {
            if !e.contains(&r) {
                e.push(r);
            }
        }
    }
    for ((a, b), mut edges) in grouped {
        edges.sort();
        findings.push(Finding {
            kind: FindingKind::SynonymIsaConflict,
            nodes: vec![a.clone(), b.clone()],
            edges,
        });
    }

    findings.sort();
    ConsistencyReport {
        consistent: findings.is_empty(),
        findings,
    }
}
