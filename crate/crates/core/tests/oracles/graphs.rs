use std::collections::{BTreeMap, BTreeSet};

use icon_core::linganalysis::{Concept, Evidence, Relation, RelationType};
use icon_core::ontology::{
    ConsistencyReport, FindingKind, MergeContext, Ontograph, Provenance,
};
use rand::Rng;

pub const RTYPES: [RelationType; 4] = [
    RelationType::IsA,
    RelationType::PartOf,
    RelationType::SynonymOf,
    RelationType::AssociatedWith,
];

pub fn relation(s: &str, t: &str, rtype: RelationType, confidence: f64) -> Relation {
    Relation {
        source: s.to_string(),
        target: t.to_string(),
        rtype,
        confidence,
        evidence: vec![Evidence {
            doc_id: "gen".into(),
            start: 0,
            end: 0,
            pattern: "generated".into(),
        }],
    }
}

// ---------------------------------------------------------------------------
// consistency

/// Raw graph shape: `n` nodes named `n0..`, edges by index and relation
/// type, and nodes to delete afterwards so that some edges dangle.
#[derive(Debug, Clone)]
pub struct GraphShape {
    pub n: usize,
    pub edges: Vec<(usize, usize, usize)>,
    pub removed: Vec<usize>,
}

pub fn random_graph_shape<R: Rng>(rng: &mut R, max_nodes: usize) -> GraphShape {
    let n = rng.gen_range(1..=max_nodes);
    let m = rng.gen_range(0..=n + n / 2);
    let edges = (0..m)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..4)))
        .collect();
    let removed = if rng.gen_bool(0.2) { vec![rng.gen_range(0..n)] } else { vec![] };
    GraphShape { n, edges, removed }
}

pub fn node_name(i: usize) -> String {
    format!("n{i:02}")
}

pub fn build_graph(shape: &GraphShape) -> Ontograph {
    let mut g = Ontograph::new(Provenance::Document);
    for i in 0..shape.n {
        g.add_node(Concept::named(&node_name(i)));
    }
    for &(s, t, r) in &shape.edges {
        g.add_edge(relation(&node_name(s), &node_name(t), RTYPES[r % 4], 0.5));
    }
    for &r in &shape.removed {
        g.nodes.remove(&node_name(r));
    }
    g
}

/// Every simple `is_a` cycle (self-loops included), each listed once,
/// starting from its smallest node.
pub fn simple_isa_cycles(g: &Ontograph) -> Vec<Vec<String>> {
    let nodes: Vec<&String> = g.nodes.keys().collect();
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (s, t, r) in g.edges.keys() {
        if *r == RelationType::IsA && g.nodes.contains_key(s) && g.nodes.contains_key(t) {
            succ.entry(s.as_str()).or_default().insert(t.as_str());
        }
    }
    let mut cycles = Vec::new();
    for start in &nodes {
        let start = start.as_str();
        let mut path = vec![start];
        extend(start, start, &succ, &mut path, &mut cycles);
    }
    cycles
}

fn extend<'a>(
    start: &'a str,
    at: &'a str,
    succ: &BTreeMap<&'a str, BTreeSet<&'a str>>,
    path: &mut Vec<&'a str>,
    out: &mut Vec<Vec<String>>,
) {
    for &next in succ.get(at).into_iter().flatten() {
        if next == start {
            out.push(path.iter().map(|s| s.to_string()).collect());
        } else if next > start && !path.contains(&next) {
            path.push(next);
            extend(start, next, succ, path, out);
            path.pop();
        }
    }
}

/// The findings a correct checker must produce, derived from the cycle
/// enumeration and direct edge inspection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExpectedFindings {
    pub isa_cycles: BTreeSet<Vec<String>>,
    pub mutual: BTreeSet<Vec<String>>,
    pub dangling: BTreeSet<(String, String, RelationType)>,
    pub conflicts: BTreeSet<Vec<String>>,
}

impl ExpectedFindings {
    pub fn is_consistent(&self) -> bool {
        self.isa_cycles.is_empty()
            && self.mutual.is_empty()
            && self.dangling.is_empty()
            && self.conflicts.is_empty()
    }
}

pub fn expected_findings(g: &Ontograph) -> ExpectedFindings {
    let cycles = simple_isa_cycles(g);
    let mut out = ExpectedFindings::default();

    // groups of nodes joined by cycles of length >= 2 (union-find)
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    fn find(p: &mut BTreeMap<String, String>, x: &str) -> String {
        let up = p.get(x).cloned().unwrap_or_else(|| x.to_string());
        if up == x {
            return up;
        }
        let root = find(p, &up);
        p.insert(x.to_string(), root.clone());
        root
    }
    for c in cycles.iter().filter(|c| c.len() >= 2) {
        for w in c.windows(2) {
            let (a, b) = (find(&mut parent, &w[0]), find(&mut parent, &w[1]));
            if a != b {
                parent.insert(a, b);
            }
        }
        if c.len() == 2 {
            out.mutual.insert(c.clone());
        }
    }
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in cycles.iter().filter(|c| c.len() >= 2) {
        for v in c {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().insert(v.clone());
        }
    }
    let group_size = |v: &str, parent: &mut BTreeMap<String, String>| {
        groups.get(&find(parent, v)).map_or(1, BTreeSet::len)
    };
    for grp in groups.values().filter(|g| g.len() > 2) {
        out.isa_cycles.insert(grp.iter().cloned().collect());
    }
    for c in cycles.iter().filter(|c| c.len() == 1) {
        if group_size(&c[0], &mut parent) <= 2 {
            out.isa_cycles.insert(c.clone());
        }
    }

    for (s, t, r) in g.edges.keys() {
        if !g.nodes.contains_key(s) || !g.nodes.contains_key(t) {
            out.dangling.insert((s.clone(), t.clone(), *r));
        }
    }

    let linked = |a: &str, b: &str, r: RelationType| {
        g.edges.contains_key(&(a.to_string(), b.to_string(), r))
            || g.edges.contains_key(&(b.to_string(), a.to_string(), r))
    };
    for (s, t, r) in g.edges.keys() {
        if *r == RelationType::SynonymOf && linked(s, t, RelationType::IsA) {
            let mut pair = vec![s.clone(), t.clone()];
            pair.sort();
            out.conflicts.insert(pair);
        }
    }
    out
}

/// The checker's report in the shape of [`ExpectedFindings`].
pub fn observed_findings(report: &ConsistencyReport) -> ExpectedFindings {
    let mut out = ExpectedFindings::default();
    for f in &report.findings {
        match f.kind {
            FindingKind::IsaCycle => {
                out.isa_cycles.insert(f.nodes.clone());
            }
            FindingKind::MutualIsa => {
                out.mutual.insert(f.nodes.clone());
            }
            FindingKind::DanglingEdge => {
                for e in &f.edges {
                    out.dangling.insert((e.source.clone(), e.target.clone(), e.rtype));
                }
            }
            FindingKind::SynonymIsaConflict => {
                out.conflicts.insert(f.nodes.clone());
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// merge

/// Concepts with several surface forms; forms of one concept share an
/// identity key under the builtin analyzer.
pub const CONCEPT_FORMS: &[&[&str]] = &[
    &["онтология", "онтологии", "Онтологией"],
    &["понятие", "понятия", "понятием"],
    &["система", "системы"],
    &["документ", "документы", "документа"],
    &["словарь", "словари"],
    &["термин", "термины", "терминов"],
    &["граф", "графа"],
    &["корпус", "корпуса"],
    &["отношение", "отношения"],
    &["знание", "знания"],
    &["база данных", "базы данных"],
    &["текст", "текстов"],
];

/// Pairwise relation plan shared by every graph of one merge case: for each
/// ordered pair at most one relation type, `is_a` only from the lower to the
/// higher concept index, and never both synonymy and `is_a` on one pair.
/// Any union of graphs drawn from one plan is therefore consistent.
#[derive(Debug, Clone)]
pub struct MergePlan {
    pub concepts: usize,
    pub edges: Vec<(usize, usize, RelationType)>,
}

pub fn random_plan<R: Rng>(rng: &mut R) -> MergePlan {
    let concepts = rng.gen_range(2..=CONCEPT_FORMS.len());
    let mut edges = Vec::new();
    for a in 0..concepts {
        for b in 0..concepts {
            if a == b || !rng.gen_bool(0.25) {
                continue;
            }
            let rtype = match rng.gen_range(0..4) {
                0 if a < b => RelationType::IsA,
                0 | 1 => RelationType::PartOf,
                2 if a < b => RelationType::SynonymOf,
                _ => RelationType::AssociatedWith,
            };
            edges.push((a, b, rtype));
        }
    }
    MergePlan { concepts, edges }
}

/// A graph using a random subset of the plan's concepts (each under a random
/// surface form) and of the plan's edges between them.
pub fn graph_from_plan<R: Rng>(rng: &mut R, plan: &MergePlan, provenance: Provenance) -> Ontograph {
    let mut g = Ontograph::new(provenance);
    let mut label = BTreeMap::new();
    for (c, forms) in CONCEPT_FORMS.iter().enumerate().take(plan.concepts) {
        if rng.gen_bool(0.7) {
            let form = forms[rng.gen_range(0..forms.len())];
            let mut node = Concept::named(form);
            node.id = format!("g{}", rng.gen_range(0..1000) * 100 + c);
            node.score = rng.gen_range(0.0..1.0);
            label.insert(c, node.id.clone());
            g.add_node(node);
        }
    }
    for &(a, b, rtype) in &plan.edges {
        if let (Some(s), Some(t)) = (label.get(&a), label.get(&b)) {
            if rng.gen_bool(0.6) {
                g.add_edge(relation(s, t, rtype, rng.gen_range(0.1..1.0)));
            }
        }
    }
    g
}

/// Node and edge key sets after mapping every node to its identity key.
pub fn projected_keys(
    g: &Ontograph,
    ctx: &MergeContext<'_>,
) -> (BTreeSet<String>, BTreeSet<(String, String, RelationType)>) {
    let key: BTreeMap<&str, String> =
        g.nodes.values().map(|n| (n.id.as_str(), ctx.identity_key(&n.label))).collect();
    let nodes = key.values().cloned().collect();
    let edges = g
        .edges
        .keys()
        .filter_map(|(s, t, r)| Some((key.get(s.as_str())?.clone(), key.get(t.as_str())?.clone(), *r)))
        .collect();
    (nodes, edges)
}

pub fn key_sets(g: &Ontograph) -> (BTreeSet<String>, BTreeSet<(String, String, RelationType)>) {
    (g.nodes.keys().cloned().collect(), g.edges.keys().cloned().collect())
}
