//! Ontological views of a service tree: the instance expansion (one node
//! per occurrence of each item) exported as renderable DOT graph text or
//! as human-readable triples over the two vocabulary predicates.

use crate::tree::{CiKind, ConfigItem, Occurrence, ServiceTree};

/// One occurrence of an item, addressable as `<item id>#<k>` where `k`
/// is the 1-based index into the item's lexicographically ordered
/// occurrence list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceNode {
    pub instance_id: String,
    pub item_id: String,
    pub kind: CiKind,
    pub label: String,
    pub occurrence: Occurrence,
}

/// The expansion of the service-tree DAG into a forest: every instance
/// has exactly one parent except the root instances.
#[derive(Debug, Clone)]
pub struct InstanceGraph {
    pub nodes: Vec<InstanceNode>,
    /// `(parent, child)` indices into `nodes`.
    pub edges: Vec<(usize, usize)>,
}

impl InstanceGraph {
    pub fn edge_ids(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|&(p, c)| {
            (
                self.nodes[p].instance_id.as_str(),
                self.nodes[c].instance_id.as_str(),
            )
        })
    }
}

/// Subject/predicate/object statement; predicates are restricted to the
/// two vocabulary verbs, objects are instance ids or literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// Expand every item into one node per occurrence. Nodes are ordered by
/// item document order, then occurrence order; every non-root node is
/// connected to the unique instance of its parent path.
pub fn expand_instances(tree: &ServiceTree) -> InstanceGraph {
    let mut nodes = Vec::new();
    let mut by_path: std::collections::BTreeMap<Vec<String>, usize> =
        std::collections::BTreeMap::new();
    for item in tree.items() {
        let occurrences = tree
            .occurrences(&item.id)
            .expect("item ids enumerate the tree");
        for (k, occurrence) in occurrences.into_iter().enumerate() {
            let idx = nodes.len();
            by_path.insert(occurrence.path.clone(), idx);
            nodes.push(InstanceNode {
                instance_id: format!("{}#{}", item.id, k + 1),
                item_id: item.id.clone(),
                kind: item.kind,
                label: item.label.clone(),
                occurrence,
            });
        }
    }
    let mut edges = Vec::new();
    for (idx, node) in nodes.iter().enumerate() {
        if node.occurrence.path.len() > 1 {
            let parent_path = &node.occurrence.path[..node.occurrence.path.len() - 1];
            let parent = by_path[parent_path];
            edges.push((parent, idx));
        }
    }
    InstanceGraph { nodes, edges }
}

/// Scalar attributes exported as `has` literals for an item.
pub fn attribute_literals(item: &ConfigItem) -> Vec<(String, String)> {
    match item.kind {
        CiKind::Sla => {
            let terms = item.sla.as_ref().expect("SLA item");
            vec![
                ("priority".to_string(), terms.priority.to_string()),
                (
                    "first failure fine".to_string(),
                    terms.first_failure_fine.to_string(),
                ),
                (
                    "concurrent failure fine".to_string(),
                    terms.concurrent_failure_fine.to_string(),
                ),
                ("total fines".to_string(), terms.total_fines.to_string()),
            ]
        }
        CiKind::Mtc => {
            let terms = item.mtc.as_ref().expect("MTC item");
            vec![("liability".to_string(), terms.liability.to_string())]
        }
        _ => Vec::new(),
    }
}

/// One `is linked to` triple per instance edge (child subject, parent
/// object) and one `has` triple per SLA/MTC attribute literal, sorted by
/// subject, predicate, object.
pub fn to_triples(tree: &ServiceTree) -> Vec<Triple> {
    let graph = expand_instances(tree);
    let mut triples = Vec::new();
    for (parent, child) in graph.edge_ids() {
        triples.push(Triple {
            subject: child.to_string(),
            predicate: "is linked to".to_string(),
            object: parent.to_string(),
        });
    }
    for node in &graph.nodes {
        let item = tree.item(&node.item_id).expect("node item");
        for (name, value) in attribute_literals(item) {
            triples.push(Triple {
                subject: node.instance_id.clone(),
                predicate: "has".to_string(),
                object: format!("{name} = {value}"),
            });
        }
    }
    triples.sort();
    triples
}

/// Tab-separated line form of [`to_triples`] output.
pub fn render_triples(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&format!("{}\t{}\t{}\n", t.subject, t.predicate, t.object));
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn shape(kind: CiKind) -> &'static str {
    match kind {
        CiKind::Rfc => "box",
        CiKind::Svc => "ellipse",
        CiKind::Hos => "component",
        CiKind::Sla => "note",
        CiKind::Mtc => "folder",
    }
}

/// Deterministic DOT rendering of the instance expansion: one node per
/// instance labeled `<kind>:<label>` with a kind-specific shape, one
/// edge per instance edge.
pub fn to_dot(tree: &ServiceTree) -> String {
    let graph = expand_instances(tree);
    let mut out = String::from("digraph service_tree {\n");
    for node in &graph.nodes {
        out.push_str(&format!(
            "  \"{}\" [shape={}, label=\"{}\"];\n",
            dot_escape(&node.instance_id),
            shape(node.kind),
            dot_escape(&format!("{}:{}", node.kind, node.label))
        ));
    }
    let mut edges: Vec<(&str, &str)> = graph.edge_ids().collect();
    edges.sort_unstable();
    for (parent, child) in edges {
        out.push_str(&format!(
            "  \"{}\" -> \"{}\";\n",
            dot_escape(parent),
            dot_escape(child)
        ));
    }
    out.push_str("}\n");
    out
}
