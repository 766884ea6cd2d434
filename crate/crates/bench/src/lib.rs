//! Deterministic input builders shared by the benchmark targets.

use trigate::tree::{load_tree, ServiceTree};

/// A chain-shaped vocabulary: `n` entity terms, one attribute each, a
/// link between consecutive entities, and one link-scoped rule per link.
pub fn synthetic_vocabulary(n: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        out.push_str(&format!("T:entity{i}\nT:attr{i}\n"));
    }
    for i in 0..n {
        out.push_str(&format!("F:entity{i} has attr{i}\n"));
    }
    for i in 0..n.saturating_sub(1) {
        out.push_str(&format!("F:entity{i} is linked to entity{}\n", i + 1));
    }
    for i in 0..n.saturating_sub(1) {
        out.push_str(&format!(
            "NR: For an entity{i} that is linked to an entity{} it is obligatory that the \
             attr{i} of the new entity{i} are less than the attr{i} of the old entity{i}.\n",
            i + 1
        ));
    }
    out
}

/// A diamond-layered service tree: each layer's services share the next
/// layer's hosts, so occurrence counts grow with depth.
pub fn layered_tree(layers: usize, width: usize) -> ServiceTree {
    let mut items = vec![r#"{"id": "RFC1", "kind": "RFC", "label": "root change"}"#.to_string()];
    let mut edges = Vec::new();
    let mut previous: Vec<String> = vec!["RFC1".to_string()];
    for layer in 0..layers {
        let mut current = Vec::new();
        for w in 0..width {
            let id = format!("SVC{layer}x{w}");
            items.push(format!(
                r#"{{"id": "{id}", "kind": "SVC", "label": "layer {layer} service {w}"}}"#
            ));
            for parent in previous.iter().take(2) {
                edges.push(format!(r#"{{"parent": "{parent}", "child": "{id}"}}"#));
            }
            current.push(id);
        }
        previous = current;
    }
    for (w, parent) in previous.iter().enumerate() {
        let host = format!("HOS{w}");
        let sla = format!("SLA{w}");
        items.push(format!(
            r#"{{"id": "{host}", "kind": "HOS", "label": "host {w}"}}"#
        ));
        items.push(format!(
            r#"{{"id": "{sla}", "kind": "SLA", "label": "sla {w}",
                "sla": {{"priority": {}, "first_failure_fine": "100.00",
                        "concurrent_failure_fine": "25.00"}}}}"#,
            w + 1
        ));
        edges.push(format!(r#"{{"parent": "{parent}", "child": "{host}"}}"#));
        edges.push(format!(r#"{{"parent": "{host}", "child": "{sla}"}}"#));
    }
    let document = format!(
        r#"{{"items": [{}], "edges": [{}]}}"#,
        items.join(", "),
        edges.join(", ")
    );
    load_tree(&document).expect("benchmark tree is valid")
}
