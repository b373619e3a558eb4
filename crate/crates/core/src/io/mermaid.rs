//! Knowledge graphs in Mermaid flowchart syntax.

use std::collections::BTreeSet;

use crate::deduction::{canonical_predicate, SpatialRelation};
use crate::model::FactBase;

fn node_label(fb: &FactBase, id: &str) -> String {
    let label = fb.get(id).map(|o| o.label.as_str()).unwrap_or("");
    let text = if label.is_empty() { id.to_string() } else { format!("{label} ({id})") };
    text.chars()
        .map(|c| match c {
            '"' => "#quot;".to_string(),
            '\n' | '\r' => " ".to_string(),
            c => c.to_string(),
        })
        .collect()
}

/// Renders `relations` whose predicate is in `predicates` (all when empty) as a
/// fenced Mermaid graph. Nodes are named `n<index>` after their position in
/// the fact base so ids never leak into the diagram syntax.
pub fn export_mermaid(fb: &FactBase, relations: &[SpatialRelation], predicates: &[String]) -> String {
    let wanted: BTreeSet<&str> = predicates.iter().map(|p| canonical_predicate(p)).collect();
    let node = |id: &str| fb.index_of(id).map(|i| format!("n{i}"));
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    for r in relations {
        if !wanted.is_empty() && !wanted.contains(r.predicate.as_str()) {
            continue;
        }
        let (Some(s), Some(o)) = (node(&r.subject), node(&r.object)) else { continue };
        nodes.insert(fb.index_of(&r.subject).unwrap_or_default());
        nodes.insert(fb.index_of(&r.object).unwrap_or_default());
        edges.push(format!("    {s} -->|{}| {o}\n", r.predicate));
    }
    let mut out = String::from("```mermaid\ngraph LR\n");
    let ids = fb.ids();
    for i in nodes {
        out.push_str(&format!("    n{i}[\"{}\"]\n", node_label(fb, &ids[i])));
    }
    for e in edges {
        out.push_str(&e);
    }
    out.push_str("```\n");
    out
}
