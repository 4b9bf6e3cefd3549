//! Deterministic DOT renderings of trees and graphs.

use crate::boxgroup::QuotientGraph;
use crate::colouring::LegalColouring;
use crate::graph::FiniteGraph;
use crate::tree::{Part, TruncatedTree};

/// The truncated tree with part-coloured vertices; arc colours label the
/// edges as `tail-colour/head-colour` when a colouring is supplied. Vertices
/// appear in address order.
pub fn tree_to_dot(tree: &TruncatedTree, col: Option<&LegalColouring>) -> String {
    let mut out = String::from("graph tree {\n  node [style=filled];\n");
    let mut vertices: Vec<_> = tree.vertices().cloned().collect();
    vertices.sort();
    for v in &vertices {
        let fill = match v.part() {
            Part::X => "lightblue",
            Part::Y => "lightsalmon",
        };
        out.push_str(&format!("  \"{v}\" [fillcolor={fill}];\n"));
    }
    for v in &vertices {
        for w in tree.neighbours(v).expect("in tree") {
            if *v < w {
                match col {
                    Some(c) => {
                        let fwd = c
                            .arc_colour(tree, v, &w)
                            .map(|x| x.to_string())
                            .unwrap_or_else(|| "-".to_string());
                        let back = c
                            .arc_colour(tree, &w, v)
                            .map(|x| x.to_string())
                            .unwrap_or_else(|| "-".to_string());
                        out.push_str(&format!(
                            "  \"{v}\" -- \"{w}\" [label=\"{fwd}/{back}\"];\n"
                        ));
                    }
                    None => out.push_str(&format!("  \"{v}\" -- \"{w}\";\n")),
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// A finite graph with its stored labels, edges in sorted order.
pub fn graph_to_dot(graph: &FiniteGraph, name: &str) -> String {
    let mut out = format!("graph {name} {{\n");
    for v in 0..graph.vertex_count() {
        out.push_str(&format!("  \"{}\";\n", graph.label(v)));
    }
    for (a, b) in graph.edges() {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\";\n",
            graph.label(a),
            graph.label(b)
        ));
    }
    out.push_str("}\n");
    out
}

/// The complete bipartite quotient graph with one node per orbit class.
pub fn quotient_to_dot(q: &QuotientGraph) -> String {
    let mut out = String::from("graph quotient {\n  node [style=filled];\n");
    for i in 0..q.x_orbits {
        out.push_str(&format!("  \"x{i}\" [fillcolor=lightblue];\n"));
    }
    for j in 0..q.y_orbits {
        out.push_str(&format!("  \"y{j}\" [fillcolor=lightsalmon];\n"));
    }
    for i in 0..q.x_orbits {
        for j in 0..q.y_orbits {
            out.push_str(&format!("  \"x{i}\" -- \"y{j}\";\n"));
        }
    }
    out.push_str("}\n");
    out
}
