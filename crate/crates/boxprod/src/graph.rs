//! Simple finite graphs: unordered edges, no loops, no multi-edges.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGraph {
    vertex_count: usize,
    labels: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl FiniteGraph {
    pub fn new(vertex_count: usize) -> Self {
        FiniteGraph {
            vertex_count,
            labels: (0..vertex_count).map(|v| v.to_string()).collect(),
            edges: BTreeSet::new(),
        }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        FiniteGraph {
            vertex_count: labels.len(),
            labels,
            edges: BTreeSet::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    /// Inserts the edge `{a, b}`. Loops are rejected; duplicates are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b, "graphs carry no loops");
        assert!(a < self.vertex_count && b < self.vertex_count);
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.insert(e);
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&e)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Component id per vertex, numbered by first appearance.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for start in 0..self.vertex_count {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count <= 1 || self.component_count() == 1
    }

    /// Number of triangles through `v`.
    pub fn triangles_at(&self, v: usize) -> usize {
        let nbrs = self.neighbours(v);
        let mut count = 0;
        for i in 0..nbrs.len() {
            for j in (i + 1)..nbrs.len() {
                if self.has_edge(nbrs[i], nbrs[j]) {
                    count += 1;
                }
            }
        }
        count
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Biconnected components as vertex sets (bridges appear as 2-vertex
    /// blocks). Isolated vertices appear in no block.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let n = self.vertex_count;
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut edge_stack: Vec<(usize, usize)> = Vec::new();
        let mut blocks = Vec::new();

        // Iterative depth-first search; frame = (vertex, parent, next child index).
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            let mut frames: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (v, parent, ref mut idx)) = frames.last_mut() {
                if *idx < adj[v].len() {
                    let w = adj[v][*idx];
                    *idx += 1;
                    if disc[w] == usize::MAX {
                        edge_stack.push((v, w));
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        frames.push((w, v, 0));
                    } else if w != parent && disc[w] < disc[v] {
                        edge_stack.push((v, w));
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    frames.pop();
                    if let Some(&mut (u, _, _)) = frames.last_mut() {
                        low[u] = low[u].min(low[v]);
                        if low[v] >= disc[u] {
                            // u is an articulation point (or the root): pop one block
                            let mut verts = BTreeSet::new();
                            while let Some(&(a, b)) = edge_stack.last() {
                                if disc[a] >= disc[v] || (a, b) == (u, v) {
                                    verts.insert(a);
                                    verts.insert(b);
                                    edge_stack.pop();
                                    if (a, b) == (u, v) {
                                        break;
                                    }
                                } else {
                                    break;
                                }
                            }
                            if !verts.is_empty() {
                                blocks.push(verts.into_iter().collect());
                            }
                        }
                    }
                }
            }
        }
        blocks
    }

    /// True when every cycle is a triangle, i.e. every biconnected block has
    /// at most three vertices.
    pub fn all_cycles_are_triangles(&self) -> bool {
        self.blocks().iter().all(|b| b.len() <= 3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> FiniteGraph {
        let mut g = FiniteGraph::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    #[test]
    fn components_and_connectivity() {
        let g = graph(5, &[(0, 1), (1, 2), (3, 4)]);
        assert_eq!(g.components(), vec![0, 0, 0, 1, 1]);
        assert!(!g.is_connected());
        assert!(graph(3, &[(0, 1), (1, 2)]).is_connected());
        assert!(graph(1, &[]).is_connected());
    }

    #[test]
    fn triangles() {
        let g = graph(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]);
        assert_eq!(g.triangles_at(2), 2);
        assert_eq!(g.triangles_at(0), 1);
    }

    #[test]
    fn blocks_separate_triangles_glued_at_a_vertex() {
        // two triangles sharing vertex 2, plus a pendant edge
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4), (4, 5)]);
        let mut blocks = g.blocks();
        blocks.sort();
        assert_eq!(blocks, vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5]]);
        assert!(g.all_cycles_are_triangles());
    }

    #[test]
    fn four_cycle_is_not_triangle_only() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(!g.all_cycles_are_triangles());
        assert_eq!(g.blocks(), vec![vec![0, 1, 2, 3]]);
    }
}
