//! The (m, n)-biregular tree truncated at a fixed depth around a root edge.
//!
//! The tree is rooted at a distinguished edge {p, q} with p of valency m and
//! q of valency n. Vertices are identified by their address: which endpoint
//! of the root edge their branch hangs from, followed by the child indices
//! along the way. Addresses are stable across ambient depths.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("valencies must be at least 2 (got m={m}, n={n})")]
    ValencyTooSmall { m: usize, n: usize },
    #[error("depth must be at least 1")]
    DepthTooSmall,
    #[error("vertex bound exceeded: tree would have more than {limit} vertices")]
    ResourceBound { limit: usize },
    #[error("vertex {0} is not in the truncation")]
    UnknownVertex(String),
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(String, String),
    #[error("invalid vertex address: {0}")]
    BadAddress(String),
}

/// The two parts of the bipartition. Part X vertices have valency m and their
/// local actions live in the first factor; part Y vertices have valency n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Part {
    X,
    Y,
}

impl Part {
    pub fn other(self) -> Part {
        match self {
            Part::X => Part::Y,
            Part::Y => Part::X,
        }
    }
}

/// Parameters of a truncated biregular tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Valency of part-X vertices (= size of the first colour set).
    pub m: usize,
    /// Valency of part-Y vertices (= size of the second colour set).
    pub n: usize,
    /// Maximum distance from the root edge.
    pub depth: usize,
}

impl TreeParams {
    pub fn new(m: usize, n: usize, depth: usize) -> Result<Self, TreeError> {
        if m < 2 || n < 2 {
            return Err(TreeError::ValencyTooSmall { m, n });
        }
        if depth < 1 {
            return Err(TreeError::DepthTooSmall);
        }
        Ok(TreeParams { m, n, depth })
    }

    /// Closed-form vertex count: both root branches contribute one vertex per
    /// level-0, then alternating branching factors.
    pub fn vertex_count(&self) -> u128 {
        self.side_count(Part::X) + self.side_count(Part::Y)
    }

    fn side_count(&self, root: Part) -> u128 {
        let mut total: u128 = 1;
        let mut level: u128 = 1;
        let mut part = root;
        for _ in 1..=self.depth {
            let branch = match part {
                Part::X => self.m - 1,
                Part::Y => self.n - 1,
            } as u128;
            level *= branch;
            total += level;
            part = part.other();
        }
        total
    }
}

/// A vertex address: the root-edge endpoint it hangs from plus child indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    root: Part,
    path: Vec<u16>,
}

impl Vertex {
    /// The part-X endpoint of the root edge.
    pub fn p() -> Vertex {
        Vertex {
            root: Part::X,
            path: Vec::new(),
        }
    }

    /// The part-Y endpoint of the root edge.
    pub fn q() -> Vertex {
        Vertex {
            root: Part::Y,
            path: Vec::new(),
        }
    }

    pub fn root(&self) -> Part {
        self.root
    }

    pub fn path(&self) -> &[u16] {
        &self.path
    }

    /// Distance from the root edge.
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// Parts alternate along the path, so the part is determined by the root
    /// side and the parity of the depth.
    pub fn part(&self) -> Part {
        if self.path.len().is_multiple_of(2) {
            self.root
        } else {
            self.root.other()
        }
    }

    pub fn child(&self, index: u16) -> Vertex {
        let mut path = self.path.clone();
        path.push(index);
        Vertex {
            root: self.root,
            path,
        }
    }

    /// The address one step toward the root edge; `None` at the roots.
    pub fn parent(&self) -> Option<Vertex> {
        if self.path.is_empty() {
            return None;
        }
        let mut path = self.path.clone();
        path.pop();
        Some(Vertex {
            root: self.root,
            path,
        })
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.root {
            Part::X => write!(f, "p")?,
            Part::Y => write!(f, "q")?,
        }
        for step in &self.path {
            write!(f, ".{step}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Vertex {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('.');
        let root = match parts.next() {
            Some("p") => Part::X,
            Some("q") => Part::Y,
            _ => return Err(TreeError::BadAddress(s.to_string())),
        };
        let mut path = Vec::new();
        for piece in parts {
            let step: u16 = piece
                .parse()
                .map_err(|_| TreeError::BadAddress(s.to_string()))?;
            path.push(step);
        }
        Ok(Vertex { root, path })
    }
}

impl Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered pair of adjacent vertices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub from: Vertex,
    pub to: Vertex,
}

impl Arc {
    pub fn new(from: Vertex, to: Vertex) -> Arc {
        Arc { from, to }
    }

    pub fn reversed(&self) -> Arc {
        Arc {
            from: self.to.clone(),
            to: self.from.clone(),
        }
    }
}

pub(crate) type VertexId = usize;

#[derive(Clone, Debug)]
pub(crate) struct VertexInfo {
    pub addr: Vertex,
    pub part: Part,
    pub depth: usize,
    /// One step toward the root edge; for the roots this is the other root.
    pub parent: VertexId,
    /// Index of the arc (parent → self) in the parent's slot table: 0 when
    /// self is reached over the root edge, 1 + child index otherwise.
    pub parent_slot: usize,
    pub children: Vec<VertexId>,
}

/// A breadth-first materialisation of the truncated tree. Immutable after
/// construction; all queries are pure.
#[derive(Clone, Debug)]
pub struct TruncatedTree {
    params: TreeParams,
    verts: Vec<VertexInfo>,
    index: HashMap<Vertex, VertexId>,
}

pub(crate) const DEFAULT_VERTEX_LIMIT: usize = 2_000_000;

impl TruncatedTree {
    pub fn build(params: TreeParams) -> Result<Self, TreeError> {
        Self::build_with_limit(params, DEFAULT_VERTEX_LIMIT)
    }

    pub fn build_with_limit(params: TreeParams, limit: usize) -> Result<Self, TreeError> {
        if params.vertex_count() > limit as u128 {
            return Err(TreeError::ResourceBound { limit });
        }
        let mut verts: Vec<VertexInfo> = vec![
            VertexInfo {
                addr: Vertex::p(),
                part: Part::X,
                depth: 0,
                parent: 1,
                parent_slot: 0,
                children: Vec::new(),
            },
            VertexInfo {
                addr: Vertex::q(),
                part: Part::Y,
                depth: 0,
                parent: 0,
                parent_slot: 0,
                children: Vec::new(),
            },
        ];
        let mut cursor = 0;
        while cursor < verts.len() {
            let (addr, part, depth) = {
                let v = &verts[cursor];
                (v.addr.clone(), v.part, v.depth)
            };
            if depth < params.depth {
                let child_count = match part {
                    Part::X => params.m - 1,
                    Part::Y => params.n - 1,
                };
                for j in 0..child_count {
                    let id = verts.len();
                    verts.push(VertexInfo {
                        addr: addr.child(j as u16),
                        part: part.other(),
                        depth: depth + 1,
                        parent: cursor,
                        parent_slot: 1 + j,
                        children: Vec::new(),
                    });
                    verts[cursor].children.push(id);
                }
            }
            cursor += 1;
        }
        let index = verts
            .iter()
            .enumerate()
            .map(|(id, v)| (v.addr.clone(), id))
            .collect();
        Ok(TruncatedTree {
            params,
            verts,
            index,
        })
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn depth_limit(&self) -> usize {
        self.params.depth
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    /// All vertices in breadth-first order.
    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.verts.iter().map(|v| &v.addr)
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.index.contains_key(v)
    }

    pub fn is_leaf(&self, v: &Vertex) -> bool {
        v.depth() == self.params.depth
    }

    /// Neighbours in slot order: the edge-ward vertex first, then children.
    pub fn neighbours(&self, v: &Vertex) -> Result<Vec<Vertex>, TreeError> {
        let id = self.id(v)?;
        Ok(self.neighbour_ids(id).map(|n| self.verts[n].addr.clone()).collect())
    }

    /// One step toward the root edge; for the roots, the other root.
    pub fn edgeward(&self, v: &Vertex) -> Result<Vertex, TreeError> {
        let id = self.id(v)?;
        Ok(self.verts[self.verts[id].parent].addr.clone())
    }

    /// Tree distance between two vertices of the truncation.
    pub fn distance(&self, u: &Vertex, v: &Vertex) -> Result<usize, TreeError> {
        self.id(u)?;
        self.id(v)?;
        Ok(address_distance(u, v))
    }

    /// The unique path from `u` to `v`, inclusive.
    pub fn path(&self, u: &Vertex, v: &Vertex) -> Result<Vec<Vertex>, TreeError> {
        let ui = self.id(u)?;
        let vi = self.id(v)?;
        Ok(self
            .path_ids(ui, vi)
            .into_iter()
            .map(|id| self.verts[id].addr.clone())
            .collect())
    }

    /// Vertices at distance exactly `radius` from `v`. The result is flagged
    /// as clipped when the truncation boundary intersects the open ball, i.e.
    /// when some sphere of smaller radius meets a leaf.
    pub fn sphere(&self, v: &Vertex, radius: usize) -> Result<Sphere, TreeError> {
        let id = self.id(v)?;
        let mut clipped = false;
        let mut frontier = vec![id];
        let mut dist: HashMap<VertexId, usize> = HashMap::from([(id, 0)]);
        for step in 0..radius {
            let mut next = Vec::new();
            for &x in &frontier {
                if self.verts[x].depth == self.params.depth {
                    // a leaf keeps its edge-ward neighbour, but the branches
                    // beyond the cut are missing
                    clipped = true;
                }
                for y in self.neighbour_ids(x) {
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                        e.insert(step + 1);
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        let mut vertices: Vec<Vertex> =
            frontier.iter().map(|&x| self.verts[x].addr.clone()).collect();
        vertices.sort();
        Ok(Sphere { vertices, clipped })
    }

    /// The vertices on `from`'s side after deleting the edge {from, to}.
    pub fn half_tree(&self, from: &Vertex, to: &Vertex) -> Result<Vec<Vertex>, TreeError> {
        let fi = self.id(from)?;
        let ti = self.id(to)?;
        if !self.adjacent_ids(fi, ti) {
            return Err(TreeError::NotAdjacent(from.to_string(), to.to_string()));
        }
        let mask = self.half_tree_mask(fi, ti);
        let mut out: Vec<Vertex> = (0..self.verts.len())
            .filter(|&x| mask[x])
            .map(|x| self.verts[x].addr.clone())
            .collect();
        out.sort();
        Ok(out)
    }

    /// Greatest distance from `v` to any vertex of the truncation.
    pub fn eccentricity(&self, v: &Vertex) -> Result<usize, TreeError> {
        let vi = self.id(v)?;
        Ok((0..self.verts.len())
            .map(|x| self.distance_ids(vi, x))
            .max()
            .unwrap_or(0))
    }

    // ----- crate-internal id-based interface -----

    pub(crate) fn id(&self, v: &Vertex) -> Result<VertexId, TreeError> {
        self.index
            .get(v)
            .copied()
            .ok_or_else(|| TreeError::UnknownVertex(v.to_string()))
    }

    pub(crate) fn info(&self, id: VertexId) -> &VertexInfo {
        &self.verts[id]
    }

    pub(crate) fn len(&self) -> usize {
        self.verts.len()
    }

    pub(crate) fn addr(&self, id: VertexId) -> &Vertex {
        &self.verts[id].addr
    }

    pub(crate) fn is_internal_id(&self, id: VertexId) -> bool {
        self.verts[id].depth < self.params.depth
    }

    /// Valency of the colour set at a part: m for X, n for Y.
    pub(crate) fn colour_count(&self, part: Part) -> usize {
        match part {
            Part::X => self.params.m,
            Part::Y => self.params.n,
        }
    }

    pub(crate) fn neighbour_ids(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        std::iter::once(self.verts[id].parent).chain(self.verts[id].children.iter().copied())
    }

    fn adjacent_ids(&self, a: VertexId, b: VertexId) -> bool {
        self.verts[a].parent == b || self.verts[b].parent == a
    }

    pub(crate) fn distance_ids(&self, a: VertexId, b: VertexId) -> usize {
        address_distance(&self.verts[a].addr, &self.verts[b].addr)
    }

    /// The unique path between two vertices, as ids.
    pub(crate) fn path_ids(&self, a: VertexId, b: VertexId) -> Vec<VertexId> {
        let (va, vb) = (&self.verts[a].addr, &self.verts[b].addr);
        let mut up = vec![a];
        let mut down = vec![b];
        if va.root == vb.root {
            let k = common_prefix(&va.path, &vb.path);
            let mut x = a;
            for _ in k..va.path.len() {
                x = self.verts[x].parent;
                up.push(x);
            }
            let mut y = b;
            for _ in k..vb.path.len() {
                y = self.verts[y].parent;
                down.push(y);
            }
            // both now end at the fork; avoid repeating it
            down.pop();
        } else {
            let mut x = a;
            for _ in 0..va.path.len() {
                x = self.verts[x].parent;
                up.push(x);
            }
            let mut y = b;
            for _ in 0..vb.path.len() {
                y = self.verts[y].parent;
                down.push(y);
            }
        }
        down.reverse();
        up.extend(down);
        up
    }

    /// Membership mask of the half-tree on `from`'s side of the edge
    /// {from, to}: a vertex is on that side exactly when it is closer to
    /// `from` than to `to`.
    pub(crate) fn half_tree_mask(&self, from: VertexId, to: VertexId) -> Vec<bool> {
        (0..self.verts.len())
            .map(|x| self.distance_ids(x, from) < self.distance_ids(x, to))
            .collect()
    }

    pub(crate) fn eccentricity_id(&self, id: VertexId) -> usize {
        (0..self.verts.len())
            .map(|x| self.distance_ids(id, x))
            .max()
            .unwrap_or(0)
    }
}

fn common_prefix(a: &[u16], b: &[u16]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

fn address_distance(u: &Vertex, v: &Vertex) -> usize {
    if u.root == v.root {
        let k = common_prefix(&u.path, &v.path);
        (u.path.len() - k) + (v.path.len() - k)
    } else {
        u.path.len() + v.path.len() + 1
    }
}

/// A sphere around a vertex, flagged when it touches the truncation boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sphere {
    pub vertices: Vec<Vertex>,
    pub clipped: bool,
}
