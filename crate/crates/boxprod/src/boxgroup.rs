//! The box product of two permutation groups, modelled at finite depth: the
//! action induced on the part-Y vertices of the coloured biregular tree by
//! the universal group with local actions prescribed by M and N.
//!
//! Orbits, the quotient graph, suborbits and orbital graphs are computed
//! exactly from the colouring and the local groups; a finite generating
//! family of portraits serves as an independent brute-force oracle.

use crate::colouring::LegalColouring;
use crate::construct::{from_colour_pair, half_tree_restriction, rigid_element, ConstructError};
use crate::graph::FiniteGraph;
use crate::group::{GroupError, PermGroup};
use crate::portrait::{ColourPerm, Portrait, PortraitError};
use crate::tree::{Part, TruncatedTree, TreeError, TreeParams, Vertex, VertexId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoxError {
    #[error("local group degree {group} does not match tree valency {tree}")]
    DegreeMismatch { group: usize, tree: usize },
    #[error("local groups must have degree at least 2")]
    DegreeTooSmall,
    #[error("ambient depth {depth} must be at least twice the margin {margin}")]
    MarginTooWide { depth: usize, margin: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Portrait(#[from] PortraitError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("vertex {0} does not lie in part Y")]
    NotPartY(String),
    #[error("vertices must lie in the same part")]
    PartMismatch,
    #[error("depth {needed} exceeds the certified region (inner depth {available})")]
    DepthInsufficient { needed: usize, available: usize },
    #[error("prediction says primitive; no imprimitivity witness exists")]
    PredictedPrimitive,
    #[error("certificate hypotheses fail: {0}")]
    CertificateHypothesis(String),
    #[error("certificate step failed verification: {0}")]
    CertificateStep(String),
}

/// A finite-depth model of the box product of `m` and `n`: the tree, a legal
/// colouring, and the margin below the ambient depth within which assertions
/// are certified.
pub struct BoxProduct {
    m: PermGroup,
    n: PermGroup,
    tree: TruncatedTree,
    col: LegalColouring,
    margin: usize,
}

impl BoxProduct {
    /// Builds the model with the canonical colouring.
    pub fn new(m: PermGroup, n: PermGroup, depth: usize, margin: usize) -> Result<Self, BoxError> {
        let params = TreeParams::new(m.degree(), n.degree(), depth).map_err(|e| match e {
            TreeError::ValencyTooSmall { .. } => BoxError::DegreeTooSmall,
            other => BoxError::Tree(other),
        })?;
        let tree = TruncatedTree::build(params)?;
        let col = LegalColouring::canonical(&tree);
        Self::with_colouring(m, n, tree, col, margin)
    }

    /// Builds the model over an explicit tree and colouring.
    pub fn with_colouring(
        m: PermGroup,
        n: PermGroup,
        tree: TruncatedTree,
        col: LegalColouring,
        margin: usize,
    ) -> Result<Self, BoxError> {
        if m.degree() != tree.m() {
            return Err(BoxError::DegreeMismatch {
                group: m.degree(),
                tree: tree.m(),
            });
        }
        if n.degree() != tree.n() {
            return Err(BoxError::DegreeMismatch {
                group: n.degree(),
                tree: tree.n(),
            });
        }
        if tree.depth_limit() < 2 * margin {
            return Err(BoxError::MarginTooWide {
                depth: tree.depth_limit(),
                margin,
            });
        }
        Ok(BoxProduct {
            m,
            n,
            tree,
            col,
            margin,
        })
    }

    pub fn m(&self) -> &PermGroup {
        &self.m
    }

    pub fn n(&self) -> &PermGroup {
        &self.n
    }

    pub fn tree(&self) -> &TruncatedTree {
        &self.tree
    }

    pub fn colouring(&self) -> &LegalColouring {
        &self.col
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Depth up to which assertions are certified.
    pub fn inner_depth(&self) -> usize {
        self.tree.depth_limit() - self.margin
    }

    pub fn is_inner(&self, v: &Vertex) -> bool {
        v.depth() <= self.inner_depth()
    }

    fn local_group(&self, part: Part) -> &PermGroup {
        match part {
            Part::X => &self.m,
            Part::Y => &self.n,
        }
    }

    /// The group whose orbits classify the in-colours of a part: part-X
    /// vertices have in-colours acted on by N, part-Y vertices by M.
    fn classifying_group(&self, part: Part) -> &PermGroup {
        match part {
            Part::X => &self.n,
            Part::Y => &self.m,
        }
    }

    /// Orbit labels per vertex: two same-part vertices lie in the same orbit
    /// of the universal group exactly when their in-colours lie in the same
    /// orbit of the other part's group.
    pub fn vertex_orbits(&self) -> VertexOrbits {
        let mut labels = BTreeMap::new();
        for id in 0..self.tree.len() {
            let part = self.tree.info(id).part;
            let ic = self.col.in_colour_id(&self.tree, id);
            let orbit = self
                .classifying_group(part)
                .orbit_index(ic)
                .expect("in-colour in range");
            labels.insert(self.tree.addr(id).clone(), (part, orbit));
        }
        let x_count = self.n.orbits().len();
        let y_count = self.m.orbits().len();
        VertexOrbits {
            labels,
            x_orbit_count: x_count,
            y_orbit_count: y_count,
        }
    }

    /// A member carrying `v` onto `target`, when they lie in the same orbit;
    /// `None` otherwise. Built from the matching colour permutation.
    pub fn same_orbit_with_element(
        &self,
        v: &Vertex,
        target: &Vertex,
    ) -> Result<Option<Portrait>, BoxError> {
        if v.part() != target.part() {
            return Err(BoxError::PartMismatch);
        }
        let vid = self.tree.id(v)?;
        let tid = self.tree.id(target)?;
        let classifier = self.classifying_group(v.part());
        let ic_v = self.col.in_colour_id(&self.tree, vid);
        let ic_t = self.col.in_colour_id(&self.tree, tid);
        // need a classifier element mapping the target's in-colour onto v's
        let Some(connector) = classifier.element_mapping(ic_t, ic_v) else {
            return Ok(None);
        };
        let sigma = match v.part() {
            Part::X => ColourPerm::extend_y(&connector, self.tree.m()),
            Part::Y => ColourPerm::extend_x(&connector, self.tree.n()),
        };
        let g = from_colour_pair(&self.tree, v, target, &sigma, &self.col, &self.col)?;
        Ok(Some(g))
    }

    /// The quotient graph: a complete bipartite graph on the orbit classes
    /// of the two parts.
    pub fn quotient_graph(&self) -> QuotientGraph {
        QuotientGraph {
            x_orbits: self.n.orbits().len(),
            y_orbits: self.m.orbits().len(),
        }
    }

    /// Edge-orbit labels over the whole truncation: the orbit of an edge is
    /// the pair of orbit labels of its endpoints.
    pub fn edge_orbit_count(&self) -> usize {
        let orbits = self.vertex_orbits();
        let mut seen = BTreeSet::new();
        for id in 0..self.tree.len() {
            let info = self.tree.info(id);
            if info.depth == 0 && id != 0 {
                continue; // count the root edge once
            }
            let parent = info.parent;
            let (a, b) = if info.part == Part::X {
                (
                    orbits.label(self.tree.addr(id)).unwrap(),
                    orbits.label(self.tree.addr(parent)).unwrap(),
                )
            } else {
                (
                    orbits.label(self.tree.addr(parent)).unwrap(),
                    orbits.label(self.tree.addr(id)).unwrap(),
                )
            };
            seen.insert((a.1, b.1));
        }
        seen.len()
    }

    /// The colour sequence along the path from `base` to `target`: the arc
    /// into each successive vertex carries that vertex's in-colour, so the
    /// sequence is defined even when the path starts at a truncation leaf.
    fn path_colours(&self, base: VertexId, target: VertexId) -> Vec<usize> {
        let path = self.tree.path_ids(base, target);
        path.windows(2)
            .map(|pair| self.col.in_colour_id(&self.tree, pair[1]))
            .collect()
    }

    /// Exact same-orbit test under the stabiliser of `base` for two targets
    /// at the same distance. Writing c₁c₂… and c′₁c′₂… for the path colour
    /// sequences, the targets are related exactly when each step admits a
    /// joint transporter: the first colours lie in one orbit of the local
    /// group at `base`, the second colours in one orbit of the stabiliser of
    /// the in-colour of `base`, and from then on one element of the level's
    /// local group must carry (c_{i−2}, c_i) onto (c′_{i−2}, c′_i) — the
    /// backward colour of each vertex is the forward colour two steps up.
    pub fn same_suborbit(
        &self,
        base: &Vertex,
        u: &Vertex,
        v: &Vertex,
    ) -> Result<bool, BoxError> {
        let bid = self.tree.id(base)?;
        let ui = self.tree.id(u)?;
        let vi = self.tree.id(v)?;
        let cu = self.path_colours(bid, ui);
        let cv = self.path_colours(bid, vi);
        if cu.len() != cv.len() {
            return Ok(false);
        }
        let mut part = self.tree.info(bid).part;
        for i in 0..cu.len() {
            let group = self.local_group(part);
            let ok = match i {
                0 => group.element_mapping(cu[0], cv[0]).is_some(),
                1 => {
                    let anchor = self.col.in_colour_id(&self.tree, bid);
                    group
                        .pair_transporter((anchor, cu[1]), (anchor, cv[1]))
                        .is_some()
                }
                _ => group
                    .pair_transporter((cu[i - 2], cu[i]), (cv[i - 2], cv[i]))
                    .is_some(),
            };
            if !ok {
                return Ok(false);
            }
            part = part.other();
        }
        Ok(true)
    }

    /// Suborbits of the stabiliser of `w` on the sphere of radius `2k`,
    /// grouped by the exact same-orbit relation. Each size equals the
    /// product of local orbit lengths along a representative path.
    pub fn suborbits(&self, w: &Vertex, k: usize) -> Result<Vec<Suborbit>, BoxError> {
        if w.part() != Part::Y {
            return Err(BoxError::NotPartY(w.to_string()));
        }
        if w.depth() + 2 * k > self.tree.depth_limit() {
            return Err(BoxError::DepthInsufficient {
                needed: w.depth() + 2 * k,
                available: self.tree.depth_limit(),
            });
        }
        let sphere = self.tree.sphere(w, 2 * k)?;
        let mut classes: Vec<Suborbit> = Vec::new();
        'outer: for v in sphere.vertices {
            for class in classes.iter_mut() {
                if self.same_suborbit(w, &class.representative, &v)? {
                    class.size += 1;
                    class.vertices.push(v);
                    continue 'outer;
                }
            }
            classes.push(Suborbit {
                representative: v.clone(),
                size: 1,
                vertices: vec![v],
            });
        }
        Ok(classes)
    }

    /// The product of local orbit lengths along the path: the exact size of
    /// the suborbit containing `target`, and an upper bound for any
    /// locally-(M, N) subgroup.
    pub fn suborbit_product_bound(
        &self,
        base: &Vertex,
        target: &Vertex,
    ) -> Result<usize, BoxError> {
        let bid = self.tree.id(base)?;
        let tid = self.tree.id(target)?;
        let path = self.tree.path_ids(bid, tid);
        let colours = self.path_colours(bid, tid);
        let mut bound = 1usize;
        let mut part = self.tree.info(bid).part;
        for i in 0..colours.len() {
            let group = if i == 0 {
                self.local_group(part).clone()
            } else {
                // the colour on the arc back toward the base is the
                // in-colour of the previous path vertex
                let back = self.col.in_colour_id(&self.tree, path[i - 1]);
                self.local_group(part).stabiliser(back)?
            };
            bound *= group.orbit(colours[i])?.len();
            part = part.other();
        }
        Ok(bound)
    }

    /// Exact same-orbit test for ordered pairs at tree distance 2 in part Y.
    /// With middle vertex m, in-colour i of the first vertex, and colours
    /// e₁ = c(x→m), e₂ = c(m→y), the pair maps onto the pair (x′, y′) exactly
    /// when e′₁ lies in the N-orbit of e₁ and one element of M carries
    /// (i, e₂) onto (i′, e′₂) — the in-colours are the backward colours of
    /// the middles, which must travel with the forward colours.
    fn ordered_pair_match(
        &self,
        x: VertexId,
        y: VertexId,
        x2: VertexId,
        y2: VertexId,
    ) -> Result<bool, BoxError> {
        let mid = self.tree.path_ids(x, y)[1];
        let mid2 = self.tree.path_ids(x2, y2)[1];
        let e1 = self.col.in_colour_id(&self.tree, mid);
        let e1b = self.col.in_colour_id(&self.tree, mid2);
        if self.n.element_mapping(e1, e1b).is_none() {
            return Ok(false);
        }
        let i = self.col.in_colour_id(&self.tree, x);
        let ib = self.col.in_colour_id(&self.tree, x2);
        let e2 = self.col.in_colour_id(&self.tree, y);
        let e2b = self.col.in_colour_id(&self.tree, y2);
        Ok(self.m.pair_transporter((i, e2), (ib, e2b)).is_some())
    }

    /// The orbital graph on the part-Y vertices whose edge set is the orbit
    /// of the unordered pair `{w, w2}` (at tree distance 2). Edges are read
    /// off the colouring exactly, in both orientations.
    pub fn orbital_graph(&self, w: &Vertex, w2: &Vertex) -> Result<BoxOrbitalGraph, BoxError> {
        if w.part() != Part::Y {
            return Err(BoxError::NotPartY(w.to_string()));
        }
        if self.tree.distance(w, w2)? != 2 {
            return Err(BoxError::PartMismatch);
        }
        let wi = self.tree.id(w)?;
        let w2i = self.tree.id(w2)?;
        let part_y: Vec<VertexId> = (0..self.tree.len())
            .filter(|&id| self.tree.info(id).part == Part::Y)
            .collect();
        let index_of: BTreeMap<VertexId, usize> =
            part_y.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let labels: Vec<String> = part_y
            .iter()
            .map(|&id| self.tree.addr(id).to_string())
            .collect();
        let mut graph = FiniteGraph::with_labels(labels);
        for &aid in &part_y {
            let a = self.tree.addr(aid).clone();
            let Ok(sphere) = self.tree.sphere(&a, 2) else {
                continue;
            };
            for u in sphere.vertices {
                let ui = self.tree.id(&u)?;
                if self.ordered_pair_match(wi, w2i, aid, ui)?
                    || self.ordered_pair_match(w2i, wi, aid, ui)?
                {
                    graph.add_edge(index_of[&aid], index_of[&ui]);
                }
            }
        }
        Ok(BoxOrbitalGraph {
            vertices: part_y.iter().map(|&id| self.tree.addr(id).clone()).collect(),
            graph,
        })
    }

    /// The finite generating family used as a brute-force oracle: colour
    /// rigid elements at every inner vertex for the generators of its part's
    /// group, plus one half-tree twist per inner vertex and generator of the
    /// stabiliser of the colour toward its parent. Inverses are included.
    ///
    /// Rigids at the two roots alone cannot reach everything when a factor
    /// is intransitive, so the family carries rigids at all inner vertices.
    pub fn finite_approx(&self) -> Result<FiniteApprox, BoxError> {
        let mut gens: Vec<Portrait> = Vec::new();
        let mut push = |g: Portrait| {
            if !g.is_identity(&self.tree) && !gens.contains(&g) {
                gens.push(g);
            }
        };
        for id in 0..self.tree.len() {
            let info = self.tree.info(id);
            if !self.tree.is_internal_id(id) || info.depth > self.inner_depth() {
                continue;
            }
            let v = self.tree.addr(id).clone();
            let group = self.local_group(info.part);
            for mu in group.generators() {
                for param in [mu.clone(), mu.inverse()] {
                    push(rigid_element(&self.tree, &self.col, &param, &v)?);
                }
            }
            // local twists: supported on the half-tree away from the parent
            let back = self.col.slot_table(id)[0];
            let stab = group.stabiliser(back)?;
            let parent = self.tree.addr(info.parent).clone();
            for mu in stab.generators() {
                for param in [mu.clone(), mu.inverse()] {
                    let rigid = rigid_element(&self.tree, &self.col, &param, &v)?;
                    let twist = half_tree_restriction(&self.tree, &self.col, &rigid, &v, &parent)?;
                    push(twist);
                }
            }
        }
        Ok(FiniteApprox { gens })
    }

    pub(crate) fn vertex_id(&self, v: &Vertex) -> Option<VertexId> {
        self.tree.id(v).ok()
    }

    pub(crate) fn vertex_addr(&self, id: VertexId) -> Vertex {
        self.tree.addr(id).clone()
    }

    pub(crate) fn neighbour_via_colour(&self, id: VertexId, colour: usize) -> Option<VertexId> {
        self.col.neighbour_via(&self.tree, id, colour)
    }

    /// Neighbours of an internal star indexed by arc colour.
    pub(crate) fn star_neighbours_by_colour(&self, id: VertexId) -> Vec<VertexId> {
        let part = self.tree.info(id).part;
        (0..self.tree.colour_count(part))
            .map(|c| {
                self.col
                    .neighbour_via(&self.tree, id, c)
                    .expect("internal star is fully coloured")
            })
            .collect()
    }

    /// Brute-force vertex orbit under the generating family: breadth-first
    /// closure under generator evaluation, restricted to defined images.
    pub fn orbit_bruteforce(&self, approx: &FiniteApprox, v: &Vertex) -> Result<Vec<Vertex>, BoxError> {
        let start = self.tree.id(v)?;
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for g in &approx.gens {
                let Ok(y) = g.evaluate_id(&self.tree, &self.col, x) else {
                    continue;
                };
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(seen.into_iter().map(|id| self.tree.addr(id).clone()).collect())
    }

    /// Brute-force orbit of an unordered vertex pair.
    pub fn pair_orbit_bruteforce(
        &self,
        approx: &FiniteApprox,
        a: &Vertex,
        b: &Vertex,
    ) -> Result<Vec<(Vertex, Vertex)>, BoxError> {
        let ai = self.tree.id(a)?;
        let bi = self.tree.id(b)?;
        let norm = |x: VertexId, y: VertexId| if x < y { (x, y) } else { (y, x) };
        let mut seen = BTreeSet::from([norm(ai, bi)]);
        let mut queue = VecDeque::from([norm(ai, bi)]);
        while let Some((x, y)) = queue.pop_front() {
            for g in &approx.gens {
                let Ok(gx) = g.evaluate_id(&self.tree, &self.col, x) else {
                    continue;
                };
                let Ok(gy) = g.evaluate_id(&self.tree, &self.col, y) else {
                    continue;
                };
                if seen.insert(norm(gx, gy)) {
                    queue.push_back(norm(gx, gy));
                }
            }
        }
        Ok(seen
            .into_iter()
            .map(|(x, y)| (self.tree.addr(x).clone(), self.tree.addr(y).clone()))
            .collect())
    }

    /// Truncated orders of the two vertex stabilisers and the edge
    /// stabiliser: products of local stabiliser orders over the interior of
    /// the relevant ball (the local-action tower), together with the
    /// transitivity indices on the root stars.
    pub fn amalgam_structure(&self) -> Result<AmalgamReport, BoxError> {
        let p = self.tree.id(&Vertex::p())?;
        let q = self.tree.id(&Vertex::q())?;
        let depth = self.tree.depth_limit();
        let order_p = self.tower_order(p, depth, false)?;
        let order_q = self.tower_order(q, depth, false)?;
        let edge_from_p = self.tower_order(p, depth, true)?;
        let edge_from_q = self.tower_order(q, depth, true)?;
        let root_x_colour = self.col.slot_table(p)[0];
        let root_y_colour = self.col.slot_table(q)[0];
        Ok(AmalgamReport {
            vertex_order_x: order_p,
            vertex_order_y: order_q,
            edge_order_from_x: edge_from_p,
            edge_order_from_y: edge_from_q,
            x_star_index: self.m.order() / self.m.stabiliser(root_x_colour)?.order(),
            y_star_index: self.n.order() / self.n.stabiliser(root_y_colour)?.order(),
        })
    }

    /// Order of the restriction to the radius-`radius` ball around `base` of
    /// its stabiliser (or of the root-edge stabiliser when `fix_edge`): the
    /// base vertex contributes its full local group (or the stabiliser of
    /// the root-edge colour), every deeper interior vertex the stabiliser of
    /// the colour on its arc toward the base.
    fn tower_order(
        &self,
        base: VertexId,
        radius: usize,
        fix_edge: bool,
    ) -> Result<TowerOrder, BoxError> {
        let mut exact: Option<u128> = Some(1);
        let mut log10 = 0f64;
        for id in 0..self.tree.len() {
            if !self.tree.is_internal_id(id) {
                continue;
            }
            let d = self.tree.distance_ids(base, id);
            if d + 1 > radius {
                continue;
            }
            let part = self.tree.info(id).part;
            let group = self.local_group(part);
            let factor = if id == base {
                if fix_edge {
                    let root_colour = self.col.slot_table(id)[0];
                    group.stabiliser(root_colour)?.order()
                } else {
                    group.order()
                }
            } else {
                let path = self.tree.path_ids(base, id);
                let toward = path[path.len() - 2];
                let back = self
                    .col
                    .arc_colour_ids(&self.tree, id, toward)
                    .expect("internal");
                group.stabiliser(back)?.order()
            };
            exact = exact.and_then(|o| o.checked_mul(factor));
            log10 += (factor as f64).log10();
        }
        Ok(TowerOrder { log10, exact })
    }
}

/// A tower order that may exceed machine integers: the base-10 logarithm is
/// always carried, the exact value only while it fits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerOrder {
    pub log10: f64,
    pub exact: Option<u128>,
}

impl std::fmt::Display for TowerOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.exact {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "~10^{:.1}", self.log10),
        }
    }
}

impl Serialize for TowerOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TowerOrder", 2)?;
        st.serialize_field("log10", &self.log10)?;
        st.serialize_field("exact", &self.exact.map(|v| v.to_string()))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for TowerOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            log10: f64,
            exact: Option<String>,
        }
        let raw = Raw::deserialize(d)?;
        let exact = match raw.exact {
            Some(text) => Some(text.parse().map_err(serde::de::Error::custom)?),
            None => None,
        };
        Ok(TowerOrder {
            log10: raw.log10,
            exact,
        })
    }
}

/// Vertex orbit labelling: part plus orbit index of the in-colour under the
/// classifying group.
#[derive(Clone, Debug)]
pub struct VertexOrbits {
    labels: BTreeMap<Vertex, (Part, usize)>,
    pub x_orbit_count: usize,
    pub y_orbit_count: usize,
}

impl VertexOrbits {
    pub fn label(&self, v: &Vertex) -> Option<(Part, usize)> {
        self.labels.get(v).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = (&Vertex, &(Part, usize))> {
        self.labels.iter()
    }
}

/// The complete bipartite quotient: one class per orbit of each part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientGraph {
    pub x_orbits: usize,
    pub y_orbits: usize,
}

impl QuotientGraph {
    pub fn edge_count(&self) -> usize {
        self.x_orbits * self.y_orbits
    }
}

/// One stabiliser orbit on a sphere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Suborbit {
    pub representative: Vertex,
    pub size: usize,
    pub vertices: Vec<Vertex>,
}

/// An orbital graph of the box product on the part-Y vertices.
#[derive(Clone, Debug)]
pub struct BoxOrbitalGraph {
    pub vertices: Vec<Vertex>,
    pub graph: FiniteGraph,
}

impl BoxOrbitalGraph {
    pub fn vertex_index(&self, v: &Vertex) -> Option<usize> {
        self.vertices.iter().position(|x| x == v)
    }
}

/// The finite generating family of portraits.
pub struct FiniteApprox {
    gens: Vec<Portrait>,
}

impl FiniteApprox {
    pub fn generators(&self) -> &[Portrait] {
        &self.gens
    }
}

/// Truncated amalgam data: tower orders of the two vertex stabilisers and of
/// the edge stabiliser measured in each vertex's ball. The towers differ
/// only in the factor at the base vertex, so the edge stabiliser sits in
/// each vertex stabiliser at the index of the root colour's orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmalgamReport {
    pub vertex_order_x: TowerOrder,
    pub vertex_order_y: TowerOrder,
    pub edge_order_from_x: TowerOrder,
    pub edge_order_from_y: TowerOrder,
    /// Index of the edge stabiliser in the part-X vertex stabiliser: the
    /// orbit length of the root colour under M (the star degree m when M is
    /// transitive).
    pub x_star_index: u128,
    pub y_star_index: u128,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Perm;
    use crate::portrait::for_each_member_fixing;

    fn model(m: PermGroup, n: PermGroup, depth: usize, margin: usize) -> BoxProduct {
        BoxProduct::new(m, n, depth, margin).unwrap()
    }

    fn sub3_01() -> PermGroup {
        PermGroup::new(3, vec![Perm::from_cycles(3, &[vec![0, 1]]).unwrap()]).unwrap()
    }

    #[test]
    fn vertex_orbits_match_local_orbit_counts() {
        // both transitive: one orbit per part
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 4, 1);
        let orbits = b.vertex_orbits();
        assert_eq!(orbits.x_orbit_count, 1);
        assert_eq!(orbits.y_orbit_count, 1);

        // intransitive M (orbits {0,1},{2} on X): part-Y splits in two
        let b = model(sub3_01(), PermGroup::symmetric(2), 4, 1);
        let orbits = b.vertex_orbits();
        assert_eq!(orbits.x_orbit_count, 1);
        assert_eq!(orbits.y_orbit_count, 2);
    }

    #[test]
    fn orbit_labels_agree_with_bruteforce_closure() {
        for (m, n) in [
            (PermGroup::symmetric(3), PermGroup::symmetric(2)),
            (PermGroup::cyclic(3), PermGroup::symmetric(2)),
            (sub3_01(), PermGroup::symmetric(2)),
        ] {
            let b = model(m, n, 4, 1);
            let approx = b.finite_approx().unwrap();
            let orbits = b.vertex_orbits();
            for v in b.tree().vertices() {
                if !b.is_inner(v) {
                    continue;
                }
                let closure = b.orbit_bruteforce(&approx, v).unwrap();
                for w in b.tree().vertices() {
                    if !b.is_inner(w) || w.part() != v.part() {
                        continue;
                    }
                    let same_label = orbits.label(v) == orbits.label(w);
                    let same_closure = closure.contains(w);
                    assert_eq!(
                        same_label, same_closure,
                        "labels vs closure disagree on {v} ~ {w}"
                    );
                }
            }
        }
    }

    #[test]
    fn same_orbit_elements_verify() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 5, 1);
        let orbits = b.vertex_orbits();
        let w = Vertex::q();
        // identity for the trivial pair
        let same = b.same_orbit_with_element(&w, &w).unwrap().unwrap();
        assert!(same.is_identity(b.tree()));
        for v in b.tree().vertices().cloned().collect::<Vec<_>>() {
            if v.part() != Part::Y || v.depth() > 3 {
                continue;
            }
            let g = b.same_orbit_with_element(&w, &v).unwrap();
            match g {
                Some(g) => {
                    assert_eq!(orbits.label(&w), orbits.label(&v));
                    assert_eq!(g.evaluate(b.tree(), b.colouring(), &w).unwrap(), v);
                    assert!(g.is_member(b.tree(), b.m(), b.n()));
                }
                None => assert_ne!(orbits.label(&w), orbits.label(&v)),
            }
        }
    }

    #[test]
    fn absent_mapping_element_matches_bruteforce() {
        // intransitive M: two part-Y classes; the oracle confirms absence
        let b = model(sub3_01(), PermGroup::symmetric(2), 4, 1);
        let approx = b.finite_approx().unwrap();
        let orbits = b.vertex_orbits();
        let w = Vertex::q();
        let closure = b.orbit_bruteforce(&approx, &w).unwrap();
        for v in b.tree().vertices() {
            if v.part() != Part::Y || !b.is_inner(v) {
                continue;
            }
            let has_element = b.same_orbit_with_element(&w, v).unwrap().is_some();
            assert_eq!(has_element, orbits.label(&w) == orbits.label(v));
            assert_eq!(closure.contains(v), has_element, "at {v}");
        }
    }

    #[test]
    fn quotient_graphs() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 4, 1);
        assert_eq!(
            b.quotient_graph(),
            QuotientGraph {
                x_orbits: 1,
                y_orbits: 1
            }
        );
        assert_eq!(b.edge_orbit_count(), 1);

        let b = model(sub3_01(), sub3_01(), 4, 1);
        let q = b.quotient_graph();
        assert_eq!((q.x_orbits, q.y_orbits), (2, 2));
        assert_eq!(b.edge_orbit_count(), 4);
        assert_eq!(q.edge_count(), 4);
    }

    #[test]
    fn edge_orbit_labels_agree_with_pair_closure() {
        // edges lie in one orbit exactly when their endpoint labels match
        let b = model(sub3_01(), sub3_01(), 4, 1);
        let approx = b.finite_approx().unwrap();
        let orbits = b.vertex_orbits();
        let edge_label = |u: &Vertex, v: &Vertex| {
            let (lu, lv) = (orbits.label(u).unwrap(), orbits.label(v).unwrap());
            if u.part() == Part::X {
                (lu.1, lv.1)
            } else {
                (lv.1, lu.1)
            }
        };
        // all edges with both ends in the inner ball
        let mut edges = Vec::new();
        for v in b.tree().vertices() {
            for w in b.tree().neighbours(v).unwrap() {
                if *v < w && b.is_inner(v) && b.is_inner(&w) {
                    edges.push((v.clone(), w));
                }
            }
        }
        for (u, v) in &edges {
            let closure = b.pair_orbit_bruteforce(&approx, u, v).unwrap();
            let label = edge_label(u, v);
            for (a, bb) in closure {
                if b.is_inner(&a) && b.is_inner(&bb) && b.tree().distance(&a, &bb).unwrap() == 1 {
                    assert_eq!(edge_label(&a, &bb), label, "{a} – {bb}");
                }
            }
        }
        // distinct labels means the brute-force closures stay apart
        for (u, v) in &edges {
            for (x, y) in &edges {
                if edge_label(u, v) != edge_label(x, y) {
                    let closure = b.pair_orbit_bruteforce(&approx, u, v).unwrap();
                    assert!(!closure.contains(&(x.clone(), y.clone())));
                    assert!(!closure.contains(&(y.clone(), x.clone())));
                }
            }
        }
    }

    #[test]
    fn suborbit_sizes_for_s3_s2() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 6, 2);
        let q = Vertex::q();
        let k1 = b.suborbits(&q, 1).unwrap();
        assert_eq!(k1.iter().map(|s| s.size).collect::<Vec<_>>(), vec![4]);
        let k2 = b.suborbits(&q, 2).unwrap();
        assert_eq!(k2.iter().map(|s| s.size).sum::<usize>(), 8);
        // product bound equals size for the universal group
        for s in k1.iter().chain(k2.iter()) {
            let bound = b.suborbit_product_bound(&q, &s.vertices[0]).unwrap();
            assert_eq!(bound, s.size);
        }
    }

    #[test]
    fn suborbits_match_stabiliser_enumeration() {
        // oracle: enumerate all members fixing q to radius 4 and compute the
        // orbits of the sphere under them
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 6, 2);
        let q = Vertex::q();
        let sphere = b.tree().sphere(&q, 4).unwrap().vertices;
        let index: BTreeMap<Vertex, usize> =
            sphere.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let mut reached: Vec<BTreeSet<usize>> =
            (0..sphere.len()).map(|i| BTreeSet::from([i])).collect();
        for_each_member_fixing(
            b.tree(),
            b.colouring(),
            b.m(),
            b.n(),
            &q,
            5,
            &[],
            1_000_000,
            |g| {
                for (i, v) in sphere.iter().enumerate() {
                    if let Ok(img) = g.evaluate(b.tree(), b.colouring(), v) {
                        if let Some(&j) = index.get(&img) {
                            reached[i].insert(j);
                        }
                    }
                }
            },
        )
        .unwrap();
        // merge into orbit classes
        let mut class = (0..sphere.len()).collect::<Vec<_>>();
        for (i, set) in reached.iter().enumerate() {
            for &j in set {
                let (a, b2) = (class[i].min(class[j]), class[i].max(class[j]));
                for c in class.iter_mut() {
                    if *c == b2 {
                        *c = a;
                    }
                }
            }
        }
        let mut oracle_sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in &class {
            *oracle_sizes.entry(c).or_default() += 1;
        }
        let mut oracle: Vec<usize> = oracle_sizes.values().copied().collect();
        oracle.sort_unstable();
        let mut exact: Vec<usize> = b
            .suborbits(&q, 2)
            .unwrap()
            .iter()
            .map(|s| s.size)
            .collect();
        exact.sort_unstable();
        assert_eq!(exact, oracle);
    }

    #[test]
    fn suborbits_for_regular_inputs() {
        let b = model(PermGroup::cyclic(3), PermGroup::cyclic(2), 4, 1);
        let q = Vertex::q();
        let subs = b.suborbits(&q, 1).unwrap();
        let sizes: Vec<usize> = subs.iter().map(|s| s.size).collect();
        assert_eq!(sizes, vec![2, 2]);
        for s in &subs {
            assert!(2 % s.size == 0 || s.size % 2 == 0);
        }
    }

    #[test]
    fn orbital_graph_structure_for_s3_s2() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 6, 2);
        let q = Vertex::q();
        let w2 = b.tree().sphere(&q, 2).unwrap().vertices[0].clone();
        let orbital = b.orbital_graph(&q, &w2).unwrap();
        let g = &orbital.graph;
        // interior vertices: full 2-sphere inside the graph
        for (i, v) in orbital.vertices.iter().enumerate() {
            if v.depth() + 2 <= b.tree().depth_limit() - 2 {
                assert_eq!(g.degree(i), 4, "degree at {v}");
                assert_eq!(g.triangles_at(i), 2, "triangles at {v}");
            }
        }
        assert!(g.all_cycles_are_triangles());
        // edge-orbit consistency with the brute-force pair closure
        let approx = b.finite_approx().unwrap();
        let pairs = b.pair_orbit_bruteforce(&approx, &q, &w2).unwrap();
        for (a, bvert) in pairs {
            let (ia, ib) = (
                orbital.vertex_index(&a).unwrap(),
                orbital.vertex_index(&bvert).unwrap(),
            );
            assert!(g.has_edge(ia, ib), "oracle edge {a} – {bvert} missing");
        }
    }

    #[test]
    fn orbital_graph_oracle_cross_check_for_regular_m() {
        let b = model(PermGroup::cyclic(3), PermGroup::symmetric(2), 5, 2);
        let q = Vertex::q();
        let w2 = b.tree().sphere(&q, 2).unwrap().vertices[0].clone();
        let orbital = b.orbital_graph(&q, &w2).unwrap();
        let approx = b.finite_approx().unwrap();
        for (a, bvert) in b.pair_orbit_bruteforce(&approx, &q, &w2).unwrap() {
            let (ia, ib) = (
                orbital.vertex_index(&a).unwrap(),
                orbital.vertex_index(&bvert).unwrap(),
            );
            assert!(orbital.graph.has_edge(ia, ib), "oracle edge {a} – {bvert} missing");
        }
        // the stabiliser orbit of the seed has two elements, and the seed
        // also closes two edges in the reversed orientation
        let iq = orbital.vertex_index(&q).unwrap();
        assert_eq!(b.suborbits(&q, 1).unwrap()[0].size, 2);
        assert_eq!(orbital.graph.degree(iq), 4);
    }

    #[test]
    fn approx_generators_are_members() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 5, 2);
        let approx = b.finite_approx().unwrap();
        assert!(!approx.generators().is_empty());
        for g in approx.generators() {
            assert!(g.is_member(b.tree(), b.m(), b.n()));
            g.validate(b.tree(), b.colouring()).unwrap();
        }
    }

    #[test]
    fn tiny_exhaustive_group_closure_matches_member_enumeration() {
        // (2, 2) inputs: the generated closure of inner-ball restrictions
        // equals the count of all member portraits restricted there
        let b = model(PermGroup::symmetric(2), PermGroup::symmetric(2), 4, 2);
        let inner: Vec<Vertex> = b
            .tree()
            .vertices()
            .filter(|v| v.depth() <= 2)
            .cloned()
            .collect();
        let restrict = |g: &Portrait| -> Option<Vec<(Vertex, Vertex)>> {
            let mut out = Vec::new();
            for v in &inner {
                match g.evaluate(b.tree(), b.colouring(), v) {
                    Ok(img) => out.push((v.clone(), img)),
                    Err(_) => return None,
                }
            }
            Some(out)
        };
        // breadth-first closure over words of the generating family
        let approx = b.finite_approx().unwrap();
        let mut seen: BTreeSet<Vec<(Vertex, Vertex)>> = BTreeSet::new();
        let id = Portrait::identity_global(b.tree(), &Vertex::q()).unwrap();
        seen.insert(restrict(&id).unwrap());
        let mut queue = VecDeque::from([id]);
        while let Some(word) = queue.pop_front() {
            for g in approx.generators() {
                let Ok(next) = g.compose(&word, b.tree(), b.colouring()) else {
                    continue;
                };
                let Some(key) = restrict(&next) else {
                    continue;
                };
                if seen.insert(key) {
                    queue.push_back(next);
                }
            }
        }
        // enumeration of all member portraits with base q or its image,
        // restricted to the same ball
        let mut enumerated: BTreeSet<Vec<(Vertex, Vertex)>> = BTreeSet::new();
        for target in b.tree().vertices().cloned().collect::<Vec<_>>() {
            if target.part() != Part::Y || target.depth() > 2 {
                continue;
            }
            let Some(mover) = b.same_orbit_with_element(&Vertex::q(), &target).unwrap() else {
                continue;
            };
            for_each_member_fixing(
                b.tree(),
                b.colouring(),
                b.m(),
                b.n(),
                &Vertex::q(),
                4,
                &[],
                100_000,
                |g| {
                    if let Ok(shifted) = mover.compose(g, b.tree(), b.colouring()) {
                        if let Some(key) = restrict(&shifted) {
                            enumerated.insert(key);
                        }
                    }
                },
            )
            .unwrap();
        }
        assert_eq!(seen, enumerated);
    }

    #[test]
    fn amalgam_tower_orders_for_s3_s2_at_depth_2() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 2, 1);
        let report = b.amalgam_structure().unwrap();
        // |G_p| on its depth-2 ball: |M| · |N_y|³ = 6
        assert_eq!(report.vertex_order_x.exact, Some(6));
        // |G_q| on its depth-2 ball: |N| · |M_x|² = 8
        assert_eq!(report.vertex_order_y.exact, Some(8));
        // edge stabiliser from p's ball: |M_x| · |N_y|³ = 2; index 3 = m
        assert_eq!(report.edge_order_from_x.exact, Some(2));
        assert_eq!(report.x_star_index, 3);
        assert_eq!(
            report.vertex_order_x.exact.unwrap() / report.edge_order_from_x.exact.unwrap(),
            3
        );
        // edge stabiliser from q's ball: |N_y| · |M_x|² = 4; index 2 = n
        assert_eq!(report.edge_order_from_y.exact, Some(4));
        assert_eq!(
            report.vertex_order_y.exact.unwrap() / report.edge_order_from_y.exact.unwrap(),
            2
        );
    }

    #[test]
    fn amalgam_orders_beyond_machine_integers_carry_logarithms() {
        let b = model(PermGroup::alternating(4), PermGroup::symmetric(3), 6, 2);
        let report = b.amalgam_structure().unwrap();
        assert!(report.vertex_order_x.exact.is_none());
        assert!(report.vertex_order_x.log10 > 38.0);
        // the index identity holds on the logarithmic scale
        let expected = (report.x_star_index as f64).log10() + report.edge_order_from_x.log10;
        assert!((report.vertex_order_x.log10 - expected).abs() < 1e-6);
    }

    #[test]
    fn amalgam_tower_matches_exhaustive_portrait_counts() {
        let b = model(PermGroup::symmetric(3), PermGroup::symmetric(2), 2, 1);
        // count all member portraits fixing p on the whole depth-2 tree
        let mut count_p = 0usize;
        for_each_member_fixing(
            b.tree(),
            b.colouring(),
            b.m(),
            b.n(),
            &Vertex::p(),
            2,
            &[],
            100_000,
            |_| count_p += 1,
        )
        .unwrap();
        let report = b.amalgam_structure().unwrap();
        assert_eq!(Some(count_p as u128), report.vertex_order_x.exact);
        let mut count_q = 0usize;
        for_each_member_fixing(
            b.tree(),
            b.colouring(),
            b.m(),
            b.n(),
            &Vertex::q(),
            2,
            &[],
            100_000,
            |_| count_q += 1,
        )
        .unwrap();
        assert_eq!(Some(count_q as u128), report.vertex_order_y.exact);
        let mut count_edge = 0usize;
        for_each_member_fixing(
            b.tree(),
            b.colouring(),
            b.m(),
            b.n(),
            &Vertex::p(),
            2,
            &[Vertex::q()],
            100_000,
            |_| count_edge += 1,
        )
        .unwrap();
        assert_eq!(Some(count_edge as u128), report.edge_order_from_x.exact);
    }
}
