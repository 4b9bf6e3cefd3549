//! Finite portraits of tree automorphisms.
//!
//! A portrait represents a part-preserving automorphism of the (infinite)
//! biregular tree on a ball around a base vertex: the image of the base plus
//! one local colour permutation per interior vertex of the ball. Evaluation
//! walks outward from the base, steering by arc colours: the neighbour of v
//! reached via colour x maps to the neighbour of g(v) reached via
//! local(v)(x). Outside its ball an element is undefined rather than
//! implicitly extended — the identity extension of a partial member need not
//! be a member.

use crate::colouring::LegalColouring;
use crate::group::PermGroup;
use crate::perm::Perm;
use crate::tree::{Part, TruncatedTree, TreeParams, Vertex, VertexId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PortraitError {
    #[error("vertex {0} is outside the portrait's domain")]
    OutOfDomain(String),
    #[error("image of {0} falls outside the truncation; a deeper ambient tree is needed")]
    ImageOutsideTree(String),
    #[error("vertex {0} is not in the truncation")]
    UnknownVertex(String),
    #[error("base and image must lie in the same part")]
    PartMismatch,
    #[error("colour permutation degree does not match the part's colour set")]
    ColourDegreeMismatch,
    #[error("the two domains have empty common ball")]
    EmptyDomain,
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("portrait lacks a local action at {0}")]
    MissingLocal(String),
}

/// A part-preserving permutation of the two colour sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColourPerm {
    pub on_x: Perm,
    pub on_y: Perm,
}

impl ColourPerm {
    pub fn identity(m: usize, n: usize) -> ColourPerm {
        ColourPerm {
            on_x: Perm::identity(m),
            on_y: Perm::identity(n),
        }
    }

    /// Extends a permutation of the first colour set by the identity.
    pub fn extend_x(mu: &Perm, n: usize) -> ColourPerm {
        ColourPerm {
            on_x: mu.clone(),
            on_y: Perm::identity(n),
        }
    }

    /// Extends a permutation of the second colour set by the identity.
    pub fn extend_y(nu: &Perm, m: usize) -> ColourPerm {
        ColourPerm {
            on_x: Perm::identity(m),
            on_y: nu.clone(),
        }
    }

    pub fn inverse(&self) -> ColourPerm {
        ColourPerm {
            on_x: self.on_x.inverse(),
            on_y: self.on_y.inverse(),
        }
    }

    /// Applies the permutation to a colour of the given part's colour set.
    pub fn apply(&self, part: Part, colour: usize) -> usize {
        match part {
            Part::X => self.on_x.apply(colour),
            Part::Y => self.on_y.apply(colour),
        }
    }
}

/// Base image plus per-vertex local actions.
///
/// The local table is maximal-partial: it holds an entry for every internal
/// vertex where the action is known, which may extend beyond the certified
/// ball. `radius` is the guaranteed ball: every vertex within that distance
/// of the base evaluates successfully. Evaluation itself is opportunistic
/// and succeeds wherever the walk stays inside the table and the truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Portrait {
    params: TreeParams,
    base: VertexId,
    base_image: VertexId,
    /// Every vertex at this distance from the base or closer has an image.
    radius: usize,
    local: BTreeMap<VertexId, Perm>,
}

impl Portrait {
    /// The identity on the ball of the given radius.
    pub fn identity(tree: &TruncatedTree, base: &Vertex, radius: usize) -> Result<Portrait, PortraitError> {
        let base_id = tree.id(base).map_err(|_| PortraitError::UnknownVertex(base.to_string()))?;
        let mut local = BTreeMap::new();
        for id in 0..tree.len() {
            if tree.is_internal_id(id) && tree.distance_ids(base_id, id) < radius {
                let size = tree.colour_count(tree.info(id).part);
                local.insert(id, Perm::identity(size));
            }
        }
        Ok(Portrait {
            params: tree.params(),
            base: base_id,
            base_image: base_id,
            radius,
            local,
        })
    }

    /// The identity defined on the whole truncation.
    pub fn identity_global(tree: &TruncatedTree, base: &Vertex) -> Result<Portrait, PortraitError> {
        let base_id = tree.id(base).map_err(|_| PortraitError::UnknownVertex(base.to_string()))?;
        let radius = tree.eccentricity_id(base_id);
        Self::identity(tree, base, radius)
    }

    pub(crate) fn from_parts(
        tree: &TruncatedTree,
        base: VertexId,
        base_image: VertexId,
        radius: usize,
        local: BTreeMap<VertexId, Perm>,
    ) -> Portrait {
        Portrait {
            params: tree.params(),
            base,
            base_image,
            radius,
            local,
        }
    }

    pub fn base(&self, tree: &TruncatedTree) -> Vertex {
        tree.addr(self.base).clone()
    }

    pub fn base_image(&self, tree: &TruncatedTree) -> Vertex {
        tree.addr(self.base_image).clone()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub(crate) fn local_at(&self, id: VertexId) -> Option<&Perm> {
        self.local.get(&id)
    }

    /// The stored local actions keyed by vertex address.
    pub fn local_actions<'a>(
        &'a self,
        tree: &'a TruncatedTree,
    ) -> impl Iterator<Item = (&'a Vertex, &'a Perm)> {
        self.local.iter().map(move |(&id, p)| (tree.addr(id), p))
    }

    /// Overrides the stored local action at one vertex. Test-only: used to
    /// break the parent-compatibility invariant deliberately.
    #[cfg(test)]
    pub(crate) fn set_local_for_test(&mut self, id: VertexId, perm: Perm) {
        self.local.insert(id, perm);
    }

    pub fn is_identity(&self, _tree: &TruncatedTree) -> bool {
        self.base == self.base_image && self.local.values().all(|p| p.is_identity())
    }

    /// The image of a vertex, walking the path from the base and steering by
    /// arc colours.
    pub fn evaluate(
        &self,
        tree: &TruncatedTree,
        col: &LegalColouring,
        v: &Vertex,
    ) -> Result<Vertex, PortraitError> {
        let vid = tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?;
        self.evaluate_id(tree, col, vid)
            .map(|id| tree.addr(id).clone())
    }

    pub(crate) fn evaluate_id(
        &self,
        tree: &TruncatedTree,
        col: &LegalColouring,
        v: VertexId,
    ) -> Result<VertexId, PortraitError> {
        let path = tree.path_ids(self.base, v);
        let mut image = self.base_image;
        for step in path.windows(2) {
            let (cur, next) = (step[0], step[1]);
            let sigma = self
                .local
                .get(&cur)
                .ok_or_else(|| PortraitError::MissingLocal(tree.addr(cur).to_string()))?;
            let colour = col
                .arc_colour_ids(tree, cur, next)
                .ok_or_else(|| PortraitError::MissingLocal(tree.addr(cur).to_string()))?;
            let image_colour = sigma.apply(colour);
            image = col
                .neighbour_via(tree, image, image_colour)
                .ok_or_else(|| PortraitError::ImageOutsideTree(tree.addr(next).to_string()))?;
        }
        Ok(image)
    }

    /// The local action at `v` computed independently of the stored table:
    /// the colour-to-colour map read off the images of `v` and its
    /// neighbours. Round-trips with the stored local action on valid
    /// portraits.
    pub fn local_action(
        &self,
        tree: &TruncatedTree,
        col: &LegalColouring,
        v: &Vertex,
    ) -> Result<Perm, PortraitError> {
        self.local_action_under(tree, col, col, v)
    }

    /// The local action at `v` read through an arbitrary colouring: vertex
    /// images come from the portrait's own representation colouring `repr`,
    /// while the colours are translated through `read`. This is how
    /// membership under a second colouring is decided.
    pub fn local_action_under(
        &self,
        tree: &TruncatedTree,
        repr: &LegalColouring,
        read: &LegalColouring,
        v: &Vertex,
    ) -> Result<Perm, PortraitError> {
        let vid = tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?;
        let image = self.evaluate_id(tree, repr, vid)?;
        if !tree.is_internal_id(vid) || !tree.is_internal_id(image) {
            return Err(PortraitError::OutOfDomain(v.to_string()));
        }
        let part = tree.info(vid).part;
        let size = tree.colour_count(part);
        let mut images = vec![0usize; size];
        for colour in 0..size {
            let nbr = read
                .neighbour_via(tree, vid, colour)
                .ok_or_else(|| PortraitError::MissingLocal(tree.addr(vid).to_string()))?;
            let nbr_image = self.evaluate_id(tree, repr, nbr)?;
            images[colour] = read
                .arc_colour_ids(tree, image, nbr_image)
                .ok_or_else(|| PortraitError::ImageOutsideTree(tree.addr(nbr).to_string()))?;
        }
        Perm::from_images(images).map_err(|_| {
            PortraitError::PreconditionFailed("local action is not a bijection".to_string())
        })
    }

    /// Membership in the universal group with prescribed local actions: every
    /// stored local action lies in `m` at part-X vertices and in `n` at
    /// part-Y vertices.
    pub fn is_member(&self, tree: &TruncatedTree, m: &PermGroup, n: &PermGroup) -> bool {
        self.local.iter().all(|(&id, sigma)| match tree.info(id).part {
            Part::X => m.contains(sigma),
            Part::Y => n.contains(sigma),
        })
    }

    /// Structural validity: base parts agree and every non-base local vertex
    /// is parent-compatible, i.e. its local action carries the colour toward
    /// the base onto the colour between the corresponding images.
    pub fn validate(&self, tree: &TruncatedTree, col: &LegalColouring) -> Result<(), PortraitError> {
        if tree.info(self.base).part != tree.info(self.base_image).part {
            return Err(PortraitError::PartMismatch);
        }
        for (&id, sigma) in &self.local {
            let expected = tree.colour_count(tree.info(id).part);
            if sigma.degree() != expected {
                return Err(PortraitError::ColourDegreeMismatch);
            }
            if id == self.base {
                continue;
            }
            let path = tree.path_ids(self.base, id);
            let toward_base = path[path.len() - 2];
            let back_colour = col
                .arc_colour_ids(tree, id, toward_base)
                .expect("interior vertices are internal");
            let image = self.evaluate_id(tree, col, id)?;
            let image_back = self.evaluate_id(tree, col, toward_base)?;
            let got = col
                .arc_colour_ids(tree, image, image_back)
                .ok_or_else(|| PortraitError::ImageOutsideTree(tree.addr(id).to_string()))?;
            if sigma.apply(back_colour) != got {
                return Err(PortraitError::PreconditionFailed(format!(
                    "parent compatibility fails at {}",
                    tree.addr(id)
                )));
            }
        }
        Ok(())
    }

    /// `self ∘ other`, with local actions multiplied by the cocycle rule
    /// σ_{gh}(v) = σ_g(hv)·σ_h(v) wherever both sides are defined. Errors
    /// when even the base of `other` cannot be pushed through `self`.
    pub fn compose(
        &self,
        other: &Portrait,
        tree: &TruncatedTree,
        col: &LegalColouring,
    ) -> Result<Portrait, PortraitError> {
        let base_image = self
            .evaluate_id(tree, col, other.base_image)
            .map_err(|_| PortraitError::EmptyDomain)?;
        let mut local = BTreeMap::new();
        for (&id, sh) in &other.local {
            let Ok(mid) = other.evaluate_id(tree, col, id) else {
                continue;
            };
            if let Some(sg) = self.local.get(&mid) {
                local.insert(id, sg.compose(sh));
            }
        }
        let mut out = Portrait {
            params: tree.params(),
            base: other.base,
            base_image,
            radius: 0,
            local,
        };
        out.radius = out.certified_radius(tree, col);
        Ok(out)
    }

    /// The inverse portrait, based at the image of the base. Local actions
    /// invert along the image: σ_{g⁻¹}(gv) = σ_g(v)⁻¹.
    pub fn invert(&self, tree: &TruncatedTree, col: &LegalColouring) -> Result<Portrait, PortraitError> {
        let mut local = BTreeMap::new();
        for (&id, sigma) in &self.local {
            let Ok(image) = self.evaluate_id(tree, col, id) else {
                continue;
            };
            if tree.is_internal_id(image) {
                local.insert(image, sigma.inverse());
            }
        }
        let mut out = Portrait {
            params: tree.params(),
            base: self.base_image,
            base_image: self.base,
            radius: 0,
            local,
        };
        out.radius = out.certified_radius(tree, col);
        Ok(out)
    }

    pub(crate) fn set_certified_radius(&mut self, tree: &TruncatedTree, col: &LegalColouring) {
        self.radius = self.certified_radius(tree, col);
    }

    /// Re-anchors the portrait at another vertex of its domain. The local
    /// table is unchanged; only the walk origin moves, so the represented
    /// automorphism is the same wherever both anchors can reach.
    pub fn rebase(
        &self,
        tree: &TruncatedTree,
        col: &LegalColouring,
        new_base: &Vertex,
    ) -> Result<Portrait, PortraitError> {
        let base = tree
            .id(new_base)
            .map_err(|_| PortraitError::UnknownVertex(new_base.to_string()))?;
        let base_image = self.evaluate_id(tree, col, base)?;
        let mut out = Portrait {
            params: self.params,
            base,
            base_image,
            radius: 0,
            local: self.local.clone(),
        };
        out.radius = out.certified_radius(tree, col);
        Ok(out)
    }

    /// The largest r such that every vertex within distance r of the base
    /// evaluates successfully.
    pub(crate) fn certified_radius(&self, tree: &TruncatedTree, col: &LegalColouring) -> usize {
        let mut missing_at = usize::MAX;
        let mut max_dist = 0;
        for id in 0..tree.len() {
            let d = tree.distance_ids(self.base, id);
            max_dist = max_dist.max(d);
            if d < missing_at && self.evaluate_id(tree, col, id).is_err() {
                missing_at = d;
            }
        }
        if missing_at == usize::MAX {
            max_dist
        } else {
            missing_at.saturating_sub(1)
        }
    }

    /// Serialises the portrait with address keys, ordered lexicographically.
    pub fn to_json(&self, tree: &TruncatedTree) -> PortraitJson {
        PortraitJson {
            base: tree.addr(self.base).to_string(),
            base_image: tree.addr(self.base_image).to_string(),
            radius: self.radius,
            local: self
                .local
                .iter()
                .map(|(&id, p)| (tree.addr(id).to_string(), p.images().to_vec()))
                .collect(),
        }
    }

    pub fn from_json(tree: &TruncatedTree, json: &PortraitJson) -> Result<Portrait, PortraitError> {
        let parse = |s: &str| -> Result<VertexId, PortraitError> {
            let v: Vertex = s
                .parse()
                .map_err(|_| PortraitError::UnknownVertex(s.to_string()))?;
            tree.id(&v).map_err(|_| PortraitError::UnknownVertex(s.to_string()))
        };
        let mut local = BTreeMap::new();
        for (addr, images) in &json.local {
            let id = parse(addr)?;
            let perm = Perm::from_images(images.clone())
                .map_err(|_| PortraitError::ColourDegreeMismatch)?;
            local.insert(id, perm);
        }
        Ok(Portrait {
            params: tree.params(),
            base: parse(&json.base)?,
            base_image: parse(&json.base_image)?,
            radius: json.radius,
            local,
        })
    }
}

/// JSON form of a portrait; local actions are image tables keyed by address.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PortraitJson {
    pub base: String,
    pub base_image: String,
    pub radius: usize,
    pub local: BTreeMap<String, Vec<usize>>,
}

/// A uniformly random member of the depth-truncated group, fixing the given
/// vertices pointwise, with the maximal domain around `base`.
///
/// At each interior vertex the local action is drawn uniformly from the coset
/// allowed by parent compatibility and the fixed set; the identity is always
/// allowed, so the draw never fails.
pub fn random_member(
    tree: &TruncatedTree,
    col: &LegalColouring,
    m: &PermGroup,
    n: &PermGroup,
    base: &Vertex,
    fixed: &[Vertex],
    rng: &mut impl Rng,
) -> Result<Portrait, PortraitError> {
    let base_id = tree.id(base).map_err(|_| PortraitError::UnknownVertex(base.to_string()))?;
    let mut fixed_ids: Vec<VertexId> = Vec::new();
    for v in fixed {
        fixed_ids.push(tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?);
    }
    if !fixed_ids.contains(&base_id) {
        fixed_ids.push(base_id);
    }
    let elements = local_elements(tree, m, n)?;
    // Level-by-level from the base: a level is only entered once every
    // internal vertex of the previous level has an internal image, so the
    // domain is an honest ball.
    let mut image: BTreeMap<VertexId, VertexId> = BTreeMap::from([(base_id, base_id)]);
    let mut local = BTreeMap::new();
    let mut frontier = vec![base_id];
    let mut radius = 0;
    loop {
        let internals: Vec<VertexId> = frontier
            .iter()
            .copied()
            .filter(|&id| tree.is_internal_id(id))
            .collect();
        if internals.is_empty() || internals.iter().any(|&id| !tree.is_internal_id(image[&id])) {
            break;
        }
        let mut next = Vec::new();
        for id in internals {
            let img = image[&id];
            let part = tree.info(id).part;
            let pool: Vec<&Perm> = allowed_locals(
                tree,
                col,
                &elements[part_index(part)],
                id,
                img,
                base_id,
                &fixed_ids,
                &image,
            );
            if pool.is_empty() {
                return Err(PortraitError::PreconditionFailed(format!(
                    "no admissible local action at {}",
                    tree.addr(id)
                )));
            }
            let sigma = pool[rng.random_range(0..pool.len())].clone();
            let before: Vec<VertexId> = image.keys().copied().collect();
            record_children_images(tree, col, id, img, &sigma, &mut image);
            next.extend(image.keys().copied().filter(|k| !before.contains(k)));
            local.insert(id, sigma);
        }
        frontier = next;
        radius += 1;
    }
    Ok(Portrait {
        params: tree.params(),
        base: base_id,
        base_image: base_id,
        radius,
        local,
    })
}

/// Visits every member portrait of the given radius around `base` that fixes
/// `fixed` pointwise (the base is always fixed). Returns the number visited.
#[allow(clippy::too_many_arguments)]
pub fn for_each_member_fixing(
    tree: &TruncatedTree,
    col: &LegalColouring,
    m: &PermGroup,
    n: &PermGroup,
    base: &Vertex,
    radius: usize,
    fixed: &[Vertex],
    cap: usize,
    mut visit: impl FnMut(&Portrait),
) -> Result<usize, PortraitError> {
    let base_id = tree.id(base).map_err(|_| PortraitError::UnknownVertex(base.to_string()))?;
    let mut fixed_ids: Vec<VertexId> = vec![base_id];
    for v in fixed {
        let id = tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?;
        if !fixed_ids.contains(&id) {
            fixed_ids.push(id);
        }
    }
    let elements = local_elements(tree, m, n)?;
    let mut order: Vec<VertexId> = (0..tree.len())
        .filter(|&id| tree.is_internal_id(id) && tree.distance_ids(base_id, id) < radius)
        .collect();
    order.sort_by_key(|&id| (tree.distance_ids(base_id, id), id));

    struct Search<'a, F: FnMut(&Portrait)> {
        tree: &'a TruncatedTree,
        col: &'a LegalColouring,
        elements: &'a [Vec<Perm>; 2],
        order: &'a [VertexId],
        base: VertexId,
        fixed: &'a [VertexId],
        radius: usize,
        cap: usize,
        count: usize,
        visit: F,
    }

    impl<F: FnMut(&Portrait)> Search<'_, F> {
        fn go(
            &mut self,
            depth: usize,
            image: &mut BTreeMap<VertexId, VertexId>,
            local: &mut BTreeMap<VertexId, Perm>,
        ) -> Result<(), PortraitError> {
            if depth == self.order.len() {
                self.count += 1;
                if self.count > self.cap {
                    return Err(PortraitError::PreconditionFailed(format!(
                        "enumeration exceeded cap of {}",
                        self.cap
                    )));
                }
                let portrait = Portrait {
                    params: self.tree.params(),
                    base: self.base,
                    base_image: self.base,
                    radius: self.radius,
                    local: local.clone(),
                };
                (self.visit)(&portrait);
                return Ok(());
            }
            let id = self.order[depth];
            let img = image[&id];
            let part = self.tree.info(id).part;
            let pool: Vec<&Perm> = allowed_locals(
                self.tree,
                self.col,
                &self.elements[part_index(part)],
                id,
                img,
                self.base,
                self.fixed,
                image,
            );
            for sigma in pool {
                let sigma = sigma.clone();
                let mut added: Vec<VertexId> = Vec::new();
                {
                    let before: Vec<VertexId> = image.keys().copied().collect();
                    record_children_images(self.tree, self.col, id, img, &sigma, image);
                    for k in image.keys() {
                        if !before.contains(k) {
                            added.push(*k);
                        }
                    }
                }
                // fixed vertices must have landed on themselves
                let ok = added.iter().all(|k| !self.fixed.contains(k) || image[k] == *k);
                if ok {
                    local.insert(id, sigma);
                    self.go(depth + 1, image, local)?;
                    local.remove(&id);
                }
                for k in added {
                    image.remove(&k);
                }
            }
            Ok(())
        }
    }

    let mut search = Search {
        tree,
        col,
        elements: &elements,
        order: &order,
        base: base_id,
        fixed: &fixed_ids,
        radius,
        cap,
        count: 0,
        visit: &mut visit,
    };
    let mut image = BTreeMap::from([(base_id, base_id)]);
    let mut local = BTreeMap::new();
    search.go(0, &mut image, &mut local)?;
    Ok(search.count)
}

fn part_index(part: Part) -> usize {
    match part {
        Part::X => 0,
        Part::Y => 1,
    }
}

fn local_elements(
    tree: &TruncatedTree,
    m: &PermGroup,
    n: &PermGroup,
) -> Result<[Vec<Perm>; 2], PortraitError> {
    if m.degree() != tree.m() || n.degree() != tree.n() {
        return Err(PortraitError::ColourDegreeMismatch);
    }
    let mx = m
        .elements(100_000)
        .map_err(|e| PortraitError::PreconditionFailed(e.to_string()))?;
    let ny = n
        .elements(100_000)
        .map_err(|e| PortraitError::PreconditionFailed(e.to_string()))?;
    Ok([mx, ny])
}

/// The local group elements admissible at `id` (with image `img`): those
/// compatible with the already-fixed parent image and pinning every fixed
/// neighbour that the choice would move.
#[allow(clippy::too_many_arguments)]
fn allowed_locals<'a>(
    tree: &TruncatedTree,
    col: &LegalColouring,
    elements: &'a [Perm],
    id: VertexId,
    img: VertexId,
    base: VertexId,
    fixed: &[VertexId],
    image: &BTreeMap<VertexId, VertexId>,
) -> Vec<&'a Perm> {
    if !tree.is_internal_id(img) {
        // no local action can live over a truncation leaf
        return Vec::new();
    }
    let mut constraints: Vec<(usize, usize)> = Vec::new();
    if id != base {
        let path = tree.path_ids(base, id);
        let toward = path[path.len() - 2];
        let back = col.arc_colour_ids(tree, id, toward).expect("internal");
        let img_toward = image[&toward];
        let img_back = col
            .arc_colour_ids(tree, img, img_toward)
            .expect("image parent adjacent");
        constraints.push((back, img_back));
    }
    // neighbours of `id` that must stay fixed and are reachable from here
    for nbr in tree.neighbour_ids(id) {
        if fixed.contains(&nbr) && !image.contains_key(&nbr) {
            let c = col.arc_colour_ids(tree, id, nbr).expect("internal");
            match col.arc_colour_ids(tree, img, nbr) {
                Some(target) => constraints.push((c, target)),
                None => return Vec::new(),
            }
        }
    }
    elements
        .iter()
        .filter(|e| constraints.iter().all(|&(from, to)| e.apply(from) == to))
        .collect()
}

/// Extends the image map to the ball-children of `id` according to `sigma`.
/// Children whose image exits the truncation are left unmapped.
fn record_children_images(
    tree: &TruncatedTree,
    col: &LegalColouring,
    id: VertexId,
    img: VertexId,
    sigma: &Perm,
    image: &mut BTreeMap<VertexId, VertexId>,
) {
    for nbr in tree.neighbour_ids(id).collect::<Vec<_>>() {
        if image.contains_key(&nbr) {
            continue;
        }
        let Some(colour) = col.arc_colour_ids(tree, id, nbr) else {
            continue;
        };
        if let Some(target) = col.neighbour_via(tree, img, sigma.apply(colour)) {
            image.insert(nbr, target);
        }
    }
}
