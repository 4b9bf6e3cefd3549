//! Constructive building blocks for members of the universal group: the
//! unique automorphism matching two legal colourings, colour-rigid elements,
//! half-tree surgery, factorisation over path fibres, conjugation between
//! colourings, and recovery of a legal colouring from a locally-(M, N)
//! generating set.

use crate::colouring::LegalColouring;
use crate::group::PermGroup;
use crate::perm::{all_perms, Perm};
use crate::portrait::{ColourPerm, Portrait, PortraitError};
use crate::tree::{Part, TruncatedTree, Vertex, VertexId};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstructError {
    #[error(transparent)]
    Portrait(#[from] PortraitError),
    #[error("vertices must lie at even distance (same part)")]
    OddDistance,
    #[error("colour permutation does not match the in-colours at the chosen vertices")]
    InColourMismatch,
    #[error("element does not fix {0}")]
    DoesNotFix(String),
    #[error("no vertex with a matching in-colour exists in the truncation")]
    NoMatchingVertex,
    #[error("path is not a path in the tree: {0}")]
    NotAPath(String),
    #[error("generators do not act transitively on the inner part-{0:?} vertices")]
    NotTransitiveOnPart(Part),
    #[error("local action at {vertex} is not permutation isomorphic to the prescribed group")]
    LocalGroupMismatch { vertex: String },
    #[error("generator words are too short-ranged to colour the truncation: {0}")]
    InsufficientRange(String),
}

/// The unique automorphism `g` with `g(v) = v_image` and
/// `col = sigma ∘ col_image ∘ g`, built breadth-first from the base and
/// truncated to the largest ball that fits the ambient tree.
///
/// Requires `d(v, v_image)` even and `sigma` to carry the in-colour of
/// `v_image` under `col_image` onto the in-colour of `v` under `col`. Every
/// extension step is forced; the construction asserts this by checking each
/// already-placed image it meets again.
pub fn from_colour_pair(
    tree: &TruncatedTree,
    v: &Vertex,
    v_image: &Vertex,
    sigma: &ColourPerm,
    col: &LegalColouring,
    col_image: &LegalColouring,
) -> Result<Portrait, ConstructError> {
    let base = tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?;
    let base_image = tree
        .id(v_image)
        .map_err(|_| PortraitError::UnknownVertex(v_image.to_string()))?;
    if v.part() != v_image.part() {
        return Err(ConstructError::OddDistance);
    }
    if sigma.on_x.degree() != tree.m() || sigma.on_y.degree() != tree.n() {
        return Err(PortraitError::ColourDegreeMismatch.into());
    }
    // hypothesis: sigma maps the in-colour of the image onto the in-colour of
    // the base; in-colours of part-P vertices lie in the other part's set
    let in_part = v.part().other();
    let ic_base = col.in_colour_id(tree, base);
    let ic_image = col_image.in_colour_id(tree, base_image);
    if sigma.apply(in_part, ic_image) != ic_base {
        return Err(ConstructError::InColourMismatch);
    }

    let sigma_inv = sigma.inverse();
    let mut image: BTreeMap<VertexId, VertexId> = BTreeMap::from([(base, base_image)]);
    let mut local: BTreeMap<VertexId, Perm> = BTreeMap::new();
    let mut queue = VecDeque::from([base]);
    while let Some(id) = queue.pop_front() {
        let img = image[&id];
        if !tree.is_internal_id(id) || !tree.is_internal_id(img) {
            continue;
        }
        let part = tree.info(id).part;
        let size = tree.colour_count(part);
        let mut sigma_local = vec![0usize; size];
        for colour in 0..size {
            let nbr = col
                .neighbour_via(tree, id, colour)
                .expect("internal out-star is full");
            // col(a) = sigma(col_image(g a)) forces col_image(g a)
            let target_colour = sigma_inv.apply(part, colour);
            let nbr_image = col_image
                .neighbour_via(tree, img, target_colour)
                .expect("image out-star is full");
            sigma_local[colour] = col
                .arc_colour_ids(tree, img, nbr_image)
                .expect("image is internal");
            match image.get(&nbr) {
                Some(&placed) => assert_eq!(
                    placed, nbr_image,
                    "extension steps are forced; a second route disagreed"
                ),
                None => {
                    image.insert(nbr, nbr_image);
                    queue.push_back(nbr);
                }
            }
        }
        local.insert(
            id,
            Perm::from_images(sigma_local).expect("composite of bijections"),
        );
    }
    let mut g = Portrait::from_parts(tree, base, base_image, 0, local);
    g.set_certified_radius(tree, col);
    Ok(g)
}

/// The colour-rigid element fixing `v`: the unique member `g` with
/// `g(v) = v` and `col == mu_hat ∘ col ∘ g`, where `mu_hat` extends `mu` by
/// the identity on the other colour set. Its local action is `mu⁻¹` at every
/// vertex of `v`'s part and the identity elsewhere, so it is a member
/// whenever `mu` lies in the prescribed local group.
pub fn rigid_element(
    tree: &TruncatedTree,
    col: &LegalColouring,
    mu: &Perm,
    v: &Vertex,
) -> Result<Portrait, ConstructError> {
    tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?;
    let part = v.part();
    if mu.degree() != tree.colour_count(part) {
        return Err(PortraitError::ColourDegreeMismatch.into());
    }
    let sigma = match part {
        Part::X => ColourPerm::extend_x(mu, tree.n()),
        Part::Y => ColourPerm::extend_y(mu, tree.m()),
    };
    // in-colour hypothesis holds automatically: the in-colour of v lies in
    // the other part's set, where mu_hat is the identity
    from_colour_pair(tree, v, v, &sigma, col, col)
        .map_err(|e| match e {
            ConstructError::InColourMismatch => unreachable!("mu_hat fixes the other part"),
            other => other,
        })
}

/// Rewrites `h` (which must fix both endpoints of the arc `from → to`) into
/// the member that agrees with `h` on `from`'s half-tree and fixes the other
/// half-tree pointwise.
pub fn half_tree_restriction(
    tree: &TruncatedTree,
    col: &LegalColouring,
    h: &Portrait,
    from: &Vertex,
    to: &Vertex,
) -> Result<Portrait, ConstructError> {
    let fi = tree.id(from).map_err(|_| PortraitError::UnknownVertex(from.to_string()))?;
    let ti = tree.id(to).map_err(|_| PortraitError::UnknownVertex(to.to_string()))?;
    for endpoint in [fi, ti] {
        if h.evaluate_id(tree, col, endpoint)? != endpoint {
            return Err(ConstructError::DoesNotFix(tree.addr(endpoint).to_string()));
        }
    }
    let mask = tree.half_tree_mask(fi, ti);
    let mut local = BTreeMap::new();
    for id in 0..tree.len() {
        if !tree.is_internal_id(id) {
            continue;
        }
        let sigma = if mask[id] {
            // missing boundary locals of h leave the result partial there
            match h.local_at(id) {
                Some(s) => s.clone(),
                None => continue,
            }
        } else {
            Perm::identity(tree.colour_count(tree.info(id).part))
        };
        local.insert(id, sigma);
    }
    let mut g = Portrait::from_parts(tree, ti, ti, 0, local);
    g.set_certified_radius(tree, col);
    Ok(g)
}

/// The nearest-path-vertex projection of a path: every vertex of the tree is
/// assigned the index of the unique closest path vertex. Fibres partition the
/// vertex set and each fibre is a subtree meeting the path in one vertex.
#[derive(Clone, Debug)]
pub struct PathProjection {
    path: Vec<VertexId>,
    fibre: Vec<usize>,
}

impl PathProjection {
    pub fn new(tree: &TruncatedTree, path: &[Vertex]) -> Result<PathProjection, ConstructError> {
        let mut ids = Vec::with_capacity(path.len());
        for v in path {
            ids.push(tree.id(v).map_err(|_| PortraitError::UnknownVertex(v.to_string()))?);
        }
        if ids.is_empty() {
            return Err(ConstructError::NotAPath("empty".to_string()));
        }
        for w in path.windows(2) {
            if tree.distance(&w[0], &w[1]) != Ok(1) {
                return Err(ConstructError::NotAPath(format!("{} → {}", w[0], w[1])));
            }
        }
        // multi-source breadth-first search; in a tree the nearest path
        // vertex is unique, so first reach wins
        let mut fibre = vec![usize::MAX; tree.len()];
        let mut queue = VecDeque::new();
        for (i, &id) in ids.iter().enumerate() {
            fibre[id] = i;
            queue.push_back(id);
        }
        while let Some(x) = queue.pop_front() {
            for y in tree.neighbour_ids(x) {
                if fibre[y] == usize::MAX {
                    fibre[y] = fibre[x];
                    queue.push_back(y);
                }
            }
        }
        Ok(PathProjection { path: ids, fibre })
    }

    pub fn path_len(&self) -> usize {
        self.path.len()
    }

    /// Index into the path of the nearest path vertex.
    pub fn project(&self, tree: &TruncatedTree, v: &Vertex) -> Option<usize> {
        tree.id(v).ok().map(|id| self.fibre[id])
    }

    pub(crate) fn fibre_of(&self, id: VertexId) -> usize {
        self.fibre[id]
    }

    pub(crate) fn path_ids(&self) -> &[VertexId] {
        &self.path
    }
}

/// Factorises a member fixing the path pointwise into one member per path
/// vertex: the factor at path index `i` agrees with `g` on the fibre of that
/// vertex and fixes everything else pointwise. Factors commute pairwise and
/// multiply back to `g` on the common domain.
pub fn path_decompose(
    tree: &TruncatedTree,
    col: &LegalColouring,
    g: &Portrait,
    projection: &PathProjection,
) -> Result<Vec<Portrait>, ConstructError> {
    for &pid in projection.path_ids() {
        if g.evaluate_id(tree, col, pid)? != pid {
            return Err(ConstructError::DoesNotFix(tree.addr(pid).to_string()));
        }
    }
    let base = projection.path_ids()[0];
    let mut factors = Vec::with_capacity(projection.path_len());
    for i in 0..projection.path_len() {
        let mut local = BTreeMap::new();
        for id in 0..tree.len() {
            if !tree.is_internal_id(id) {
                continue;
            }
            let sigma = if projection.fibre_of(id) == i {
                match g.local_at(id) {
                    Some(s) => s.clone(),
                    None => continue,
                }
            } else {
                Perm::identity(tree.colour_count(tree.info(id).part))
            };
            local.insert(id, sigma);
        }
        let mut factor = Portrait::from_parts(tree, base, base, 0, local);
        factor.set_certified_radius(tree, col);
        factors.push(factor);
    }
    Ok(factors)
}

/// An element conjugating between two legal colourings: the unique `g` with
/// `col = col_image ∘ g` for the first base pair with matching in-colours.
/// Conjugation by `g` carries members under `col` to members under
/// `col_image`.
pub fn conjugating_element(
    tree: &TruncatedTree,
    col: &LegalColouring,
    col_image: &LegalColouring,
) -> Result<Portrait, ConstructError> {
    let p = Vertex::p();
    let base = tree.id(&p).expect("root exists");
    let want = col.in_colour_id(tree, base);
    let identity = ColourPerm::identity(tree.m(), tree.n());
    // first part-X vertex (breadth-first) whose in-colour matches
    for id in 0..tree.len() {
        if tree.info(id).part != Part::X {
            continue;
        }
        if col_image.in_colour_id(tree, id) == want {
            let target = tree.addr(id).clone();
            return from_colour_pair(tree, &p, &target, &identity, col, col_image);
        }
    }
    Err(ConstructError::NoMatchingVertex)
}

/// Words in the generators that fix `centre` and carry its neighbour `from`
/// onto other neighbours of `centre`: a breadth-first search over the arc
/// orbit, returning one word per reachable target neighbour.
fn arc_stabiliser_words(
    tree: &TruncatedTree,
    reference: &LegalColouring,
    gens: &[Portrait],
    centre: VertexId,
    from: VertexId,
) -> BTreeMap<VertexId, Portrait> {
    let start = Portrait::identity_global(tree, tree.addr(centre)).expect("identity");
    let mut found: BTreeMap<VertexId, Portrait> = BTreeMap::from([(from, start.clone())]);
    let mut seen: std::collections::BTreeSet<(VertexId, VertexId)> =
        std::collections::BTreeSet::from([(centre, from)]);
    let mut queue = VecDeque::from([(centre, from, start)]);
    while let Some((a, b, word)) = queue.pop_front() {
        for g in gens {
            let Ok(ga) = g.evaluate_id(tree, reference, a) else {
                continue;
            };
            let Ok(gb) = g.evaluate_id(tree, reference, b) else {
                continue;
            };
            if !seen.insert((ga, gb)) {
                continue;
            }
            let Ok(next) = g.compose(&word, tree, reference) else {
                continue;
            };
            if ga == centre {
                found.entry(gb).or_insert_with(|| next.clone());
            }
            queue.push_back((ga, gb, next));
        }
    }
    found
}

/// Recovers a legal colouring from a generating set acting transitively on
/// each part: transversal words to the two roots are built sphere by sphere
/// from p, each step an arc-stabiliser word composed with the word two steps
/// closer, so that all arcs into a vertex inherit one colour.
///
/// `reference` is the colouring the generator portraits are expressed under;
/// the recovered colouring depends only on the vertex action of the
/// generators. All free choices are made deterministically: words come from
/// breadth-first searches with generators in input order, and the root
/// bijections are the lexicographically first that conjugate the observed
/// local groups onto `m` and `n` exactly. Beyond the recovered region the
/// colouring is completed canonically, so the result validates everywhere;
/// membership of the generators is only meaningful on the inner ball.
pub fn recover_colouring(
    tree: &TruncatedTree,
    reference: &LegalColouring,
    m: &PermGroup,
    n: &PermGroup,
    generators: &[Portrait],
    inner_depth: usize,
) -> Result<LegalColouring, ConstructError> {
    let p = tree.id(&Vertex::p()).expect("root");
    let q = tree.id(&Vertex::q()).expect("root");
    // generator list closed under inversion, for two-way orbit search
    let mut gens: Vec<Portrait> = Vec::new();
    for g in generators {
        gens.push(g.clone());
        gens.push(g.invert(tree, reference)?);
    }

    // Transversal words h_v with h_v(p) = v on part X and h_v(q) = v on
    // part Y. Around p: h_p = 1; for v adjacent to p, h_v fixes p and moves
    // q onto v; two or more steps out, h_v = h ∘ h_{v₂} where v₂ is the
    // same-part vertex two steps toward p and h fixes the vertex between.
    let mut transversal: BTreeMap<VertexId, Portrait> = BTreeMap::new();
    transversal.insert(p, Portrait::identity_global(tree, tree.addr(p)).expect("identity"));
    let mut order: Vec<VertexId> = (0..tree.len()).filter(|&id| id != p).collect();
    order.sort_by_key(|&id| (tree.distance_ids(p, id), id));
    let mut word_cache: BTreeMap<(VertexId, VertexId), BTreeMap<VertexId, Portrait>> =
        BTreeMap::new();
    for v in order {
        let path = tree.path_ids(p, v);
        let (centre, from) = if path.len() == 2 {
            (p, q)
        } else {
            (path[path.len() - 2], path[path.len() - 3])
        };
        let words = word_cache
            .entry((centre, from))
            .or_insert_with(|| arc_stabiliser_words(tree, reference, &gens, centre, from));
        let Some(step) = words.get(&v) else {
            if tree.info(v).depth <= inner_depth {
                return Err(ConstructError::NotTransitiveOnPart(tree.info(v).part));
            }
            continue;
        };
        let word = if path.len() == 2 {
            step.clone()
        } else {
            let Some(base_word) = transversal.get(&from) else {
                continue;
            };
            match step.compose(base_word, tree, reference) {
                Ok(w) => w,
                Err(_) => {
                    if tree.info(v).depth <= inner_depth {
                        return Err(ConstructError::InsufficientRange(
                            tree.addr(v).to_string(),
                        ));
                    }
                    continue;
                }
            }
        };
        // anchor each word at its part's root so later walks are short
        let anchor = match tree.info(v).part {
            Part::X => p,
            Part::Y => q,
        };
        match word.rebase(tree, reference, tree.addr(anchor)) {
            Ok(anchored) => {
                transversal.insert(v, anchored);
            }
            Err(_) => {
                if tree.info(v).depth <= inner_depth {
                    return Err(ConstructError::InsufficientRange(tree.addr(v).to_string()));
                }
            }
        }
    }

    // local groups at the roots, acting on neighbour slots
    let phi = root_bijection(tree, reference, &gens, &transversal, p, m)?;
    let psi = root_bijection(tree, reference, &gens, &transversal, q, n)?;

    // First pass: slot tables through the transversal words, wherever the
    // inverse word reaches the whole star.
    let mut assembled: Vec<Option<Vec<usize>>> = vec![None; tree.len()];
    for (&id, h) in &transversal {
        if !tree.is_internal_id(id) {
            continue;
        }
        let (anchor, bijection) = match tree.info(id).part {
            Part::X => (p, &phi),
            Part::Y => (q, &psi),
        };
        let Ok(h_inv) = h.invert(tree, reference) else {
            continue;
        };
        let anchor_nbrs: Vec<VertexId> = tree.neighbour_ids(anchor).collect();
        let nbrs: Vec<VertexId> = tree.neighbour_ids(id).collect();
        let mut table = Vec::with_capacity(nbrs.len());
        for nbr in nbrs {
            let Ok(pulled) = h_inv.evaluate_id(tree, reference, nbr) else {
                break;
            };
            let Some(slot) = anchor_nbrs.iter().position(|&x| x == pulled) else {
                break;
            };
            table.push(bijection.apply(slot));
        }
        if table.len() == tree.info(id).children.len() + 1 {
            assembled[id] = Some(table);
        }
    }

    // Second pass: keep the assembled region closed under "toward the root
    // edge" so the canonical completion beyond it stays legal, and demand
    // full coverage of the inner region.
    let mut recovered = vec![false; tree.len()];
    for id in 0..tree.len() {
        if assembled[id].is_none() {
            continue;
        }
        let info = tree.info(id);
        recovered[id] = info.depth == 0 || recovered[info.parent];
    }
    let mut tables: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for id in 0..tree.len() {
        if !tree.is_internal_id(id) {
            continue;
        }
        let info = tree.info(id);
        if recovered[id] {
            tables[id] = assembled[id].clone().expect("assembled");
        } else {
            if info.depth <= inner_depth {
                return Err(ConstructError::InsufficientRange(format!(
                    "no transversal chain for {}",
                    tree.addr(id)
                )));
            }
            // canonical completion: back arc forced, children in index order
            let size = tree.colour_count(info.part);
            let parent_info = tree.info(info.parent);
            let back = tables[parent_info.parent][parent_info.parent_slot];
            let mut table = vec![back];
            table.extend((0..size).filter(|&c| c != back));
            tables[id] = table;
        }
    }
    Ok(LegalColouring::from_slot_tables(tables))
}

/// The slot-to-colour bijection at a root: the lexicographically first
/// bijection conjugating the observed stabiliser action on the neighbour
/// slots onto the prescribed group exactly.
fn root_bijection(
    tree: &TruncatedTree,
    reference: &LegalColouring,
    gens: &[Portrait],
    transversal: &BTreeMap<VertexId, Portrait>,
    anchor: VertexId,
    prescribed: &PermGroup,
) -> Result<Perm, ConstructError> {
    let nbrs: Vec<VertexId> = tree.neighbour_ids(anchor).collect();
    let slot_of = |id: VertexId| nbrs.iter().position(|&x| x == id);
    let mut slot_perms: Vec<Perm> = Vec::new();
    // restrictions to the neighbour slots of every stabiliser word found:
    // direct generators fixing the anchor plus transversal-closure words
    let mut push_word = |w: &Portrait| -> Result<(), ConstructError> {
        if w.evaluate_id(tree, reference, anchor).ok() != Some(anchor) {
            return Ok(());
        }
        let mut images = vec![usize::MAX; nbrs.len()];
        for (i, &nbr) in nbrs.iter().enumerate() {
            let Ok(img) = w.evaluate_id(tree, reference, nbr) else {
                return Ok(());
            };
            let Some(slot) = slot_of(img) else {
                return Ok(());
            };
            images[i] = slot;
        }
        if let Ok(perm) = Perm::from_images(images) {
            if !slot_perms.contains(&perm) {
                slot_perms.push(perm);
            }
        }
        Ok(())
    };
    for g in gens {
        push_word(g)?;
    }
    for (&v, h_v) in transversal {
        for g in gens {
            let Ok(image) = g.evaluate_id(tree, reference, v) else {
                continue;
            };
            let Some(h_image) = transversal.get(&image) else {
                continue;
            };
            // u_{gv}⁻¹ ∘ g ∘ u_v stabilises the anchor
            let Ok(inner) = g.compose(h_v, tree, reference) else {
                continue;
            };
            let Ok(h_image_inv) = h_image.invert(tree, reference) else {
                continue;
            };
            let Ok(word) = h_image_inv.compose(&inner, tree, reference) else {
                continue;
            };
            push_word(&word)?;
        }
    }
    let observed = PermGroup::new(nbrs.len(), slot_perms)
        .expect("slot permutations share the neighbour degree");
    for candidate in all_perms(nbrs.len()) {
        let inv = candidate.inverse();
        let conjugated_in = observed
            .generators()
            .iter()
            .all(|s| prescribed.contains(&candidate.compose(s).compose(&inv)));
        if conjugated_in && observed.order() == prescribed.order() {
            return Ok(candidate);
        }
    }
    Err(ConstructError::LocalGroupMismatch {
        vertex: tree.addr(anchor).to_string(),
    })
}
