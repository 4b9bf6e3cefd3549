//! Finite permutation groups given by generators, backed by a stabiliser chain.
//!
//! The chain is built deterministically with base points scanned in increasing
//! order, so order, membership and transversals are reproducible across runs.

use crate::graph::FiniteGraph;
use crate::perm::{Perm, PermError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("generator degree {found} does not match group degree {expected}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("point {point} out of range for degree {degree}")]
    PointOutOfRange { point: usize, degree: usize },
    #[error("operation requires a non-empty domain")]
    EmptyDomain,
    #[error("operation requires a transitive group")]
    NotTransitive,
    #[error("the two points must be distinct")]
    PointsEqual,
    #[error("domain bound exceeded: {needed} points > limit {limit}")]
    DomainBound { needed: u128, limit: usize },
    #[error("element enumeration exceeded cap of {0}")]
    EnumerationCap(usize),
    #[error("invalid permutation: {0}")]
    BadPerm(#[from] PermError),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// One level of the stabiliser chain: the orbit and transversal of `point`
/// under `gens`, which generate the pointwise stabiliser of all earlier base
/// points.
#[derive(Clone, Debug)]
struct ChainLevel {
    point: usize,
    /// `transversal[x]` maps `point` to `x` when `x` is in the orbit.
    transversal: Vec<Option<Perm>>,
}

#[derive(Clone, Debug)]
struct StabChain {
    levels: Vec<ChainLevel>,
}

/// Orbit of `point` with a transversal, by breadth-first search applying the
/// generators in order.
fn orbit_transversal(degree: usize, point: usize, gens: &[Perm]) -> Vec<Option<Perm>> {
    let mut transversal: Vec<Option<Perm>> = vec![None; degree];
    transversal[point] = Some(Perm::identity(degree));
    let mut queue = VecDeque::from([point]);
    while let Some(x) = queue.pop_front() {
        let u = transversal[x].clone().unwrap();
        for g in gens {
            let y = g.apply(x);
            if transversal[y].is_none() {
                transversal[y] = Some(g.compose(&u));
                queue.push_back(y);
            }
        }
    }
    transversal
}

impl StabChain {
    /// Builds the full chain by iterated orbit computation and Schreier
    /// generators. Each level's base point is the smallest point moved by the
    /// level group; Schreier generators are deduplicated between levels.
    fn build(degree: usize, gens: &[Perm]) -> StabChain {
        let mut levels = Vec::new();
        let mut current: Vec<Perm> = gens
            .iter()
            .filter(|g| !g.is_identity())
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        while !current.is_empty() {
            let point = (0..degree)
                .find(|&x| current.iter().any(|g| g.apply(x) != x))
                .expect("non-identity generator moves some point");
            let transversal = orbit_transversal(degree, point, &current);
            let mut next: BTreeSet<Perm> = BTreeSet::new();
            for x in 0..degree {
                let Some(u) = &transversal[x] else { continue };
                for s in &current {
                    let y = s.apply(x);
                    let v = transversal[y].as_ref().expect("orbit closed under generators");
                    let schreier = v.inverse().compose(&s.compose(u));
                    if !schreier.is_identity() {
                        next.insert(schreier);
                    }
                }
            }
            levels.push(ChainLevel { point, transversal });
            current = next.into_iter().collect();
        }
        StabChain { levels }
    }

    fn order(&self) -> u128 {
        self.levels
            .iter()
            .map(|l| l.transversal.iter().flatten().count() as u128)
            .try_fold(1u128, u128::checked_mul)
            .expect("group order exceeds u128")
    }

    fn contains(&self, g: &Perm) -> bool {
        let mut h = g.clone();
        for level in &self.levels {
            if h.is_identity() {
                return true;
            }
            let x = h.apply(level.point);
            match &level.transversal[x] {
                Some(u) => h = u.inverse().compose(&h),
                None => return false,
            }
        }
        h.is_identity()
    }
}

/// A permutation group on `{0, …, degree−1}` given by generators.
///
/// All queries are pure; the stabiliser chain is memoised on first use and the
/// memoisation is idempotent, so shared concurrent access is safe.
pub struct PermGroup {
    degree: usize,
    generators: Vec<Perm>,
    chain: OnceLock<StabChain>,
}

impl Clone for PermGroup {
    fn clone(&self) -> Self {
        let chain = OnceLock::new();
        if let Some(c) = self.chain.get() {
            let _ = chain.set(c.clone());
        }
        PermGroup {
            degree: self.degree,
            generators: self.generators.clone(),
            chain,
        }
    }
}

impl std::fmt::Debug for PermGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PermGroup(degree {}, ⟨", self.degree)?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, "⟩)")
    }
}

impl PermGroup {
    pub fn new(degree: usize, generators: Vec<Perm>) -> Result<Self, GroupError> {
        for g in &generators {
            if g.degree() != degree {
                return Err(GroupError::DegreeMismatch {
                    expected: degree,
                    found: g.degree(),
                });
            }
        }
        let mut gens: Vec<Perm> = Vec::new();
        for g in generators {
            if !g.is_identity() && !gens.contains(&g) {
                gens.push(g);
            }
        }
        Ok(PermGroup {
            degree,
            generators: gens,
            chain: OnceLock::new(),
        })
    }

    pub fn trivial(degree: usize) -> Self {
        PermGroup {
            degree,
            generators: Vec::new(),
            chain: OnceLock::new(),
        }
    }

    /// `Sym(degree)`, generated by a transposition and an n-cycle.
    pub fn symmetric(degree: usize) -> Self {
        let mut gens = Vec::new();
        if degree >= 2 {
            gens.push(Perm::from_cycles(degree, &[vec![0, 1]]).unwrap());
        }
        if degree >= 3 {
            gens.push(Perm::from_cycles(degree, &[(0..degree).collect()]).unwrap());
        }
        PermGroup::new(degree, gens).unwrap()
    }

    /// The cyclic group generated by the full cycle `(0 1 … degree−1)`.
    pub fn cyclic(degree: usize) -> Self {
        let gens = if degree >= 2 {
            vec![Perm::from_cycles(degree, &[(0..degree).collect()]).unwrap()]
        } else {
            Vec::new()
        };
        PermGroup::new(degree, gens).unwrap()
    }

    /// `Alt(degree)` for degree ≥ 3.
    pub fn alternating(degree: usize) -> Self {
        assert!(degree >= 3, "alternating group needs degree >= 3");
        let three = Perm::from_cycles(degree, &[vec![0, 1, 2]]).unwrap();
        let long = if degree % 2 == 1 {
            Perm::from_cycles(degree, &[(0..degree).collect()]).unwrap()
        } else {
            Perm::from_cycles(degree, &[(1..degree).collect()]).unwrap()
        };
        PermGroup::new(degree, vec![three, long]).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    fn chain(&self) -> &StabChain {
        self.chain.get_or_init(|| StabChain::build(self.degree, &self.generators))
    }

    /// Group order from the stabiliser chain.
    pub fn order(&self) -> u128 {
        self.chain().order()
    }

    pub fn contains(&self, g: &Perm) -> bool {
        if g.degree() != self.degree {
            return false;
        }
        self.chain().contains(g)
    }

    /// The orbit of `x`, sorted.
    pub fn orbit(&self, x: usize) -> Result<Vec<usize>, GroupError> {
        self.check_point(x)?;
        let transversal = orbit_transversal(self.degree, x, &self.generators);
        Ok((0..self.degree).filter(|&y| transversal[y].is_some()).collect())
    }

    /// All orbits, each sorted, ordered by smallest element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree];
        let mut out = Vec::new();
        for x in 0..self.degree {
            if seen[x] {
                continue;
            }
            let orbit = self.orbit(x).expect("in range");
            for &y in &orbit {
                seen[y] = true;
            }
            out.push(orbit);
        }
        out
    }

    /// Index of the orbit containing `x` in the `orbits()` ordering.
    pub fn orbit_index(&self, x: usize) -> Result<usize, GroupError> {
        self.check_point(x)?;
        Ok(self
            .orbits()
            .iter()
            .position(|o| o.binary_search(&x).is_ok())
            .expect("orbits cover the domain"))
    }

    /// An element mapping `from` to `to`, when one exists.
    pub fn element_mapping(&self, from: usize, to: usize) -> Option<Perm> {
        if from >= self.degree || to >= self.degree {
            return None;
        }
        let transversal = orbit_transversal(self.degree, from, &self.generators);
        transversal[to].clone()
    }

    /// An element mapping the ordered pair `from` onto `to`, when one exists:
    /// breadth-first search over the orbit of the pair.
    pub fn pair_transporter(
        &self,
        from: (usize, usize),
        to: (usize, usize),
    ) -> Option<Perm> {
        let in_range =
            |p: (usize, usize)| p.0 < self.degree && p.1 < self.degree;
        if !in_range(from) || !in_range(to) {
            return None;
        }
        let mut words: BTreeMap<(usize, usize), Perm> =
            BTreeMap::from([(from, Perm::identity(self.degree))]);
        let mut queue = VecDeque::from([from]);
        while let Some(pair) = queue.pop_front() {
            if pair == to {
                return words.get(&to).cloned();
            }
            let word = words[&pair].clone();
            for g in &self.generators {
                let next = (g.apply(pair.0), g.apply(pair.1));
                if let std::collections::btree_map::Entry::Vacant(e) = words.entry(next) {
                    e.insert(g.compose(&word));
                    queue.push_back(next);
                }
            }
        }
        words.get(&to).cloned()
    }

    /// The stabiliser of `x`, generated by the Schreier generators of the
    /// orbit of `x`.
    pub fn stabiliser(&self, x: usize) -> Result<PermGroup, GroupError> {
        self.check_point(x)?;
        let transversal = orbit_transversal(self.degree, x, &self.generators);
        let mut gens: BTreeSet<Perm> = BTreeSet::new();
        for y in 0..self.degree {
            let Some(u) = &transversal[y] else { continue };
            for s in &self.generators {
                let z = s.apply(y);
                let v = transversal[z].as_ref().expect("orbit closed");
                let schreier = v.inverse().compose(&s.compose(u));
                if !schreier.is_identity() {
                    gens.insert(schreier);
                }
            }
        }
        PermGroup::new(self.degree, gens.into_iter().collect())
    }

    /// Pointwise stabiliser of a list of points, by iterated stabilisers.
    pub fn pointwise_stabiliser(&self, points: &[usize]) -> Result<PermGroup, GroupError> {
        let mut g = self.clone();
        for &x in points {
            g = g.stabiliser(x)?;
        }
        Ok(g)
    }

    pub fn is_transitive(&self) -> bool {
        self.degree > 0 && self.orbit(0).expect("nonempty").len() == self.degree
    }

    /// Every group element, by closure under the generators.
    pub fn elements(&self, cap: usize) -> Result<Vec<Perm>, GroupError> {
        let mut seen: BTreeSet<Perm> = BTreeSet::new();
        seen.insert(Perm::identity(self.degree));
        let mut queue: VecDeque<Perm> = seen.iter().cloned().collect();
        while let Some(h) = queue.pop_front() {
            for g in &self.generators {
                let next = g.compose(&h);
                if seen.insert(next.clone()) {
                    if seen.len() > cap {
                        return Err(GroupError::EnumerationCap(cap));
                    }
                    queue.push_back(next);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// The finest G-invariant partition in which `a` and `b` share a block.
    ///
    /// Block closure: merging the seed pair and propagating merges through the
    /// generators until the partition is invariant.
    pub fn minimal_block(&self, a: usize, b: usize) -> Result<Partition, GroupError> {
        self.check_point(a)?;
        self.check_point(b)?;
        if a == b {
            return Err(GroupError::PointsEqual);
        }
        if !self.is_transitive() {
            return Err(GroupError::NotTransitive);
        }
        let mut uf = UnionFind::new(self.degree);
        let mut queue = VecDeque::new();
        uf.union(a, b);
        queue.push_back((a, b));
        while let Some((x, y)) = queue.pop_front() {
            for g in &self.generators {
                let (gx, gy) = (g.apply(x), g.apply(y));
                if uf.union(gx, gy) {
                    queue.push_back((gx, gy));
                }
            }
        }
        Ok(Partition::from_union_find(&mut uf))
    }

    /// Orbits of the stabiliser of `x`, ordered by smallest element.
    pub fn suborbits(&self, x: usize) -> Result<Vec<Vec<usize>>, GroupError> {
        Ok(self.stabiliser(x)?.orbits())
    }

    /// The orbital graph on the domain whose edges form the orbit of `{a, b}`.
    pub fn orbital_graph(&self, a: usize, b: usize) -> Result<FiniteGraph, GroupError> {
        self.check_point(a)?;
        self.check_point(b)?;
        if a == b {
            return Err(GroupError::PointsEqual);
        }
        let mut graph = FiniteGraph::new(self.degree);
        let norm = |x: usize, y: usize| if x < y { (x, y) } else { (y, x) };
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue = VecDeque::from([norm(a, b)]);
        seen.insert(norm(a, b));
        while let Some((x, y)) = queue.pop_front() {
            graph.add_edge(x, y);
            for g in &self.generators {
                let e = norm(g.apply(x), g.apply(y));
                if seen.insert(e) {
                    queue.push_back(e);
                }
            }
        }
        Ok(graph)
    }

    /// Transitivity, primitivity, regularity, semi-regularity and generation
    /// by point stabilisers, decided exactly.
    pub fn classify(&self) -> Result<Classification, GroupError> {
        if self.degree == 0 {
            return Err(GroupError::EmptyDomain);
        }
        let order = self.order();
        let orbits = self.orbits();
        let transitive = orbits.len() == 1;
        // semi-regular ⇔ every orbit has full length |G| (orbit–stabiliser).
        let semiregular = orbits.iter().all(|o| o.len() as u128 == order);
        let regular = transitive && semiregular;
        let primitive = transitive && self.all_blocks_universal()?;
        let generated_by_point_stabilisers = {
            let mut gens: BTreeSet<Perm> = BTreeSet::new();
            for x in 0..self.degree {
                gens.extend(self.stabiliser(x)?.generators.iter().cloned());
            }
            let sub = PermGroup::new(self.degree, gens.into_iter().collect())?;
            sub.order() == order
        };
        Ok(Classification {
            transitive,
            primitive,
            regular,
            semiregular,
            generated_by_point_stabilisers,
        })
    }

    fn all_blocks_universal(&self) -> Result<bool, GroupError> {
        for a in 0..self.degree {
            for b in (a + 1)..self.degree {
                if !self.minimal_block(a, b)?.is_universal() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn check_point(&self, x: usize) -> Result<(), GroupError> {
        if x >= self.degree {
            return Err(GroupError::PointOutOfRange {
                point: x,
                degree: self.degree,
            });
        }
        Ok(())
    }
}

/// Property record produced by [`PermGroup::classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub transitive: bool,
    pub primitive: bool,
    pub regular: bool,
    pub semiregular: bool,
    pub generated_by_point_stabilisers: bool,
}

/// A partition of the domain into disjoint non-empty blocks.
///
/// Canonical form: block ids are assigned in order of each block's first
/// appearance when scanning the domain upward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    block_of: Vec<usize>,
}

impl Partition {
    pub fn from_block_ids(raw: &[usize]) -> Partition {
        let mut remap: Vec<Option<usize>> = vec![None; raw.len() + 1];
        let mut next = 0;
        let mut block_of = Vec::with_capacity(raw.len());
        for &r in raw {
            let id = *remap[r].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            block_of.push(id);
        }
        Partition { block_of }
    }

    fn from_union_find(uf: &mut UnionFind) -> Partition {
        let raw: Vec<usize> = (0..uf.parent.len()).map(|x| uf.find(x)).collect();
        Partition::from_block_ids(&raw)
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.block_of
    }

    pub fn block_count(&self) -> usize {
        self.block_of.iter().max().map_or(0, |m| m + 1)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count()];
        for (x, &b) in self.block_of.iter().enumerate() {
            out[b].push(x);
        }
        out
    }

    /// Every block a singleton.
    pub fn is_trivial(&self) -> bool {
        self.block_count() == self.block_of.len()
    }

    /// A single block covering the domain.
    pub fn is_universal(&self) -> bool {
        self.block_count() <= 1
    }

    /// True when `g` maps blocks onto blocks.
    pub fn invariant_under(&self, g: &Perm) -> bool {
        if g.degree() != self.block_of.len() {
            return false;
        }
        let mut image_block: Vec<Option<usize>> = vec![None; self.block_count()];
        for x in 0..g.degree() {
            let b = self.block_of[x];
            let gb = self.block_of[g.apply(x)];
            match image_block[b] {
                None => image_block[b] = Some(gb),
                Some(prev) if prev != gb => return false,
                _ => {}
            }
        }
        true
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Unions the classes; keeps the smaller representative. Returns true if
    /// the classes were distinct.
    fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
        self.parent[hi] = lo;
        true
    }
}

/// The wreath product `M Wr N` in its product action on functions `Y → X`,
/// returned as a permutation group on `|X|^|Y|` points.
///
/// A function `f` is encoded as `Σ f(y)·|X|^y`. Generators are the coordinate
/// copies of `M`'s generators together with `N`'s generators permuting the
/// coordinates.
pub fn wreath_product_action(
    m: &PermGroup,
    n: &PermGroup,
    max_degree: usize,
) -> Result<PermGroup, GroupError> {
    let (mx, ny) = (m.degree(), n.degree());
    if mx == 0 || ny == 0 {
        return Err(GroupError::EmptyDomain);
    }
    let mut needed: u128 = 1;
    for _ in 0..ny {
        needed = needed.saturating_mul(mx as u128);
        if needed > max_degree as u128 {
            return Err(GroupError::DomainBound {
                needed,
                limit: max_degree,
            });
        }
    }
    let degree = needed as usize;
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut digits = Vec::with_capacity(ny);
        for _ in 0..ny {
            digits.push(idx % mx);
            idx /= mx;
        }
        digits
    };
    let encode = |digits: &[usize]| -> usize {
        digits.iter().rev().fold(0, |acc, &d| acc * mx + d)
    };
    let mut gens = Vec::new();
    for mu in m.generators() {
        for y in 0..ny {
            let images: Vec<usize> = (0..degree)
                .map(|idx| {
                    let mut digits = decode(idx);
                    digits[y] = mu.apply(digits[y]);
                    encode(&digits)
                })
                .collect();
            gens.push(Perm::from_images(images)?);
        }
    }
    for nu in n.generators() {
        let nu_inv = nu.inverse();
        let images: Vec<usize> = (0..degree)
            .map(|idx| {
                let digits = decode(idx);
                let moved: Vec<usize> = (0..ny).map(|y| digits[nu_inv.apply(y)]).collect();
                encode(&moved)
            })
            .collect();
        gens.push(Perm::from_images(images)?);
    }
    PermGroup::new(degree, gens)
}

/// Parses the group spec text format `degree; gen1; gen2; …` with 1-based
/// disjoint-cycle generators, e.g. `3; (1 2); (1 2 3)`.
pub fn parse_group_spec(text: &str) -> Result<PermGroup, GroupError> {
    let parse_err = |pos: usize, msg: &str| GroupError::Parse {
        pos,
        msg: msg.to_string(),
    };
    let mut parts = Vec::new();
    let mut offset = 0;
    for piece in text.split(';') {
        parts.push((offset, piece));
        offset += piece.len() + 1;
    }
    let (dpos, dtext) = parts[0];
    let degree: usize = dtext
        .trim()
        .parse()
        .map_err(|_| parse_err(dpos, "expected a degree number"))?;
    if degree == 0 {
        return Err(parse_err(dpos, "degree must be at least 1"));
    }
    let mut gens = Vec::new();
    for &(gpos, gtext) in &parts[1..] {
        if gtext.trim().is_empty() {
            continue;
        }
        let cycles = parse_cycles(gtext, gpos, degree)?;
        gens.push(Perm::from_cycles(degree, &cycles).map_err(|e| parse_err(gpos, &e.to_string()))?);
    }
    PermGroup::new(degree, gens)
}

/// Parses `(1 2)(3 4)`-style 1-based cycles, translating to 0-based points.
fn parse_cycles(text: &str, base: usize, degree: usize) -> Result<Vec<Vec<usize>>, GroupError> {
    let parse_err = |pos: usize, msg: String| GroupError::Parse { pos, msg };
    let bytes = text.as_bytes();
    let mut cycles = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c != '(' {
            return Err(parse_err(base + i, format!("expected '(' but found {c:?}")));
        }
        let open = i;
        i += 1;
        let mut cycle = Vec::new();
        loop {
            while i < bytes.len() && (bytes[i] as char).is_whitespace() {
                i += 1;
            }
            if i >= bytes.len() {
                return Err(parse_err(base + open, "unclosed cycle".to_string()));
            }
            if bytes[i] as char == ')' {
                i += 1;
                break;
            }
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(parse_err(
                    base + i,
                    format!("expected a point but found {:?}", bytes[i] as char),
                ));
            }
            let point: usize = text[start..i]
                .parse()
                .map_err(|_| parse_err(base + start, "point too large".to_string()))?;
            if point == 0 || point > degree {
                return Err(parse_err(
                    base + start,
                    format!("point {point} out of range 1..={degree}"),
                ));
            }
            cycle.push(point - 1);
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Renders a group back into the group-spec text format.
pub fn group_spec_string(g: &PermGroup) -> String {
    let mut out = g.degree().to_string();
    for gen in g.generators() {
        out.push_str("; ");
        out.push_str(&gen.to_string());
    }
    out
}

/// JSON form of a group spec: `{"degree":3,"generators":[[[1,2]],[[1,2,3]]]}`
/// with 1-based points.
#[derive(Serialize, Deserialize)]
pub struct GroupSpecJson {
    pub degree: usize,
    pub generators: Vec<Vec<Vec<usize>>>,
}

impl GroupSpecJson {
    pub fn to_group(&self) -> Result<PermGroup, GroupError> {
        let mut gens = Vec::new();
        for cycles in &self.generators {
            let mut zero_based = Vec::new();
            for cycle in cycles {
                let mut c = Vec::new();
                for &p in cycle {
                    if p == 0 || p > self.degree {
                        return Err(GroupError::PointOutOfRange {
                            point: p,
                            degree: self.degree,
                        });
                    }
                    c.push(p - 1);
                }
                zero_based.push(c);
            }
            gens.push(Perm::from_cycles(self.degree, &zero_based)?);
        }
        PermGroup::new(self.degree, gens)
    }

    pub fn from_group(g: &PermGroup) -> GroupSpecJson {
        GroupSpecJson {
            degree: g.degree(),
            generators: g
                .generators()
                .iter()
                .map(|gen| {
                    gen.cycles()
                        .into_iter()
                        .map(|c| c.into_iter().map(|p| p + 1).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive element count, independent of the stabiliser chain.
    fn exhaustive_order(g: &PermGroup) -> usize {
        g.elements(100_000).unwrap().len()
    }

    #[test]
    fn chain_order_matches_exhaustive_enumeration() {
        for g in [
            PermGroup::symmetric(3),
            PermGroup::symmetric(4),
            PermGroup::symmetric(5),
            PermGroup::alternating(4),
            PermGroup::alternating(5),
            PermGroup::cyclic(6),
            PermGroup::trivial(4),
            parse_group_spec("4; (1 2 3 4); (1 3)").unwrap(), // dihedral of order 8
            PermGroup::symmetric(8),
        ] {
            assert_eq!(g.order(), exhaustive_order(&g) as u128, "{g:?}");
        }
    }

    #[test]
    fn orbits_basic() {
        let c3 = PermGroup::cyclic(3);
        assert_eq!(c3.orbit(0).unwrap(), vec![0, 1, 2]);
        assert_eq!(PermGroup::trivial(3).orbit(0).unwrap(), vec![0]);
        let swap = PermGroup::new(3, vec![Perm::from_cycles(3, &[vec![0, 1]]).unwrap()]).unwrap();
        assert_eq!(swap.orbit(2).unwrap(), vec![2]);
        assert!(matches!(
            swap.orbit(5),
            Err(GroupError::PointOutOfRange { .. })
        ));
    }

    #[test]
    fn stabiliser_and_orbit_stabiliser_products() {
        let s3 = PermGroup::symmetric(3);
        assert_eq!(s3.stabiliser(0).unwrap().order(), 2);
        assert_eq!(PermGroup::cyclic(3).stabiliser(0).unwrap().order(), 1);
        let s4 = PermGroup::symmetric(4);
        assert_eq!(s4.orbit(0).unwrap().len() as u128 * s4.stabiliser(0).unwrap().order(), 24);
        for g in [PermGroup::alternating(4), PermGroup::cyclic(6), PermGroup::symmetric(5)] {
            for x in 0..g.degree() {
                assert_eq!(
                    g.orbit(x).unwrap().len() as u128 * g.stabiliser(x).unwrap().order(),
                    g.order()
                );
            }
        }
    }

    #[test]
    fn membership_by_sifting() {
        let a4 = PermGroup::alternating(4);
        assert!(a4.contains(&Perm::from_cycles(4, &[vec![0, 1, 2]]).unwrap()));
        assert!(!a4.contains(&Perm::from_cycles(4, &[vec![0, 1]]).unwrap()));
        assert!(a4.contains(&Perm::identity(4)));
    }

    #[test]
    fn minimal_block_examples() {
        let c4 = PermGroup::cyclic(4);
        let blocks = c4.minimal_block(0, 2).unwrap();
        assert_eq!(blocks.blocks(), vec![vec![0, 2], vec![1, 3]]);
        assert!(PermGroup::symmetric(3).minimal_block(0, 1).unwrap().is_universal());
        assert_eq!(c4.minimal_block(1, 1), Err(GroupError::PointsEqual));
        let swap = PermGroup::new(3, vec![Perm::from_cycles(3, &[vec![0, 1]]).unwrap()]).unwrap();
        assert_eq!(swap.minimal_block(0, 1), Err(GroupError::NotTransitive));
    }

    #[test]
    fn minimal_block_invariant_under_generators() {
        for g in [
            PermGroup::cyclic(4),
            PermGroup::cyclic(6),
            parse_group_spec("4; (1 2 3 4); (1 3)").unwrap(),
            PermGroup::symmetric(4),
        ] {
            for a in 0..g.degree() {
                for b in 0..g.degree() {
                    if a == b {
                        continue;
                    }
                    let p = g.minimal_block(a, b).unwrap();
                    assert_eq!(p.block_of(a), p.block_of(b));
                    for gen in g.generators() {
                        assert!(p.invariant_under(gen));
                    }
                }
            }
        }
    }

    /// Independent primitivity oracle: check invariance of every partition of
    /// the domain (feasible for degree ≤ 5).
    fn primitive_by_exhaustive_partitions(g: &PermGroup) -> bool {
        fn partitions(n: usize) -> Vec<Vec<usize>> {
            fn go(n: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if acc.len() == n {
                    out.push(acc.clone());
                    return;
                }
                let max = acc.iter().copied().max().map_or(0, |m| m + 1);
                for b in 0..=max {
                    acc.push(b);
                    go(n, acc, out);
                    acc.pop();
                }
            }
            let mut out = Vec::new();
            go(n, &mut Vec::new(), &mut out);
            out
        }
        if !g.is_transitive() {
            return false;
        }
        for ids in partitions(g.degree()) {
            let p = Partition::from_block_ids(&ids);
            if p.is_trivial() || p.is_universal() {
                continue;
            }
            if g.generators().iter().all(|gen| p.invariant_under(gen)) {
                return false;
            }
        }
        true
    }

    #[test]
    fn classify_examples() {
        let s3 = PermGroup::symmetric(3).classify().unwrap();
        assert!(s3.transitive && s3.primitive && !s3.regular && !s3.semiregular);
        assert!(s3.generated_by_point_stabilisers);

        let c3 = PermGroup::cyclic(3).classify().unwrap();
        assert!(c3.transitive && c3.primitive && c3.regular && c3.semiregular);
        assert!(!c3.generated_by_point_stabilisers);

        let swap = PermGroup::new(3, vec![Perm::from_cycles(3, &[vec![0, 1]]).unwrap()]).unwrap();
        assert!(!swap.classify().unwrap().transitive);

        assert_eq!(
            PermGroup::trivial(0).classify(),
            Err(GroupError::EmptyDomain)
        );
    }

    #[test]
    fn classify_primitive_matches_exhaustive_partition_search() {
        for g in [
            PermGroup::symmetric(3),
            PermGroup::symmetric(4),
            PermGroup::symmetric(5),
            PermGroup::alternating(4),
            PermGroup::cyclic(4),
            PermGroup::cyclic(5),
            parse_group_spec("4; (1 2 3 4); (1 3)").unwrap(),
            parse_group_spec("3; (1 2)").unwrap(),
        ] {
            let by_blocks = g.degree() > 0 && g.classify().unwrap().primitive;
            assert_eq!(by_blocks, primitive_by_exhaustive_partitions(&g), "{g:?}");
        }
    }

    #[test]
    fn suborbit_sizes() {
        let sizes = |g: &PermGroup, x: usize| {
            g.suborbits(x).unwrap().iter().map(|o| o.len()).collect::<Vec<_>>()
        };
        assert_eq!(sizes(&PermGroup::symmetric(3), 0), vec![1, 2]);
        assert_eq!(sizes(&PermGroup::cyclic(3), 0), vec![1, 1, 1]);
        assert_eq!(sizes(&PermGroup::symmetric(4), 0), vec![1, 3]);
    }

    #[test]
    fn orbital_graphs() {
        let k3 = PermGroup::symmetric(3).orbital_graph(0, 1).unwrap();
        assert_eq!(k3.edge_count(), 3);
        assert!(k3.is_connected());

        let g = PermGroup::new(4, vec![Perm::from_cycles(4, &[vec![0, 1], vec![2, 3]]).unwrap()])
            .unwrap();
        let single = g.orbital_graph(0, 1).unwrap();
        assert_eq!(single.edges().collect::<Vec<_>>(), vec![(0, 1)]);

        // connectivity of orbital graphs of primitive groups
        for g in [PermGroup::symmetric(4), PermGroup::alternating(5), PermGroup::cyclic(5)] {
            assert!(g.classify().unwrap().primitive);
            for b in 1..g.degree() {
                assert!(g.orbital_graph(0, b).unwrap().is_connected());
            }
        }
    }

    #[test]
    fn wreath_product_s3_wr_s2() {
        let w = wreath_product_action(&PermGroup::symmetric(3), &PermGroup::symmetric(2), 100)
            .unwrap();
        assert_eq!(w.degree(), 9);
        assert_eq!(w.order(), 72);
        let c = w.classify().unwrap();
        assert!(c.transitive && c.primitive && !c.regular);
    }

    #[test]
    fn wreath_primitivity_criterion_battery() {
        // primitive ⇔ M primitive, not regular, N transitive (N finite here)
        let cases: Vec<(PermGroup, PermGroup)> = vec![
            (PermGroup::symmetric(3), PermGroup::symmetric(2)),
            (PermGroup::cyclic(3), PermGroup::symmetric(2)),
            (PermGroup::symmetric(4), PermGroup::symmetric(2)),
            (PermGroup::alternating(4), PermGroup::cyclic(2)),
            (PermGroup::cyclic(4), PermGroup::cyclic(2)),
            (PermGroup::symmetric(2), PermGroup::symmetric(2)),
            (
                parse_group_spec("3; (1 2)").unwrap(),
                PermGroup::symmetric(2),
            ),
            (
                PermGroup::symmetric(3),
                parse_group_spec("2;").unwrap(),
            ),
        ];
        for (m, n) in cases {
            let Ok(w) = wreath_product_action(&m, &n, 64) else {
                continue;
            };
            let wc = w.classify().unwrap();
            let mc = m.classify().unwrap();
            let nc = n.classify().unwrap();
            assert_eq!(wc.transitive, mc.transitive, "{m:?} Wr {n:?}");
            assert_eq!(
                wc.primitive,
                mc.primitive && !mc.regular && nc.transitive,
                "{m:?} Wr {n:?}"
            );
            assert_eq!(
                w.order(),
                m.order().pow(n.degree() as u32) * n.order(),
                "{m:?} Wr {n:?}"
            );
        }
    }

    #[test]
    fn spec_parsing_round_trip_and_errors() {
        let g = parse_group_spec("3; (1 2); (1 2 3)").unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(parse_group_spec("2; (1 2)").unwrap().order(), 2);
        let err = parse_group_spec("3; (1 4)").unwrap_err();
        match err {
            GroupError::Parse { pos, msg } => {
                assert_eq!(pos, 6);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let round = parse_group_spec(&group_spec_string(&g)).unwrap();
        assert_eq!(round.order(), 6);
        assert_eq!(round.generators(), g.generators());

        let json: GroupSpecJson =
            serde_json::from_str(r#"{"degree":3,"generators":[[[1,2]],[[1,2,3]]]}"#).unwrap();
        assert_eq!(json.to_group().unwrap().order(), 6);
        let back = serde_json::to_string(&GroupSpecJson::from_group(&g)).unwrap();
        let reparsed: GroupSpecJson = serde_json::from_str(&back).unwrap();
        assert_eq!(reparsed.to_group().unwrap().order(), 6);
    }

    #[test]
    fn shared_groups_answer_identically_across_threads() {
        // compute-twice-same-answer: concurrent first use of the memoised
        // chain must agree
        let g = std::sync::Arc::new(PermGroup::symmetric(6));
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let g = g.clone();
                std::thread::spawn(move || (g.order(), g.stabiliser(0).unwrap().order()))
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for r in &results {
            assert_eq!(*r, (720, 120));
        }
    }

    #[test]
    fn element_mapping_walks_transversal() {
        let c4 = PermGroup::cyclic(4);
        let g = c4.element_mapping(1, 3).unwrap();
        assert_eq!(g.apply(1), 3);
        assert!(c4.contains(&g));
        let swap = PermGroup::new(3, vec![Perm::from_cycles(3, &[vec![0, 1]]).unwrap()]).unwrap();
        assert!(swap.element_mapping(0, 2).is_none());
    }
}
