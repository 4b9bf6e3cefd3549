//! Legal arc colourings of the truncated tree.
//!
//! A colouring assigns to every arc leaving an internal vertex a colour from
//! that vertex's own colour set, such that (1) the arcs out of a part-X
//! vertex are coloured bijectively by the first colour set, (2) likewise for
//! part-Y vertices and the second set, and (3) all arcs *into* a vertex carry
//! one single colour. Arcs out of truncation leaves do not exist, so the
//! bijection conditions apply at full-valency vertices only.

use crate::tree::{Part, TruncatedTree, TreeError, Vertex, VertexId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Outcome of validating a colouring: legal, or the first violated condition
/// in vertex order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColouringCheck {
    Legal,
    Violation {
        condition: u8,
        vertex: Vertex,
        detail: String,
    },
}

impl ColouringCheck {
    pub fn is_legal(&self) -> bool {
        matches!(self, ColouringCheck::Legal)
    }
}

impl fmt::Display for ColouringCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColouringCheck::Legal => write!(f, "legal"),
            ColouringCheck::Violation {
                condition,
                vertex,
                detail,
            } => write!(f, "condition {condition} violated at {vertex}: {detail}"),
        }
    }
}

/// An arc colouring stored as one slot table per internal vertex: slot 0 is
/// the arc toward the root edge, slot 1 + j the arc to child j. Leaves have
/// empty tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegalColouring {
    out: Vec<Vec<usize>>,
}

impl LegalColouring {
    /// The canonical colouring: breadth-first from the root edge, the arc
    /// back to the parent receives the parent's forced in-colour and the
    /// remaining arcs take the remaining colours in child order. The root
    /// arcs receive colour 0 on both sides.
    pub fn canonical(tree: &TruncatedTree) -> LegalColouring {
        Self::construct(tree, |_, remaining| remaining.to_vec())
    }

    /// A legal colouring with seeded random choices at every free step.
    /// Reproducible: the same seed yields the same colouring.
    pub fn random(tree: &TruncatedTree, seed: u64) -> LegalColouring {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::construct(tree, move |_, remaining| {
            let mut choice = remaining.to_vec();
            choice.shuffle(&mut rng);
            choice
        })
    }

    /// Shared breadth-first construction; `pick` orders the free colours for
    /// the child arcs of each vertex.
    fn construct(
        tree: &TruncatedTree,
        mut pick: impl FnMut(VertexId, &[usize]) -> Vec<usize>,
    ) -> LegalColouring {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
        for id in 0..tree.len() {
            if !tree.is_internal_id(id) {
                continue;
            }
            let info = tree.info(id);
            let size = tree.colour_count(info.part);
            // Slot 0 is forced by condition 3 once the edgeward neighbour's
            // in-colour is known; at the roots it is a free choice made by
            // `pick` over the full colour set.
            let (back, free): (usize, Vec<usize>) = if info.depth == 0 {
                let all: Vec<usize> = (0..size).collect();
                let ordered = pick(id, &all);
                (ordered[0], ordered[1..].to_vec())
            } else {
                // The arc back to the parent u must carry in_colour(u), which
                // was fixed when u's own parent arc was coloured.
                let u = info.parent;
                let in_colour_u = out[tree.info(u).parent][tree.info(u).parent_slot];
                let rest: Vec<usize> = (0..size).filter(|&c| c != in_colour_u).collect();
                (in_colour_u, pick(id, &rest))
            };
            let mut table = Vec::with_capacity(1 + free.len());
            table.push(back);
            table.extend(free);
            debug_assert_eq!(table.len(), info.children.len() + 1);
            out[id] = table;
        }
        LegalColouring { out }
    }

    /// Raw constructor from slot tables; pair with [`LegalColouring::validate`].
    pub fn from_slot_tables(tables: Vec<Vec<usize>>) -> LegalColouring {
        LegalColouring { out: tables }
    }

    /// Colour of the arc from `from` to the adjacent `to`, when `from` is
    /// internal.
    pub fn arc_colour(&self, tree: &TruncatedTree, from: &Vertex, to: &Vertex) -> Option<usize> {
        let fi = tree.id(from).ok()?;
        let ti = tree.id(to).ok()?;
        self.arc_colour_ids(tree, fi, ti)
    }

    pub(crate) fn arc_colour_ids(
        &self,
        tree: &TruncatedTree,
        from: VertexId,
        to: VertexId,
    ) -> Option<usize> {
        let table = &self.out[from];
        if table.is_empty() {
            return None;
        }
        let info = tree.info(from);
        if info.parent == to {
            return Some(table[0]);
        }
        let j = info.children.iter().position(|&c| c == to)?;
        Some(table[1 + j])
    }

    /// The single colour on the arcs into `v` (condition 3), read off the arc
    /// from `v`'s edgeward neighbour.
    pub fn in_colour(&self, tree: &TruncatedTree, v: &Vertex) -> Option<usize> {
        let id = tree.id(v).ok()?;
        Some(self.in_colour_id(tree, id))
    }

    pub(crate) fn in_colour_id(&self, tree: &TruncatedTree, id: VertexId) -> usize {
        let info = tree.info(id);
        self.out[info.parent][info.parent_slot]
    }

    /// The neighbour of `v` reached along the out-arc of colour `colour`.
    pub(crate) fn neighbour_via(
        &self,
        tree: &TruncatedTree,
        id: VertexId,
        colour: usize,
    ) -> Option<VertexId> {
        let table = &self.out[id];
        let slot = table.iter().position(|&c| c == colour)?;
        let info = tree.info(id);
        if slot == 0 {
            Some(info.parent)
        } else {
            info.children.get(slot - 1).copied()
        }
    }

    pub(crate) fn slot_table(&self, id: VertexId) -> &[usize] {
        &self.out[id]
    }

    /// Checks the three legality conditions, reporting the first violation in
    /// breadth-first vertex order.
    pub fn validate(&self, tree: &TruncatedTree) -> ColouringCheck {
        for id in 0..tree.len() {
            let info = tree.info(id);
            if tree.is_internal_id(id) {
                let size = tree.colour_count(info.part);
                let table = &self.out[id];
                let condition = match info.part {
                    Part::X => 1,
                    Part::Y => 2,
                };
                if table.len() != size {
                    return ColouringCheck::Violation {
                        condition,
                        vertex: info.addr.clone(),
                        detail: format!("expected {size} out-arc colours, found {}", table.len()),
                    };
                }
                let mut seen = vec![false; size];
                for &c in table {
                    if c >= size || seen[c] {
                        return ColouringCheck::Violation {
                            condition,
                            vertex: info.addr.clone(),
                            detail: "out-arcs are not coloured bijectively".to_string(),
                        };
                    }
                    seen[c] = true;
                }
            }
            // condition 3: arcs into this vertex agree with the edgeward one
            let expected = self.in_colour_id(tree, id);
            for &child in &info.children {
                if !tree.is_internal_id(child) {
                    continue;
                }
                let got = self.out[child][0];
                if got != expected {
                    return ColouringCheck::Violation {
                        condition: 3,
                        vertex: info.addr.clone(),
                        detail: format!(
                            "in-arc from {} has colour {got}, expected {expected}",
                            tree.addr(child)
                        ),
                    };
                }
            }
        }
        ColouringCheck::Legal
    }

    /// Serialises as a sorted list of arc records.
    pub fn to_json(&self, tree: &TruncatedTree) -> ColouringJson {
        let mut arcs = Vec::new();
        for id in 0..tree.len() {
            if self.out[id].is_empty() {
                continue;
            }
            let info = tree.info(id);
            let mut targets = vec![info.parent];
            targets.extend(info.children.iter().copied());
            for (slot, &to) in targets.iter().enumerate() {
                arcs.push(ArcColourJson {
                    from: info.addr.to_string(),
                    to: tree.addr(to).to_string(),
                    colour: self.out[id][slot],
                });
            }
        }
        arcs.sort();
        ColouringJson {
            m: tree.m(),
            n: tree.n(),
            depth: tree.depth_limit(),
            arcs,
        }
    }

    pub fn from_json(tree: &TruncatedTree, json: &ColouringJson) -> Result<LegalColouring, TreeError> {
        let mut out: Vec<Vec<usize>> = (0..tree.len())
            .map(|id| {
                if tree.is_internal_id(id) {
                    vec![usize::MAX; tree.info(id).children.len() + 1]
                } else {
                    Vec::new()
                }
            })
            .collect();
        for arc in &json.arcs {
            let from: Vertex = arc.from.parse()?;
            let to: Vertex = arc.to.parse()?;
            let fi = tree.id(&from)?;
            let ti = tree.id(&to)?;
            let info = tree.info(fi);
            let slot = if info.parent == ti {
                0
            } else {
                match info.children.iter().position(|&c| c == ti) {
                    Some(j) => 1 + j,
                    None => return Err(TreeError::NotAdjacent(arc.from.clone(), arc.to.clone())),
                }
            };
            out[fi][slot] = arc.colour;
        }
        Ok(LegalColouring { out })
    }

    #[cfg(test)]
    pub(crate) fn set_arc_colour_for_test(&mut self, id: VertexId, slot: usize, colour: usize) {
        self.out[id][slot] = colour;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcColourJson {
    pub from: String,
    pub to: String,
    pub colour: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColouringJson {
    pub m: usize,
    pub n: usize,
    pub depth: usize,
    pub arcs: Vec<ArcColourJson>,
}
