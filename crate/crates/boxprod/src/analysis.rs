//! Verdicts about the box product and the machinery that checks them.
//!
//! `predict` evaluates each criterion from the classifications of the two
//! factors alone and never extrapolates beyond a criterion's hypotheses: an
//! input outside them yields an explicit out-of-hypothesis verdict rather
//! than a fabricated value. `analyze` runs the verification batteries:
//! orbit labels against the brute-force closure, witness checkers,
//! primitivity certificates, discreteness probes and property batteries.

use crate::boxgroup::{BoxError, BoxProduct, FiniteApprox};
use crate::construct::{half_tree_restriction, rigid_element};
use crate::portrait::{for_each_member_fixing, random_member, Portrait};
use crate::tree::{Part, Vertex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A single verdict: decided with the criterion that produced it, or out of
/// the relevant criterion's hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict<T> {
    Decided {
        value: T,
        criterion: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<String>,
    },
    OutOfHypothesis {
        reason: String,
    },
}

impl<T: Clone> Verdict<T> {
    fn decided(value: T, criterion: &str) -> Self {
        Verdict::Decided {
            value,
            criterion: criterion.to_string(),
            witness: None,
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Verdict::Decided { value, .. } => Some(value),
            Verdict::OutOfHypothesis { .. } => None,
        }
    }

    fn attach_witness(&mut self, name: &str) {
        if let Verdict::Decided { witness, .. } = self {
            *witness = Some(name.to_string());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardinalityClass {
    /// At most countably infinite.
    AtMostCountable,
    /// Cardinality of the continuum.
    Continuum,
}

impl std::fmt::Display for CardinalityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CardinalityClass::AtMostCountable => write!(f, "<= aleph_0"),
            CardinalityClass::Continuum => write!(f, "2^aleph_0"),
        }
    }
}

/// The per-pair verdict record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub m_degree: usize,
    pub n_degree: usize,
    pub m_class: crate::group::Classification,
    pub n_class: crate::group::Classification,
    pub transitive: Verdict<bool>,
    pub primitive: Verdict<bool>,
    pub simple: Verdict<bool>,
    pub discrete: Verdict<bool>,
    pub subdegree_finite: Verdict<bool>,
    pub compact_stabilisers: Verdict<bool>,
    pub compactly_generated: Verdict<bool>,
    pub cardinality: Verdict<CardinalityClass>,
    pub quotient: crate::boxgroup::QuotientGraph,
    /// Suborbit sizes at distance 2k for the half-distances computed.
    pub suborbit_sizes: BTreeMap<usize, Vec<usize>>,
}

/// Evaluates every criterion as a pure function of the two classifications.
pub fn predict(bp: &BoxProduct) -> Result<AnalysisReport, BoxError> {
    let mc = bp.m().classify()?;
    let nc = bp.n().classify()?;
    let nontrivial = !bp.m().is_trivial() && !bp.n().is_trivial();
    let out = |reason: &str| -> Verdict<bool> {
        Verdict::OutOfHypothesis {
            reason: reason.to_string(),
        }
    };

    let transitive = if nontrivial {
        Verdict::decided(
            mc.transitive,
            "transitive exactly when the first factor is transitive",
        )
    } else {
        out("the transitivity criterion assumes nontrivial factors")
    };
    let primitive = if nontrivial {
        Verdict::decided(
            mc.primitive && !mc.regular && nc.transitive,
            "primitive exactly when the first factor is primitive and not regular and the second factor is transitive",
        )
    } else {
        out("the primitivity criterion assumes nontrivial factors")
    };
    let simple = if !nontrivial {
        out("the simplicity criterion needs at least one nontrivial factor")
    } else if !mc.generated_by_point_stabilisers || !nc.generated_by_point_stabilisers {
        let mut missing = Vec::new();
        if !mc.generated_by_point_stabilisers {
            missing.push("the first factor");
        }
        if !nc.generated_by_point_stabilisers {
            missing.push("the second factor");
        }
        out(&format!(
            "the simplicity criterion needs both factors generated by point stabilisers; {} is not",
            missing.join(" and ")
        ))
    } else {
        Verdict::decided(
            mc.transitive || nc.transitive,
            "simple exactly when some factor is transitive, given both factors generated by point stabilisers",
        )
    };
    let discrete = Verdict::decided(
        mc.semiregular && nc.semiregular,
        "discrete exactly when both factors are semi-regular",
    );
    let subdegree_finite = if nontrivial {
        // finite factors are subdegree-finite with finite orbits
        Verdict::decided(
            true,
            "subdegree-finite exactly when the first factor is subdegree-finite and the second factor has finite orbits; automatic for finite factors",
        )
    } else {
        out("the subdegree criterion assumes nontrivial factors")
    };
    let compact_stabilisers = if nontrivial {
        Verdict::decided(
            true,
            "point stabilisers compact exactly when the second factor is compact with the first factor's point stabilisers compact; automatic for finite factors",
        )
    } else {
        out("the stabiliser-compactness criterion assumes nontrivial closed factors")
    };
    let compactly_generated = if mc.transitive && nc.transitive {
        Verdict::decided(
            true,
            "compactly generated for transitive factors that are compactly generated with compact point stabilisers; automatic for finite factors",
        )
    } else {
        out("the compact-generation criterion assumes both factors transitive")
    };
    let cardinality = Verdict::Decided {
        value: if mc.semiregular && nc.semiregular {
            CardinalityClass::AtMostCountable
        } else {
            CardinalityClass::Continuum
        },
        criterion:
            "order at most countable exactly when both factors are semi-regular, continuum otherwise"
                .to_string(),
        witness: None,
    };

    let mut suborbit_sizes = BTreeMap::new();
    let q = Vertex::q();
    for k in 1..=2usize {
        if 2 * k <= bp.inner_depth() {
            let sizes: Vec<usize> = bp.suborbits(&q, k)?.iter().map(|s| s.size).collect();
            suborbit_sizes.insert(k, sizes);
        }
    }

    Ok(AnalysisReport {
        m_degree: bp.m().degree(),
        n_degree: bp.n().degree(),
        m_class: mc,
        n_class: nc,
        transitive,
        primitive,
        simple,
        discrete,
        subdegree_finite,
        compact_stabilisers,
        compactly_generated,
        cardinality,
        quotient: bp.quotient_graph(),
        suborbit_sizes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    InvariantPartition,
    DisconnectedOrbitalGraph,
    BlockSystem,
    FixingElement,
}

/// A partition of the inner part-Y vertices offered as an invariant witness
/// against primitivity, together with its checker outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionWitness {
    pub kind: WitnessKind,
    pub cells: BTreeMap<Vertex, usize>,
    pub cell_count: usize,
    pub check: WitnessCheck,
}

/// Outcome of running a witness checker.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub nontrivial: bool,
    pub non_universal: bool,
    pub invariant: bool,
    pub images_checked: usize,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.nontrivial && self.non_universal && self.invariant
    }
}

/// Result of the imprimitivity witness construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ImprimitivityWitness {
    Partition(PartitionWitness),
    /// The case of a regular first factor of degree at least three relies on
    /// an external primitivity result; no partition is constructed.
    Delegated { reason: String },
}

/// Builds the constructive imprimitivity witness according to which
/// hypothesis of the primitivity criterion fails, and runs its checker
/// against the generating family.
pub fn imprimitivity_witness(
    bp: &BoxProduct,
    approx: &FiniteApprox,
) -> Result<ImprimitivityWitness, BoxError> {
    let mc = bp.m().classify()?;
    let nc = bp.n().classify()?;
    if mc.primitive && !mc.regular && nc.transitive {
        return Err(BoxError::PredictedPrimitive);
    }
    let tree = bp.tree();
    let inner_y: Vec<Vertex> = tree
        .vertices()
        .filter(|v| v.part() == Part::Y && bp.is_inner(v))
        .cloned()
        .collect();

    let finish = |kind: WitnessKind, cells: BTreeMap<Vertex, usize>| -> ImprimitivityWitness {
        let check = check_partition(bp, approx, &cells);
        let cell_count = cells.values().collect::<BTreeSet<_>>().len();
        ImprimitivityWitness::Partition(PartitionWitness {
            kind,
            cells,
            cell_count,
            check,
        })
    };

    if !mc.transitive {
        // orbit classes of the induced action, read off the in-colours
        let orbits = bp.vertex_orbits();
        let cells: BTreeMap<Vertex, usize> = inner_y
            .iter()
            .map(|v| (v.clone(), orbits.label(v).expect("labelled").1))
            .collect();
        return Ok(finish(WitnessKind::InvariantPartition, cells));
    }
    if !nc.transitive {
        // a disconnected orbital graph: components of the orbit of a pair
        // inside one star
        let w = Vertex::q();
        let w2 = Vertex::p().child(0);
        let orbital = bp.orbital_graph(&w, &w2)?;
        let comp = orbital.graph.components();
        let cells: BTreeMap<Vertex, usize> = inner_y
            .iter()
            .map(|v| {
                let idx = orbital.vertex_index(v).expect("part-Y vertex");
                (v.clone(), comp[idx])
            })
            .collect();
        return Ok(finish(WitnessKind::DisconnectedOrbitalGraph, cells));
    }
    if !mc.primitive {
        // a proper block system of M lifted through every part-X star
        let blocks = first_proper_block_system(bp.m())?;
        let mut uf: Vec<usize> = (0..tree.vertex_count()).collect();
        fn find(uf: &mut Vec<usize>, x: usize) -> usize {
            if uf[x] != x {
                let r = find(uf, uf[x]);
                uf[x] = r;
            }
            uf[x]
        }
        for id in 0..tree.vertex_count() {
            if tree.info(id).part != Part::X || !tree.is_internal_id(id) {
                continue;
            }
            // group the neighbours of this star by the block of their colour
            let nbrs = bp.star_neighbours_by_colour(id);
            for (c1, n1) in nbrs.iter().enumerate() {
                for (c2, n2) in nbrs.iter().enumerate() {
                    if c1 < c2 && blocks[c1] == blocks[c2] {
                        let (r1, r2) = (find(&mut uf, *n1), find(&mut uf, *n2));
                        if r1 != r2 {
                            let (lo, hi) = (r1.min(r2), r1.max(r2));
                            uf[hi] = lo;
                        }
                    }
                }
            }
        }
        let cells: BTreeMap<Vertex, usize> = inner_y
            .iter()
            .map(|v| {
                let id = bp.vertex_id(v).expect("inner vertex");
                (v.clone(), find(&mut uf, id))
            })
            .collect();
        return Ok(finish(WitnessKind::BlockSystem, normalise_cells(cells)));
    }
    // M regular from here on
    if bp.m().degree() == 2 {
        // the distance-2 graph on part Y is a line; its bipartition is a
        // block system
        let q = Vertex::q();
        let cells: BTreeMap<Vertex, usize> = inner_y
            .iter()
            .map(|v| {
                let d = tree.distance(v, &q).expect("in tree");
                (v.clone(), (d / 2) % 2)
            })
            .collect();
        return Ok(finish(WitnessKind::BlockSystem, cells));
    }
    Ok(ImprimitivityWitness::Delegated {
        reason: "first factor regular of degree at least three: imprimitivity holds by an external primitivity criterion for graphs of connectivity one; no partition witness is constructed".to_string(),
    })
}

fn normalise_cells(cells: BTreeMap<Vertex, usize>) -> BTreeMap<Vertex, usize> {
    let mut remap = BTreeMap::new();
    let mut next = 0usize;
    let mut out = BTreeMap::new();
    for (v, c) in cells {
        let id = *remap.entry(c).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        out.insert(v, id);
    }
    out
}

/// The first proper nontrivial block system of a transitive imprimitive
/// group, scanning seed pairs (0, b) upward. Returned as block ids per point.
fn first_proper_block_system(g: &crate::group::PermGroup) -> Result<Vec<usize>, BoxError> {
    for b in 1..g.degree() {
        let partition = g.minimal_block(0, b)?;
        if !partition.is_universal() && !partition.is_trivial() {
            return Ok(partition.block_ids().to_vec());
        }
    }
    Err(BoxError::Group(crate::group::GroupError::NotTransitive))
}

/// Runs the partition checker: nontrivial, non-universal, and invariant
/// under every generator of the family wherever both images stay inside the
/// labelled region.
pub fn check_partition(
    bp: &BoxProduct,
    approx: &FiniteApprox,
    cells: &BTreeMap<Vertex, usize>,
) -> WitnessCheck {
    let cell_ids: BTreeSet<usize> = cells.values().copied().collect();
    let nontrivial = cell_ids.len() < cells.len();
    let non_universal = cell_ids.len() > 1;
    let mut invariant = true;
    let mut images_checked = 0usize;
    for g in approx.generators() {
        // every cell must land inside a single cell, where defined
        let mut image_cell: BTreeMap<usize, usize> = BTreeMap::new();
        for (v, &c) in cells {
            let Ok(img) = g.evaluate(bp.tree(), bp.colouring(), v) else {
                continue;
            };
            let Some(&img_c) = cells.get(&img) else {
                continue;
            };
            images_checked += 1;
            match image_cell.get(&c) {
                None => {
                    image_cell.insert(c, img_c);
                }
                Some(&prev) if prev != img_c => {
                    invariant = false;
                }
                _ => {}
            }
        }
    }
    WitnessCheck {
        nontrivial,
        non_universal,
        invariant,
        images_checked,
    }
}

/// One verified certificate that the invariant relation generated by a seed
/// pair collapses to the universal relation on the inner ball.
#[derive(Clone, Debug)]
pub struct PrimitivityCertificate {
    pub seed: (Vertex, Vertex),
    /// Present when the seed pair lies at distance greater than two: the
    /// rigid mover and the half-tree splice that relate a distance-2 pair.
    pub reduce: Option<ReduceStep>,
    /// The star centre where the relation collapses, with the seed colours
    /// whose block closure is universal.
    pub collapse: CollapseStep,
    /// Members carrying the collapsed star onto every inner star centre.
    pub transports: Vec<TransportStep>,
    /// Whether the transported star cliques connect every inner part-Y
    /// vertex into a single class.
    pub cover_connected: bool,
}

#[derive(Clone, Debug)]
pub struct ReduceStep {
    pub mover: Portrait,
    pub splice: Portrait,
    pub fixed_far: Vertex,
    pub new_pair: (Vertex, Vertex),
}

#[derive(Clone, Debug)]
pub struct CollapseStep {
    pub centre: Vertex,
    pub seed_colours: (usize, usize),
    pub closure_universal: bool,
}

#[derive(Clone, Debug)]
pub struct TransportStep {
    pub centre: Vertex,
    pub element: Portrait,
}

/// Builds and verifies a primitivity certificate for a seed pair of distinct
/// inner part-Y vertices. Every claimed image is re-checked by evaluation
/// and every element by membership; any failure is an error.
pub fn primitivity_certificate(
    bp: &BoxProduct,
    w: &Vertex,
    w2: &Vertex,
) -> Result<PrimitivityCertificate, BoxError> {
    let mc = bp.m().classify()?;
    let nc = bp.n().classify()?;
    if !(mc.primitive && !mc.regular && nc.transitive) {
        return Err(BoxError::CertificateHypothesis(
            "the first factor must be primitive and not regular and the second factor transitive"
                .to_string(),
        ));
    }
    if w.part() != Part::Y || w2.part() != Part::Y || w == w2 {
        return Err(BoxError::PartMismatch);
    }
    let tree = bp.tree();
    let col = bp.colouring();
    let member = |g: &Portrait| g.is_member(tree, bp.m(), bp.n());

    let path = tree.path(w, w2)?;
    // the star centre adjacent to w2 along the path
    let centre = path[path.len() - 2].clone();
    let (reduce, pair) = if path.len() == 3 {
        (None, (w.clone(), w2.clone()))
    } else {
        // distance > 2: relate a pair at distance 2 through the centre
        let far = path[path.len() - 3].clone(); // distance 2 from w2
        let x_far = col.arc_colour(tree, &centre, &far).expect("internal");
        let x_w2 = col.arc_colour(tree, &centre, w2).expect("internal");
        let stab = bp.m().stabiliser(x_far)?;
        let lambda = stab
            .generators()
            .iter()
            .find(|s| s.apply(x_w2) != x_w2)
            .cloned()
            .ok_or_else(|| {
                BoxError::CertificateStep(
                    "no stabiliser generator moves the target colour".to_string(),
                )
            })?;
        let mover = rigid_element(tree, col, &lambda.inverse(), &centre)?;
        // the mover fixes the centre and the far vertex but moves w2
        if mover.evaluate(tree, col, &far)? != far {
            return Err(BoxError::CertificateStep("mover must fix the far vertex".into()));
        }
        let moved = mover.evaluate(tree, col, w2)?;
        if moved == *w2 {
            return Err(BoxError::CertificateStep("mover must move the seed endpoint".into()));
        }
        if !member(&mover) {
            return Err(BoxError::CertificateStep("mover is not a member".into()));
        }
        // splice: agree with the mover on the centre's side, fix the far side
        let splice = half_tree_restriction(tree, col, &mover, &centre, &far)?;
        if splice.evaluate(tree, col, w)? != *w {
            return Err(BoxError::CertificateStep("splice must fix the near endpoint".into()));
        }
        if splice.evaluate(tree, col, w2)? != moved {
            return Err(BoxError::CertificateStep("splice must agree with the mover".into()));
        }
        if !member(&splice) {
            return Err(BoxError::CertificateStep("splice is not a member".into()));
        }
        let new_pair = (w2.clone(), moved);
        (
            Some(ReduceStep {
                mover,
                splice,
                fixed_far: far,
                new_pair: new_pair.clone(),
            }),
            new_pair,
        )
    };

    // collapse: the block closure of the related colours at the centre is
    // universal because M is primitive
    let c1 = col.arc_colour(tree, &centre, &pair.0).expect("internal");
    let c2 = col.arc_colour(tree, &centre, &pair.1).expect("internal");
    let closure_universal = bp.m().minimal_block(c1, c2)?.is_universal();
    let collapse = CollapseStep {
        centre: centre.clone(),
        seed_colours: (c1, c2),
        closure_universal,
    };
    if !closure_universal {
        return Err(BoxError::CertificateStep(
            "block closure of the collapsed colours is not universal".into(),
        ));
    }

    // transports: carry the collapsed star onto every inner part-X centre
    let mut transports = Vec::new();
    let mut uf: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    fn find(uf: &mut BTreeMap<Vertex, Vertex>, v: &Vertex) -> Vertex {
        let parent = uf.get(v).cloned().unwrap_or_else(|| v.clone());
        if &parent == v {
            return parent;
        }
        let root = find(uf, &parent);
        uf.insert(v.clone(), root.clone());
        root
    }
    let union = |uf: &mut BTreeMap<Vertex, Vertex>, a: &Vertex, b: &Vertex| {
        let (ra, rb) = (find(uf, a), find(uf, b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            uf.insert(hi, lo);
        }
    };
    for m_centre in tree.vertices().cloned().collect::<Vec<_>>() {
        if m_centre.part() != Part::X || !bp.is_inner(&m_centre) || tree.is_leaf(&m_centre) {
            continue;
        }
        let Some(element) = bp.same_orbit_with_element(&centre, &m_centre)? else {
            return Err(BoxError::CertificateStep(format!(
                "no transport onto {m_centre}"
            )));
        };
        if element.evaluate(tree, col, &centre)? != m_centre {
            return Err(BoxError::CertificateStep(format!(
                "transport image mismatch at {m_centre}"
            )));
        }
        if !member(&element) {
            return Err(BoxError::CertificateStep(format!(
                "transport onto {m_centre} is not a member"
            )));
        }
        let nbrs = tree.neighbours(&m_centre)?;
        for pair in nbrs.windows(2) {
            union(&mut uf, &pair[0], &pair[1]);
        }
        transports.push(TransportStep {
            centre: m_centre,
            element,
        });
    }
    let inner_y: Vec<Vertex> = tree
        .vertices()
        .filter(|v| v.part() == Part::Y && bp.is_inner(v))
        .cloned()
        .collect();
    let root0 = find(&mut uf, &inner_y[0]);
    let cover_connected = inner_y.iter().all(|v| find(&mut uf, v) == root0);
    if !cover_connected {
        return Err(BoxError::CertificateStep(
            "transported star cliques do not connect the inner ball".into(),
        ));
    }
    Ok(PrimitivityCertificate {
        seed: (w.clone(), w2.clone()),
        reduce,
        collapse,
        transports,
        cover_connected,
    })
}

/// Outcome of the non-discreteness search for a finite fixed set.
pub enum FixingOutcome {
    /// A nontrivial member fixing the set pointwise, with its verification.
    Witness(Portrait),
    /// Both factors are semi-regular; no witness exists.
    SemiRegular,
}

/// Searches for a nontrivial member fixing `phi` pointwise: picks a colour
/// with nontrivial stabiliser in one factor, an arc carrying that colour
/// with `phi` strictly inside the far half-tree, and splices the rigid
/// stabiliser element onto the near side.
pub fn nontrivial_fixing_member(
    bp: &BoxProduct,
    phi: &[Vertex],
) -> Result<FixingOutcome, BoxError> {
    let tree = bp.tree();
    let col = bp.colouring();
    let mc = bp.m().classify()?;
    let nc = bp.n().classify()?;
    if mc.semiregular && nc.semiregular {
        return Ok(FixingOutcome::SemiRegular);
    }
    let (part, group) = if !mc.semiregular {
        (Part::X, bp.m())
    } else {
        (Part::Y, bp.n())
    };
    // first colour with a nontrivial stabiliser and a stabiliser element
    // moving some other colour
    let degree = group.degree();
    let (alpha, sigma) = (0..degree)
        .find_map(|a| {
            let stab = group.stabiliser(a).ok()?;
            stab.generators().first().cloned().map(|s| (a, s))
        })
        .expect("a non-semi-regular group has a nontrivial point stabiliser");
    let beta = sigma.first_moved().expect("nontrivial");

    for id in 0..tree.vertex_count() {
        if tree.info(id).part != part || !tree.is_internal_id(id) {
            continue;
        }
        let v = bp.vertex_addr(id);
        let Some(w) = bp.neighbour_via_colour(id, alpha) else {
            continue;
        };
        let w_addr = bp.vertex_addr(w);
        // phi must lie strictly on w's side of the arc
        let separated = phi.iter().all(|f| {
            let dw = tree.distance(f, &w_addr).unwrap_or(usize::MAX);
            let dv = tree.distance(f, &v).unwrap_or(usize::MAX);
            dw < dv
        });
        if !separated {
            continue;
        }
        let rigid = rigid_element(tree, col, &sigma.inverse(), &v)?;
        let witness = half_tree_restriction(tree, col, &rigid, &v, &w_addr)?;
        // verification: member, fixes phi pointwise, moves the branch at beta
        if !witness.is_member(tree, bp.m(), bp.n()) {
            continue;
        }
        let Some(moved) = bp.neighbour_via_colour(id, beta) else {
            continue;
        };
        let moved_addr = bp.vertex_addr(moved);
        let Ok(image) = witness.evaluate(tree, col, &moved_addr) else {
            continue;
        };
        if image == moved_addr {
            continue;
        }
        let fixes_phi = phi
            .iter()
            .all(|f| witness.evaluate(tree, col, f).ok().as_ref() == Some(f));
        if fixes_phi {
            return Ok(FixingOutcome::Witness(witness));
        }
    }
    Err(BoxError::DepthInsufficient {
        needed: phi.iter().map(|f| f.depth()).max().unwrap_or(0) + 2,
        available: bp.tree().depth_limit(),
    })
}

/// Exhaustive discreteness probe for semi-regular factors: counts the
/// members fixing two part-Y vertices at distance 2, up to the given radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscretenessProbe {
    pub pair: (String, String),
    pub radius: usize,
    pub members: usize,
    pub nontrivial_members: usize,
}

pub fn discreteness_probe(bp: &BoxProduct, radius: usize) -> Result<DiscretenessProbe, BoxError> {
    let q = Vertex::q();
    let w2 = bp
        .tree()
        .sphere(&q, 2)?
        .vertices
        .first()
        .cloned()
        .expect("sphere of radius 2 is non-empty");
    let radius = radius.min(bp.tree().depth_limit());
    let mut members = 0usize;
    let mut nontrivial = 0usize;
    for_each_member_fixing(
        bp.tree(),
        bp.colouring(),
        bp.m(),
        bp.n(),
        &q,
        radius,
        std::slice::from_ref(&w2),
        5_000_000,
        |g| {
            members += 1;
            if !g.is_identity(bp.tree()) {
                nontrivial += 1;
            }
        },
    )?;
    Ok(DiscretenessProbe {
        pair: (q.to_string(), w2.to_string()),
        radius,
        members,
        nontrivial_members: nontrivial,
    })
}

/// Battery sizes and seeds for `analyze`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub battery: usize,
    pub seed: u64,
    pub certificate_pairs: usize,
    pub fixed_set_trials: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            battery: 100,
            seed: 0,
            certificate_pairs: 20,
            fixed_set_trials: 10,
        }
    }
}

/// One named verification outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verification {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The full analysis: the verdict report, serialized witnesses, and the
/// verification battery outcomes.
#[derive(Debug, Serialize)]
pub struct AnalysisOutcome {
    pub report: AnalysisReport,
    pub witnesses: BTreeMap<String, serde_json::Value>,
    pub verifications: Vec<Verification>,
}

impl AnalysisOutcome {
    pub fn all_passed(&self) -> bool {
        self.verifications.iter().all(|v| v.passed)
    }
}

/// Runs the prediction and the whole verification battery.
pub fn analyze(bp: &BoxProduct, config: &AnalyzeConfig) -> Result<AnalysisOutcome, BoxError> {
    let mut report = predict(bp)?;
    let mut witnesses: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    let mut verifications = Vec::new();
    let mut verify = |name: &str, passed: bool, detail: String| {
        verifications.push(Verification {
            name: name.to_string(),
            passed,
            detail,
        });
    };
    let approx = bp.finite_approx()?;

    // orbit criterion against the brute-force closure on the inner ball
    {
        let orbits = bp.vertex_orbits();
        let mut reps: BTreeMap<(Part, usize), Vec<Vertex>> = BTreeMap::new();
        let inner: Vec<Vertex> = bp
            .tree()
            .vertices()
            .filter(|v| bp.is_inner(v))
            .cloned()
            .collect();
        for v in &inner {
            reps.entry(orbits.label(v).expect("labelled"))
                .or_default()
                .push(v.clone());
        }
        let mut mismatches = 0usize;
        let mut compared = 0usize;
        for (label, members) in &reps {
            let closure: BTreeSet<Vertex> = bp
                .orbit_bruteforce(&approx, &members[0])?
                .into_iter()
                .collect();
            for v in &inner {
                if v.part() != label.0 {
                    continue;
                }
                compared += 1;
                let same_label = orbits.label(v) == Some(*label);
                if same_label != closure.contains(v) {
                    mismatches += 1;
                }
            }
        }
        verify(
            "orbit-criterion-oracle",
            mismatches == 0,
            format!("{compared} inner comparisons, {mismatches} mismatches"),
        );
    }

    // quotient graph: edge-orbit count is the product of the orbit counts
    {
        let expected = report.quotient.edge_count();
        let got = bp.edge_orbit_count();
        verify(
            "quotient-edge-orbits",
            got == expected,
            format!("edge orbits {got}, orbit-count product {expected}"),
        );
    }

    // suborbits: sizes sum to the sphere and match the local product bound
    {
        let q = Vertex::q();
        let mut ok = true;
        let mut detail = Vec::new();
        for (&k, sizes) in &report.suborbit_sizes {
            let sphere = bp.tree().sphere(&q, 2 * k)?.vertices.len();
            let sum: usize = sizes.iter().sum();
            let mut bounds_ok = true;
            for suborbit in bp.suborbits(&q, k)? {
                let bound = bp.suborbit_product_bound(&q, &suborbit.representative)?;
                if suborbit.size != bound || bound % suborbit.size != 0 {
                    bounds_ok = false;
                }
            }
            if sum != sphere || !bounds_ok {
                ok = false;
            }
            detail.push(format!("k={k}: sizes {sizes:?} sum {sum} sphere {sphere}"));
        }
        verify("suborbit-recursion", ok, detail.join("; "));
    }

    // primitivity: witness or certificates according to the prediction
    match report.primitive.value() {
        Some(false) => {
            match imprimitivity_witness(bp, &approx)? {
                ImprimitivityWitness::Partition(witness) => {
                    let passed = witness.check.passed();
                    verify(
                        "imprimitivity-witness",
                        passed,
                        format!(
                            "{:?}: {} cells, {} images checked",
                            witness.kind, witness.cell_count, witness.check.images_checked
                        ),
                    );
                    report.primitive.attach_witness("imprimitivity");
                    witnesses.insert(
                        "imprimitivity".to_string(),
                        serde_json::to_value(&witness).expect("serializable"),
                    );
                }
                ImprimitivityWitness::Delegated { reason } => {
                    verify("imprimitivity-witness", true, format!("delegated: {reason}"));
                    report.primitive.attach_witness("imprimitivity-delegated");
                    witnesses.insert(
                        "imprimitivity-delegated".to_string(),
                        serde_json::Value::String(reason),
                    );
                }
            }
        }
        Some(true) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let inner_y: Vec<Vertex> = bp
                .tree()
                .vertices()
                .filter(|v| v.part() == Part::Y && bp.is_inner(v))
                .cloned()
                .collect();
            let mut passed = 0usize;
            let mut failed = 0usize;
            for _ in 0..config.certificate_pairs {
                use rand::Rng;
                let a = inner_y[rng.random_range(0..inner_y.len())].clone();
                let b = inner_y[rng.random_range(0..inner_y.len())].clone();
                if a == b {
                    continue;
                }
                match primitivity_certificate(bp, &a, &b) {
                    Ok(_) => passed += 1,
                    Err(_) => failed += 1,
                }
            }
            verify(
                "primitivity-certificates",
                failed == 0 && passed > 0,
                format!("{passed} certificates verified, {failed} failed"),
            );
            report.primitive.attach_witness("primitivity-certificates");
            witnesses.insert(
                "primitivity-certificates".to_string(),
                serde_json::json!({ "verified": passed, "failed": failed }),
            );
        }
        None => {}
    }

    // discreteness: exhaustive probe or non-discreteness witnesses
    {
        let semiregular = report.m_class.semiregular && report.n_class.semiregular;
        if semiregular {
            let probe = discreteness_probe(bp, bp.tree().depth_limit())?;
            let passed = probe.nontrivial_members == 0;
            verify(
                "discreteness-probe",
                passed,
                format!(
                    "pointwise stabiliser of {:?} has {} members, {} nontrivial, radius {}",
                    probe.pair, probe.members, probe.nontrivial_members, probe.radius
                ),
            );
            report.discrete.attach_witness("discreteness-probe");
            witnesses.insert(
                "discreteness-probe".to_string(),
                serde_json::to_value(&probe).expect("serializable"),
            );
        } else {
            // nested fixed sets: breadth-first part-Y vertices near the root
            let ball: Vec<Vertex> = bp
                .tree()
                .vertices()
                .filter(|v| {
                    v.part() == Part::Y
                        && bp.tree().distance(v, &Vertex::q()).unwrap_or(usize::MAX)
                            <= bp.inner_depth().min(4)
                })
                .cloned()
                .collect();
            let mut found = 0usize;
            let mut failed = 0usize;
            for j in 1..=config.fixed_set_trials.min(ball.len()) {
                let phi: Vec<Vertex> = ball[..j].to_vec();
                match nontrivial_fixing_member(bp, &phi) {
                    Ok(FixingOutcome::Witness(witness)) => {
                        found += 1;
                        if found == 1 {
                            report.discrete.attach_witness("fixing-element");
                            witnesses.insert(
                                "fixing-element".to_string(),
                                serde_json::to_value(witness.to_json(bp.tree()))
                                    .expect("serializable"),
                            );
                        }
                    }
                    Err(BoxError::DepthInsufficient { .. }) => {
                        // the ladder has outgrown the truncation; a deeper
                        // ambient tree would be needed for larger sets
                        break;
                    }
                    _ => failed += 1,
                }
            }
            verify(
                "non-discreteness-witnesses",
                failed == 0 && found > 0,
                format!("{found} nested fixed sets admit a nontrivial fixing member"),
            );
        }
    }

    // cardinality coherence with the discreteness machinery
    {
        let expected = match report.cardinality.value() {
            Some(CardinalityClass::AtMostCountable) => true,
            Some(CardinalityClass::Continuum) => false,
            None => true,
        };
        let semiregular = report.m_class.semiregular && report.n_class.semiregular;
        verify(
            "cardinality-coherence",
            expected == semiregular,
            format!("cardinality class tracks semi-regularity ({semiregular})"),
        );
    }

    // membership closure under composition
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let mut ok = true;
        for _ in 0..config.battery {
            let g = random_member(bp.tree(), bp.colouring(), bp.m(), bp.n(), &Vertex::q(), &[], &mut rng)?;
            let h = random_member(bp.tree(), bp.colouring(), bp.m(), bp.n(), &Vertex::q(), &[], &mut rng)?;
            let gh = g.compose(&h, bp.tree(), bp.colouring())?;
            if !g.is_member(bp.tree(), bp.m(), bp.n())
                || !h.is_member(bp.tree(), bp.m(), bp.n())
                || !gh.is_member(bp.tree(), bp.m(), bp.n())
            {
                ok = false;
            }
        }
        verify(
            "membership-closure-battery",
            ok,
            format!("{} random composition triples", config.battery),
        );
    }

    // independence: path stabiliser members factor over the path fibres
    {
        use crate::construct::{path_decompose, PathProjection};
        let path = vec![
            Vertex::p().child(0),
            Vertex::p(),
            Vertex::q(),
            Vertex::q().child(0),
        ];
        let projection = PathProjection::new(bp.tree(), &path)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
        let mut ok = true;
        let trials = config.battery.div_ceil(5).max(1);
        for _ in 0..trials {
            let g = random_member(
                bp.tree(),
                bp.colouring(),
                bp.m(),
                bp.n(),
                &path[0],
                &path,
                &mut rng,
            )?;
            let factors = path_decompose(bp.tree(), bp.colouring(), &g, &projection)?;
            let mut product = factors[0].clone();
            for f in &factors[1..] {
                if !f.is_member(bp.tree(), bp.m(), bp.n()) {
                    ok = false;
                }
                product = product.compose(f, bp.tree(), bp.colouring())?;
            }
            for v in bp.tree().vertices() {
                if !bp.is_inner(v) {
                    continue;
                }
                if let (Ok(a), Ok(b)) = (
                    product.evaluate(bp.tree(), bp.colouring(), v),
                    g.evaluate(bp.tree(), bp.colouring(), v),
                ) {
                    if a != b {
                        ok = false;
                    }
                }
            }
        }
        verify(
            "path-factorisation-battery",
            ok,
            format!("{trials} random path stabiliser members factored"),
        );
    }

    // amalgam indices: the edge stabiliser sits at the root-colour orbit
    // index inside each vertex stabiliser
    {
        let amalgam = bp.amalgam_structure()?;
        let mut ok = true;
        for (vertex, index, edge) in [
            (&amalgam.vertex_order_x, amalgam.x_star_index, &amalgam.edge_order_from_x),
            (&amalgam.vertex_order_y, amalgam.y_star_index, &amalgam.edge_order_from_y),
        ] {
            if let (Some(v), Some(e)) = (vertex.exact, edge.exact) {
                ok &= v == index * e;
            }
            let expected = (index as f64).log10() + edge.log10;
            ok &= (vertex.log10 - expected).abs() < 1e-6;
        }
        verify(
            "amalgam-indices",
            ok,
            format!(
                "|G_p| {} |G_q| {} edge orders {} {}",
                amalgam.vertex_order_x,
                amalgam.vertex_order_y,
                amalgam.edge_order_from_x,
                amalgam.edge_order_from_y
            ),
        );
        witnesses.insert(
            "amalgam".to_string(),
            serde_json::to_value(&amalgam).expect("serializable"),
        );
    }

    Ok(AnalysisOutcome {
        report,
        witnesses,
        verifications,
    })
}
