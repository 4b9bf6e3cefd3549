//! Box products of permutation groups, modelled on depth-truncated biregular
//! trees.
//!
//! The crate provides finite permutation groups with a stabiliser-chain
//! backend, truncated biregular trees with legal arc colourings, portrait
//! arithmetic for the universal group with prescribed local actions, and the
//! orbit, primitivity, discreteness and cardinality analysis of the induced
//! action on one part of the bipartition, cross-checked against brute-force
//! oracles and machine-checkable witnesses.

pub mod analysis;
pub mod boxgroup;
pub mod colouring;
pub mod construct;
pub mod dot;
pub mod graph;
pub mod group;
pub mod perm;
pub mod portrait;
pub mod tree;

pub use analysis::{
    analyze, check_partition, discreteness_probe, imprimitivity_witness,
    nontrivial_fixing_member, predict, primitivity_certificate, AnalysisOutcome, AnalysisReport,
    AnalyzeConfig, CardinalityClass, CollapseStep, DiscretenessProbe, FixingOutcome,
    ImprimitivityWitness, PartitionWitness, PrimitivityCertificate, ReduceStep, TransportStep,
    Verdict, Verification, WitnessCheck, WitnessKind,
};
pub use boxgroup::{
    AmalgamReport, BoxError, BoxOrbitalGraph, BoxProduct, FiniteApprox, QuotientGraph, Suborbit,
    TowerOrder, VertexOrbits,
};
pub use colouring::{ColouringCheck, ColouringJson, LegalColouring};
pub use construct::{
    conjugating_element, from_colour_pair, half_tree_restriction, path_decompose, recover_colouring,
    rigid_element, ConstructError, PathProjection,
};
pub use graph::FiniteGraph;
pub use group::{
    group_spec_string, parse_group_spec, wreath_product_action, Classification, GroupError,
    GroupSpecJson, Partition, PermGroup,
};
pub use perm::{Perm, PermError};
pub use portrait::{
    for_each_member_fixing, random_member, ColourPerm, Portrait, PortraitError, PortraitJson,
};
pub use tree::{Arc, Part, Sphere, TreeError, TreeParams, TruncatedTree, Vertex};
