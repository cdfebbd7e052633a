//! Chain event graphs for reliability analysis.
//!
//! The pipeline runs from a JSON [`model::ModelDocument`] to a validated
//! [`event_tree::ProbabilityTree`], its stage and position partitions
//! ([`staging`]), and the resulting [`ceg::Ceg`]. On top of the graph,
//! [`intervention`] models remedial maintenance as stochastic manipulations
//! and [`causal`] evaluates their effects, both through closed forms and
//! through exhaustive path enumeration.

pub mod causal;
pub mod ceg;
pub mod documents;
pub mod dot;
pub mod error;
pub mod event_tree;
pub mod fixtures;
pub mod intervention;
pub mod model;
pub mod paths;
pub mod staging;

pub use causal::{
    backdoor_adjustment, brute_force_effect, causal_effect_devent, causal_effect_edge_level,
    check_backdoor_partition, expected_effect_imperfect, search_backdoor_partition, BackdoorPartition,
    BackdoorReport,
};
pub use ceg::{build_ceg, root_to_sink_paths, Ceg, CegEdge, CegEdgeId, NodeId, NodeKind, Selector};
pub use error::{CegError, Result};
pub use event_tree::{
    build_event_tree, build_event_tree_with_tolerance, path_probability, root_to_leaf_paths,
    DEventId, EventTree, ProbabilityTree, TreeEdgeId, TreePath, VertexId,
};
pub use intervention::{
    conditioned_ceg, manipulated_ceg, validate_stochastic, RemedialRecord, StochasticManipulation,
};
pub use model::{LeafStatus, ModelDocument};
pub use paths::PathSet;
pub use staging::{
    compute_positions, compute_stages, infer_stages, subtrees_isomorphic, PositionPartition,
    StagePartition, StagedTree,
};

/// Absolute tolerance for every probability comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
