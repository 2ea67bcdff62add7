//! Simulator and algorithm library for topology-aware massively parallel
//! computation: networks with per-link bandwidths, per-round capacity cost,
//! lower bounds, and protocols for intersection, cartesian product, sorting
//! and binary joins.

pub mod asymstar;
pub mod bounds;
pub mod cartesian;
pub mod exact;
pub mod intersect;
pub mod joinstar;
pub mod oracle;
pub mod simkernel;
pub mod sortnet;
pub mod topology;

pub use asymstar::{
    asym_star_intersect, opt_split, opt_split3, rf_star_intersect, sf_star_intersect, AsymRun, AsymStrategy,
};
pub use bounds::{all_bounds, AsymVariant, BoundError, BoundKind, BoundReport, CoverChoice, Witness};
pub use cartesian::{
    generalized_star_cartesian, star_cartesian, tree_cartesian, whc_unequal, CpRun, CpStrategy, SquarePlan,
};
pub use exact::{Ext, Surd, Q};
pub use intersect::{star_intersect, tree_intersect};
pub use joinstar::{packcp, star_join, weighted_hash_join, PackStrategy};
pub use oracle::{opt_one_round, sandwich_check, OracleError, OracleResult, Sandwich, Task};
pub use simkernel::{
    cost, send, CostReport, Distribution, Elem, HashFamily, Local, NodeState, Rel, Sim, SimError, TrafficTrace,
};
pub use sortnet::{send_all_to_max, terasort, wts_sort, SortPlan};
pub use topology::{
    build_star, edge_cut, enumerate_minimal_covers, normalize_tree, orient, Cover, EdgeCut, EdgeId, NodeId, NodeKind,
    OrientedTree, Topology, TopologyError,
};
