//! Barber's bipartite modularity in exact rational arithmetic, together with
//! the machinery around its maximization problem: solvers, the 3-PARTITION
//! gadget construction with its decision threshold, and executable checks of
//! the structural bounds that drive the construction.
//!
//! Everything that touches a modularity value is exact: thresholds and
//! optima are compared as arbitrary-precision fractions, and floating point
//! appears only in display helpers.

pub mod graph;
pub mod io;
pub mod lemmas;
pub mod modularity;
pub mod reduction;
pub mod rng;
pub mod solvers;

pub use graph::{
    all_community_stats, community_stats, BipartiteGraph, Color, CommunityStats, Division,
    GraphError, VertexId,
};
pub use modularity::{
    bipartite_modularity, delta_merge, delta_move, render_decimal, render_exact,
    standard_modularity, ModularityError, Rational,
};
pub use reduction::{GadgetGraph, Role, StarFamily, ThreePartitionInstance, TripleAssignment};
pub use solvers::{Method, SolveResult, SolverError};
