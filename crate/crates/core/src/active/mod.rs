//! Walk enumeration, the coordination graph between sensors and
//! maximum-entropy joint-walk planning.

mod bound;
mod coordination;
mod search;
mod walks;
mod wire;

pub use bound::{bound_report, compute_xi, loss_bound, BoundReport, LossBound};
pub use coordination::{
    adjacency_vector, compute_phi, connected_components, max_abs_cross, Components,
    CoordinationState, Phi,
};
pub use search::{
    centralized_joint_walk, joint_space_size, max_entropy_joint_walk, plan_components,
    FusedJointModel, JointWalk, JointWalkModel, PosteriorJointModel, DEFAULT_SEARCH_BUDGET,
};
pub use walks::{enumerate_walks, induced_unobserved, Walk, WalkSet};
pub use wire::{
    decode_adjacency, decode_phi, encode_adjacency, encode_phi, psi_hash, PHI_HEADER_WORDS,
};
