//! The synaptic network.
//!
//! One node per subject. Nodes are linked when their initial features are
//! similar enough; each link keeps that similarity fixed and carries a
//! strength in `[0, cap]` that starts at 1. Reactivated nodes have their
//! links strengthened and their decay clock reset; periodic renormalization
//! decays every link by `exp(-t / λ)` and advances every clock.

mod affinity;
mod graph;
mod replay;
mod snapshot;

pub use affinity::{cosine, weighted_similarity, SimilarityWeights};
pub use graph::{
    Network, NodeId, Provenance, RenormRule, ReplayBuffer, ReplayEntry, SubjectNode, Synapse,
    DEFAULT_STRENGTH_CAP,
};
pub use replay::{sample_replay, shift_importances, ReplayDraw, ReplaySample, DEFAULT_IMPORTANCE_EPS};
pub use snapshot::{NetworkSnapshot, SnapshotEdge, SnapshotNode, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};
