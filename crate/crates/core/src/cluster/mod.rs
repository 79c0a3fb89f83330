//! Octree clustering of the unknowns and the near/far block partition.

mod partition;
mod tree;

pub use partition::{
    admissible, cube_gap, parse_pattern, write_pattern, BlockPartition, FarBlock, NearFieldGraph, PatternEntry,
    DEFAULT_ETA,
};
pub use tree::{ClusterNode, ClusterTree, DEFAULT_LEAF_SIZE, DEFAULT_MAX_LEVEL};
