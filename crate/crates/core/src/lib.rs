//! Agglomerative hierarchical clustering regularized by a prior tree.
//!
//! A prior tree is encoded as the leaf-count ultrametric, blended with a
//! task-specific dissimilarity, clustered by a linkage rule, cut into flat
//! partitions and scored against keyword purchase records. The [`tuner`]
//! module searches the blend weight per segment and recombines the results.

pub mod error;
pub mod evaluation;
pub mod linkage;
pub mod metric_space;
pub mod registry;
pub mod synth;
pub mod tree;
pub mod tuner;

pub use error::{Error, Result};
pub use linkage::{cut, single_linkage, Dendrogram, FlatPartition, Linkage, Merge};
pub use metric_space::{blend, BlendWeight, DistanceMatrix};
pub use tree::{PriorTree, TreeFormat};
