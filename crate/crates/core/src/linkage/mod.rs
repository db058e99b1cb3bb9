//! Agglomerative clustering under interchangeable linkage rules.
//!
//! Each rule implements [`Linkage`] and is registered by name in
//! [`registry`]. All rules share one deterministic engine: the closest pair
//! of clusters merges first, ties broken by the smallest
//! `(min cluster id, max cluster id)`.

mod cut;
mod dendrogram;
mod engine;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use cut::{attainable_ks, cut, FlatPartition};
pub use dendrogram::{Dendrogram, Merge};
pub use engine::ActiveClusters;

use crate::error::Result;
use crate::metric_space::DistanceMatrix;
use crate::registry::Registry;
use engine::{agglomerate, MaxRule, MeanRule, MinRule};

/// A cluster-distance rule for agglomerative clustering.
pub trait Linkage: Send + Sync {
    fn name(&self) -> &'static str;

    /// Runs the agglomeration, calling `observer` with the active clusters
    /// and their linkage values before every merge.
    fn cluster_traced(
        &self,
        d: &DistanceMatrix,
        observer: Option<&mut dyn FnMut(&ActiveClusters)>,
    ) -> Result<Dendrogram>;

    fn cluster(&self, d: &DistanceMatrix) -> Result<Dendrogram> {
        self.cluster_traced(d, None)
    }
}

/// Minimum cross-pair distance. Its cophenetic matrix is the maximal
/// sub-dominant ultrametric (minimax path distance) of the input.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleLinkage;

/// Maximum cross-pair distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompleteLinkage;

/// Mean cross-pair distance (UPGMA).
#[derive(Debug, Clone, Copy, Default)]
pub struct AverageLinkage;

impl Linkage for SingleLinkage {
    fn name(&self) -> &'static str {
        "single"
    }
    fn cluster_traced(
        &self,
        d: &DistanceMatrix,
        observer: Option<&mut dyn FnMut(&ActiveClusters)>,
    ) -> Result<Dendrogram> {
        agglomerate::<MinRule>(d, observer)
    }
}

impl Linkage for CompleteLinkage {
    fn name(&self) -> &'static str {
        "complete"
    }
    fn cluster_traced(
        &self,
        d: &DistanceMatrix,
        observer: Option<&mut dyn FnMut(&ActiveClusters)>,
    ) -> Result<Dendrogram> {
        agglomerate::<MaxRule>(d, observer)
    }
}

impl Linkage for AverageLinkage {
    fn name(&self) -> &'static str {
        "average"
    }
    fn cluster_traced(
        &self,
        d: &DistanceMatrix,
        observer: Option<&mut dyn FnMut(&ActiveClusters)>,
    ) -> Result<Dendrogram> {
        agglomerate::<MeanRule>(d, observer)
    }
}

/// Built-in linkages: `single`, `complete`, `average`.
pub fn registry() -> Registry<dyn Linkage> {
    Registry::<dyn Linkage>::new("linkage")
        .with("single", || Box::new(SingleLinkage))
        .with("complete", || Box::new(CompleteLinkage))
        .with("average", || Box::new(AverageLinkage))
}

pub fn single_linkage(d: &DistanceMatrix) -> Result<Dendrogram> {
    SingleLinkage.cluster(d)
}

pub fn complete_linkage(d: &DistanceMatrix) -> Result<Dendrogram> {
    CompleteLinkage.cluster(d)
}

pub fn average_linkage(d: &DistanceMatrix) -> Result<Dendrogram> {
    AverageLinkage.cluster(d)
}

/// Clusters `d` with its points relabeled in the order `perm` (position
/// `p` holds original point `perm[p]`) and returns the cophenetic matrix
/// mapped back to the original order.
pub fn cophenetic_under_permutation(
    d: &DistanceMatrix,
    linkage: &dyn Linkage,
    perm: &[usize],
) -> Result<DistanceMatrix> {
    let order: Vec<String> = perm.iter().map(|&i| d.labels()[i].clone()).collect();
    let coph = linkage.cluster(&d.reorder(&order)?)?.cophenetic();
    coph.reorder(d.labels())
}

/// Runs `linkage` on `trials` seeded random permutations of `d` and reports
/// whether every cophenetic matrix matches the unpermuted one within 1e-12.
pub fn permutation_invariance_check(
    d: &DistanceMatrix,
    linkage: &dyn Linkage,
    trials: usize,
    seed: u64,
) -> Result<bool> {
    let base = linkage.cluster(d)?.cophenetic();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..d.n()).collect();
    for _ in 0..trials {
        perm.shuffle(&mut rng);
        let coph = cophenetic_under_permutation(d, linkage, &perm)?;
        if crate::metric_space::linf_distance(&base, &coph)? > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}
