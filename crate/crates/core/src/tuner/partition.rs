//! Coarse pre-partition strategies that split the label set into segments
//! clustered independently.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric_space::DistanceMatrix;
use crate::registry::Registry;
use crate::tree::PriorTree;

/// Everything a pre-partition strategy may look at.
#[derive(Debug, Clone, Copy)]
pub struct PartitionInput<'a> {
    /// Task-specific distances; their label order is the global order.
    pub task: &'a DistanceMatrix,
    /// Prior tree aligned to exactly the task labels.
    pub tree: &'a PriorTree,
    pub k: usize,
    pub seed: u64,
}

pub trait PrePartition: Send + Sync {
    fn name(&self) -> &'static str;

    /// Disjoint segments covering every label; labels inside a segment keep
    /// the global order.
    fn partition(&self, input: &PartitionInput<'_>) -> Result<Vec<Vec<String>>>;
}

/// Built-in strategies: `tree-cut`, `medoids`.
pub fn registry() -> Registry<dyn PrePartition> {
    Registry::<dyn PrePartition>::new("pre-partition strategy")
        .with("tree-cut", || Box::new(TreeCut))
        .with("medoids", || Box::new(Medoids::default()))
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::KOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// Leaf sets under the shallowest depth-frontier of the prior tree with at
/// least `k` nodes.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeCut;

impl PrePartition for TreeCut {
    fn name(&self) -> &'static str {
        "tree-cut"
    }

    fn partition(&self, input: &PartitionInput<'_>) -> Result<Vec<Vec<String>>> {
        let labels = input.task.labels();
        check_k(input.k, labels.len())?;
        let tree = input.tree;
        if tree.leaf_count() != labels.len() || labels.iter().any(|l| !tree.contains(l)) {
            return Err(Error::LabelMismatch(
                "prior tree is not aligned to the task labels".into(),
            ));
        }
        let frontier = tree.frontier(input.k);
        if frontier.len() != input.k {
            log::warn!(
                "tree cut cannot produce exactly {} segments; using {}",
                input.k,
                frontier.len()
            );
        }
        let mut segment_of = std::collections::HashMap::with_capacity(labels.len());
        for (s, &node) in frontier.iter().enumerate() {
            for leaf in tree.leaves_under(node) {
                segment_of.insert(leaf, s);
            }
        }
        let mut segments = vec![Vec::new(); frontier.len()];
        for l in labels {
            segments[segment_of[l.as_str()]].push(l.clone());
        }
        Ok(segments)
    }
}

/// k-medoids on the task distances: greedy BUILD plus SWAP descent, then
/// `restarts` seeded random initializations; the lowest total cost wins.
#[derive(Debug, Clone, Copy)]
pub struct Medoids {
    pub restarts: usize,
}

impl Default for Medoids {
    fn default() -> Self {
        Medoids { restarts: 8 }
    }
}

/// Total distance from every point to its nearest medoid.
pub fn medoid_cost(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..d.n())
        .map(|i| medoids.iter().map(|&m| d.get(i, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Index into `medoids` of the nearest medoid of every point; ties go to the
/// earlier medoid.
pub fn assign_to_medoids(d: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..d.n())
        .map(|i| {
            let mut best = 0;
            for (c, &m) in medoids.iter().enumerate().skip(1) {
                if d.get(i, m) < d.get(i, medoids[best]) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn build_init(d: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = d.n();
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            let cost: f64 = (0..n).map(|i| nearest[i].min(d.get(i, cand))).sum();
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, cand));
            }
        }
        let (_, m) = best.expect("k <= n");
        medoids.push(m);
        for (i, near) in nearest.iter_mut().enumerate() {
            *near = near.min(d.get(i, m));
        }
    }
    medoids
}

/// Best-improvement swaps until no swap lowers the cost.
fn swap_descent(d: &DistanceMatrix, mut medoids: Vec<usize>) -> (Vec<usize>, f64) {
    let n = d.n();
    let mut cost = medoid_cost(d, &medoids);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..medoids.len() {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let old = std::mem::replace(&mut medoids[slot], cand);
                let c = medoid_cost(d, &medoids);
                medoids[slot] = old;
                if c < cost - 1e-12 * cost.abs().max(1.0) && best.is_none_or(|(b, _, _)| c < b) {
                    best = Some((c, slot, cand));
                }
            }
        }
        match best {
            Some((c, slot, cand)) => {
                medoids[slot] = cand;
                cost = c;
            }
            None => return (medoids, cost),
        }
    }
}

impl Medoids {
    /// Medoid indices (sorted) of the best solution found.
    pub fn solve(&self, d: &DistanceMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
        let n = d.n();
        check_k(k, n)?;
        let (mut best, mut best_cost) = swap_descent(d, build_init(d, k));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..self.restarts {
            let init = sample(&mut rng, n, k).into_vec();
            let (m, c) = swap_descent(d, init);
            if c < best_cost {
                best = m;
                best_cost = c;
            }
        }
        best.sort_unstable();
        Ok(best)
    }
}

impl PrePartition for Medoids {
    fn name(&self) -> &'static str {
        "medoids"
    }

    fn partition(&self, input: &PartitionInput<'_>) -> Result<Vec<Vec<String>>> {
        let d = input.task;
        let medoids = self.solve(d, input.k, input.seed)?;
        let assignment = assign_to_medoids(d, &medoids);
        let mut segments = vec![Vec::new(); medoids.len()];
        for (label, &c) in d.labels().iter().zip(&assignment) {
            segments[c].push(label.clone());
        }
        // Medoids are sorted and each is nearest to itself, so no segment
        // is empty; order segments by their first member.
        segments.sort_by_key(|s| d.labels().iter().position(|l| l == &s[0]));
        Ok(segments)
    }
}
