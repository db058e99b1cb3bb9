use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::Dendrogram;
use crate::error::{Error, Result};

/// Assignment of every label to one of `k` non-empty clusters `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatPartition {
    labels: Vec<String>,
    assignment: Vec<usize>,
    k: usize,
}

impl FlatPartition {
    pub fn new(labels: Vec<String>, assignment: Vec<usize>) -> Result<Self> {
        if labels.len() != assignment.len() {
            return Err(Error::LabelMismatch(format!(
                "{} labels but {} assignments",
                labels.len(),
                assignment.len()
            )));
        }
        let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::InvalidRecord(format!("cluster index {empty} has no members")));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(FlatPartition {
            labels,
            assignment,
            k,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label_to_cluster(&self) -> HashMap<&str, usize> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.assignment.iter().copied())
            .collect()
    }

    /// Member labels per cluster, clusters in index order.
    pub fn clusters(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.k];
        for (l, &c) in self.labels.iter().zip(&self.assignment) {
            out[c].push(l.as_str());
        }
        out
    }

    /// Whether every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &FlatPartition) -> bool {
        let theirs = coarser.label_to_cluster();
        let mut image: Vec<Option<usize>> = vec![None; self.k];
        for (l, &c) in self.labels.iter().zip(&self.assignment) {
            let Some(&t) = theirs.get(l.as_str()) else {
                return false;
            };
            match image[c] {
                None => image[c] = Some(t),
                Some(prev) if prev != t => return false,
                _ => {}
            }
        }
        true
    }

    /// `label,cluster` CSV.
    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "cluster"])?;
        for (l, c) in self.labels.iter().zip(&self.assignment) {
            w.write_record([l.as_str(), &c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<partition>", e))?;
        Ok(())
    }

    pub fn read_from(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut labels = Vec::new();
        let mut assignment = Vec::new();
        for row in r.records() {
            let row = row?;
            labels.push(row.get(0).unwrap_or_default().to_string());
            let c = row.get(1).unwrap_or_default();
            assignment.push(c.trim().parse().map_err(|_| {
                Error::InvalidRecord(format!("cluster index {c:?} is not a non-negative integer"))
            })?);
        }
        FlatPartition::new(labels, assignment)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f)
    }
}

/// Every `K` for which [`cut`] succeeds, ascending.
///
/// A cut keeps whole height levels: after applying all merges at or below
/// some height there are `n - (#merges applied)` clusters.
pub fn attainable_ks(dend: &Dendrogram) -> Vec<usize> {
    let n = dend.n();
    let merges = dend.merges();
    let mut ks = vec![n];
    for (s, m) in merges.iter().enumerate() {
        let level_ends = merges.get(s + 1).is_none_or(|next| next.height > m.height);
        if level_ends {
            ks.push(n - (s + 1));
        }
    }
    ks.sort_unstable();
    ks
}

/// Flat partition with exactly `k` clusters.
///
/// Applies every merge whose height is at most that of the `(n-k)`-th
/// merge; equal-height merges are never split, so when ties make `k`
/// unreachable an [`Error::UnattainableK`] carries the nearest attainable
/// counts. Clusters are numbered by first appearance in label order.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<FlatPartition> {
    let n = dend.n();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let merges = dend.merges();
    let applied = if k == n {
        0
    } else {
        let threshold = merges[n - k - 1].height;
        merges.partition_point(|m| m.height <= threshold)
    };
    if n - applied != k {
        let ks = attainable_ks(dend);
        return Err(Error::UnattainableK {
            requested: k,
            below: ks.iter().copied().filter(|&x| x < k).max(),
            above: ks.iter().copied().filter(|&x| x > k).min(),
        });
    }

    // Union-find over cluster ids; merge node n+s points at its children.
    let mut parent: Vec<usize> = (0..n + applied).collect();
    for (s, m) in merges[..applied].iter().enumerate() {
        parent[m.left] = n + s;
        parent[m.right] = n + s;
    }
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    let mut index: HashMap<usize, usize> = HashMap::with_capacity(k);
    let mut assignment = Vec::with_capacity(n);
    for leaf in 0..n {
        let r = root(&mut parent, leaf);
        let next = index.len();
        assignment.push(*index.entry(r).or_insert(next));
    }
    FlatPartition::new(dend.labels().to_vec(), assignment)
}
