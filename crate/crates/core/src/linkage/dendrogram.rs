use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::{read_labels, write_labels, DistanceMatrix};
use crate::tree::quote_label;

/// One agglomeration step joining clusters `left` and `right` (`left < right`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram over `n` labeled leaves.
///
/// Cluster ids `0..n` are the leaves in label order; the `s`-th merge
/// creates cluster `n + s`. Heights never decrease along the sequence and
/// the merges form a single full binary tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    labels: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Validates and wraps a merge sequence. Child ids are normalized so
    /// that `left < right`.
    pub fn new(labels: Vec<String>, mut merges: Vec<Merge>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidDendrogram("no leaves".into()));
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidDendrogram(format!(
                "{n} leaves need {} merges, got {}",
                n - 1,
                merges.len()
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        let mut sizes: Vec<usize> = vec![1; n];
        let mut last = f64::NEG_INFINITY;
        for (s, m) in merges.iter_mut().enumerate() {
            let limit = n + s;
            if m.left > m.right {
                std::mem::swap(&mut m.left, &mut m.right);
            }
            if m.left == m.right || m.right >= limit {
                return Err(Error::InvalidDendrogram(format!(
                    "merge {s} joins ({}, {}) but only ids below {limit} exist",
                    m.left, m.right
                )));
            }
            for c in [m.left, m.right] {
                if std::mem::replace(&mut used[c], true) {
                    return Err(Error::InvalidDendrogram(format!("cluster {c} merged twice")));
                }
            }
            if !m.height.is_finite() || m.height < 0.0 {
                return Err(Error::InvalidDendrogram(format!(
                    "merge {s} has invalid height {}",
                    m.height
                )));
            }
            if m.height < last {
                return Err(Error::InvalidDendrogram(format!(
                    "merge {s} height {} is below the previous height {last}",
                    m.height
                )));
            }
            last = m.height;
            let expected = sizes[m.left] + sizes[m.right];
            if m.size != expected {
                return Err(Error::InvalidDendrogram(format!(
                    "merge {s} has size {} but its children hold {expected}",
                    m.size
                )));
            }
            sizes.push(expected);
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Dendrogram { labels, merges })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Number of leaves.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }

    /// Height of the last merge, or 0 for a single leaf.
    pub fn top_height(&self) -> f64 {
        self.merges.last().map_or(0.0, |m| m.height)
    }

    /// Leaf indices under each cluster id, for ids `0..2n-1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut out: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut v = out[m.left].clone();
            v.extend_from_slice(&out[m.right]);
            out.push(v);
        }
        out
    }

    /// Cophenetic ultrametric: entry `(i, j)` is the height of the lowest
    /// merge containing both leaves.
    pub fn cophenetic(&self) -> DistanceMatrix {
        let n = self.n();
        let mut values = vec![0.0; n * (n - 1) / 2];
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        members.reserve(n.saturating_sub(1));
        for m in &self.merges {
            let left = std::mem::take(&mut members[m.left]);
            let right = std::mem::take(&mut members[m.right]);
            for &a in &left {
                for &b in &right {
                    let (i, j) = if a < b { (a, b) } else { (b, a) };
                    values[crate::metric_space::condensed_index(n, i, j)] = m.height;
                }
            }
            let mut joined = left;
            joined.extend(right);
            members.push(joined);
        }
        DistanceMatrix::from_condensed(self.labels.clone(), values)
            .expect("validated heights are finite and non-negative")
    }

    /// Nested-parenthesis text; every internal node is annotated with its
    /// merge height, e.g. `((a,b)0.5,c)1;`.
    pub fn to_newick(&self) -> String {
        let n = self.n();
        if self.merges.is_empty() {
            return format!("{};", quote_label(&self.labels[0]));
        }
        enum Step {
            Enter(usize),
            Text(String),
        }
        let mut out = String::new();
        let mut stack = vec![Step::Enter(2 * n - 2)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Text(s) => out.push_str(&s),
                Step::Enter(id) if id < n => out.push_str(&quote_label(&self.labels[id])),
                Step::Enter(id) => {
                    let m = self.merges[id - n];
                    out.push('(');
                    stack.push(Step::Text(format!("){}", m.height)));
                    stack.push(Step::Enter(m.right));
                    stack.push(Step::Text(",".into()));
                    stack.push(Step::Enter(m.left));
                }
            }
        }
        out.push(';');
        out
    }

    /// Merge-table CSV (`left,right,height,size`) plus the label order.
    pub fn write_to(&self, table: impl Write, order: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(table);
        w.write_record(["left", "right", "height", "size"])?;
        for m in &self.merges {
            w.write_record([
                m.left.to_string(),
                m.right.to_string(),
                m.height.to_string(),
                m.size.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dendrogram>", e))?;
        write_labels(&self.labels, order)
    }

    pub fn read_from(table: impl Read, order: impl Read) -> Result<Self> {
        let labels = read_labels(order)?;
        let mut r = csv::Reader::from_reader(table);
        let merges = r.deserialize().collect::<Result<Vec<Merge>, _>>()?;
        Dendrogram::new(labels, merges)
    }

    /// Reads `path` and its `.labels` sidecar.
    pub fn read(path: &Path) -> Result<Self> {
        let side = crate::metric_space::sidecar_path(path);
        let table = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let order = std::fs::File::open(&side).map_err(|e| Error::io(&side, e))?;
        Self::read_from(table, order)
    }
}
