//! Condensed pairwise dissimilarities and the operations on them: cosine
//! dissimilarity from embeddings, max-normalization, convex blending with a
//! prior ultrametric, axiom checks, and the L∞ distance between matrices.

mod axioms;
mod io;
mod points;

use std::collections::{HashMap, HashSet};

pub use axioms::{verify_metric_axioms, verify_ultrametric, AxiomReport, Triple, UltrametricCheck};
pub use io::{
    read_labels, read_matrix, read_matrix_from, sidecar_path, write_labels, write_matrix, write_matrix_to,
};
pub use points::{cosine_dissimilarity_matrix, LabeledPointSet};

use crate::error::{Error, Result};

/// Default absolute tolerance for floating-point axiom checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Offset of pair `(i, j)`, `i < j`, in a condensed upper triangle over `n` points.
#[inline]
pub fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    n * i - i * (i + 1) / 2 + (j - i - 1)
}

/// Symmetric, zero-diagonal dissimilarity over an ordered label set, stored
/// as its strict upper triangle in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
    normalized: bool,
}

impl DistanceMatrix {
    /// Builds a matrix from a condensed array. Values must be finite and
    /// non-negative; the normalized flag is set when every value is ≤ 1.
    pub fn from_condensed(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        let expected = n * n.saturating_sub(1) / 2;
        if values.len() != expected {
            return Err(Error::LabelMismatch(format!(
                "{n} labels need {expected} condensed entries, got {}",
                values.len()
            )));
        }
        check_unique(&labels)?;
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = values[k];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistance {
                        a: labels[i].clone(),
                        b: labels[j].clone(),
                        value: v,
                    });
                }
                k += 1;
            }
        }
        let normalized = values.iter().all(|&v| v <= 1.0);
        Ok(DistanceMatrix {
            labels,
            values,
            normalized,
        })
    }

    /// Builds a matrix by evaluating `f(i, j)` for every `i < j`.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(f(i, j));
            }
        }
        Self::from_condensed(labels, values)
    }

    pub(crate) fn with_normalized_flag(mut self, flag: bool) -> Self {
        self.normalized = flag;
        self
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of condensed entries, `n(n-1)/2`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether every entry is known to lie in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Entry `(i, j)`; the diagonal is 0.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.values[condensed_index(self.n(), i, j)],
            std::cmp::Ordering::Greater => self.values[condensed_index(self.n(), j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn label_index(&self) -> HashMap<&str, usize> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect()
    }

    /// Divides every entry by the maximum entry, so the result peaks at
    /// exactly 1. An all-zero (or empty) matrix is returned unchanged, with
    /// a warning, and flagged as normalized.
    pub fn normalized(&self) -> DistanceMatrix {
        let max = self.max_value();
        if max == 0.0 {
            if !self.values.is_empty() {
                log::warn!("normalizing an all-zero distance matrix; returned unchanged");
            }
            return self.clone().with_normalized_flag(true);
        }
        let values = if max == 1.0 {
            self.values.clone()
        } else {
            self.values.iter().map(|v| v / max).collect()
        };
        DistanceMatrix {
            labels: self.labels.clone(),
            values,
            normalized: true,
        }
    }

    /// Same distances with rows and columns rearranged to follow `order`,
    /// which must be a permutation of this matrix's labels.
    pub fn reorder(&self, order: &[String]) -> Result<DistanceMatrix> {
        if order.len() != self.n() {
            return Err(Error::LabelMismatch(format!(
                "reorder expects {} labels, got {}",
                self.n(),
                order.len()
            )));
        }
        self.submatrix(order)
    }

    /// Restriction to `subset` (in the given order). Every label must exist.
    pub fn submatrix(&self, subset: &[String]) -> Result<DistanceMatrix> {
        let index = self.label_index();
        let idx = subset
            .iter()
            .map(|l| {
                index
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| Error::LabelMismatch(format!("label {l:?} not in matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        check_unique(subset)?;
        DistanceMatrix::from_fn(subset.to_vec(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Fails unless `other` has exactly the same labels in the same order.
    pub fn check_aligned(&self, other: &DistanceMatrix) -> Result<()> {
        if self.labels == other.labels {
            return Ok(());
        }
        let a: HashSet<&String> = self.labels.iter().collect();
        let b: HashSet<&String> = other.labels.iter().collect();
        if a == b {
            Err(Error::LabelMismatch(
                "matrices share labels but in a different order; reorder first".into(),
            ))
        } else {
            let only_a: Vec<&str> = self
                .labels
                .iter()
                .filter(|l| !b.contains(l))
                .map(String::as_str)
                .collect();
            let only_b: Vec<&str> = other
                .labels
                .iter()
                .filter(|l| !a.contains(l))
                .map(String::as_str)
                .collect();
            Err(Error::LabelMismatch(format!(
                "label sets differ (only in first: [{}], only in second: [{}])",
                only_a.join(", "),
                only_b.join(", ")
            )))
        }
    }
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Weight of the prior ultrametric in a blend, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BlendWeight(f64);

impl BlendWeight {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(BlendWeight(alpha))
        } else {
            Err(Error::InvalidWeight(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Entrywise `(1 - alpha) * task + alpha * prior`.
///
/// Both inputs must be normalized and share labels in the same order.
/// `alpha = 0` returns `task` and `alpha = 1` returns `prior`, bit for bit.
pub fn blend(task: &DistanceMatrix, prior: &DistanceMatrix, weight: BlendWeight) -> Result<DistanceMatrix> {
    task.check_aligned(prior)?;
    if !task.is_normalized() || !prior.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let a = weight.value();
    let values = task
        .values
        .iter()
        .zip(&prior.values)
        .map(|(&d, &u)| (1.0 - a) * d + a * u)
        .collect();
    Ok(DistanceMatrix {
        labels: task.labels.clone(),
        values,
        normalized: true,
    })
}

/// Largest absolute entrywise difference between two aligned matrices.
pub fn linf_distance(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<f64> {
    a.check_aligned(b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
