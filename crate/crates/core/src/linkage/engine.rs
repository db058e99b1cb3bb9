//! Generic agglomeration with a cached nearest neighbor per active cluster.
//!
//! Each step merges the pair with the smallest linkage value; ties go to the
//! lexicographically smallest `(min cluster id, max cluster id)`. Leaves are
//! ids `0..n`, merge nodes take ids `n..2n-1` in creation order.

use std::cmp::Ordering;

use super::dendrogram::{Dendrogram, Merge};
use crate::error::{Error, Result};
use crate::metric_space::{condensed_index, DistanceMatrix};

/// Cluster-to-cluster distance update rule.
pub(crate) trait Rule {
    type Cell: Copy;

    fn init(d: f64) -> Self::Cell;

    /// Cell between `k` and the union of `a` and `b`.
    fn merge(a: Self::Cell, b: Self::Cell) -> Self::Cell;

    fn value(cell: Self::Cell, size_x: usize, size_y: usize) -> f64;

    /// Whether merge heights can only grow without clamping.
    const EXACTLY_MONOTONE: bool = true;
}

pub(crate) struct MinRule;

impl Rule for MinRule {
    type Cell = f64;
    fn init(d: f64) -> f64 {
        d
    }
    fn merge(a: f64, b: f64) -> f64 {
        a.min(b)
    }
    fn value(cell: f64, _: usize, _: usize) -> f64 {
        cell
    }
}

pub(crate) struct MaxRule;

impl Rule for MaxRule {
    type Cell = f64;
    fn init(d: f64) -> f64 {
        d
    }
    fn merge(a: f64, b: f64) -> f64 {
        a.max(b)
    }
    fn value(cell: f64, _: usize, _: usize) -> f64 {
        cell
    }
}

/// Cross-pair sum plus extremes; when every cross distance is equal the
/// mean is reported as that exact value.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MeanCell {
    sum: f64,
    min: f64,
    max: f64,
}

pub(crate) struct MeanRule;

impl Rule for MeanRule {
    type Cell = MeanCell;
    const EXACTLY_MONOTONE: bool = false;

    fn init(d: f64) -> MeanCell {
        MeanCell { sum: d, min: d, max: d }
    }
    fn merge(a: MeanCell, b: MeanCell) -> MeanCell {
        MeanCell {
            sum: a.sum + b.sum,
            min: a.min.min(b.min),
            max: a.max.max(b.max),
        }
    }
    fn value(cell: MeanCell, size_x: usize, size_y: usize) -> f64 {
        if cell.min == cell.max {
            cell.min
        } else {
            (cell.sum / (size_x as f64 * size_y as f64)).clamp(cell.min, cell.max)
        }
    }
}

/// Snapshot of the active clusters handed to a trace observer before each
/// merge.
#[derive(Debug, Clone)]
pub struct ActiveClusters {
    /// Cluster ids, ascending.
    pub ids: Vec<usize>,
    /// Condensed linkage values between `ids[i]` and `ids[j]`.
    pub distances: Vec<f64>,
}

impl ActiveClusters {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Linkage value between the `i`-th and `j`-th active clusters.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            Ordering::Less => self.distances[condensed_index(self.ids.len(), i, j)],
            Ordering::Greater => self.distances[condensed_index(self.ids.len(), j, i)],
            Ordering::Equal => 0.0,
        }
    }
}

pub(crate) type Observer<'a> = Option<&'a mut dyn FnMut(&ActiveClusters)>;

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    lo: usize,
    hi: usize,
    partner: usize,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => (self.lo, self.hi) < (other.lo, other.hi),
        }
    }
}

struct State<R: Rule> {
    n: usize,
    cells: Vec<R::Cell>,
    active: Vec<bool>,
    id: Vec<usize>,
    size: Vec<usize>,
    nn: Vec<Option<Candidate>>,
}

impl<R: Rule> State<R> {
    #[inline]
    fn cell(&self, i: usize, j: usize) -> R::Cell {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.cells[condensed_index(self.n, a, b)]
    }

    #[inline]
    fn set_cell(&mut self, i: usize, j: usize, c: R::Cell) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.cells[condensed_index(self.n, a, b)] = c;
    }

    fn candidate(&self, i: usize, j: usize) -> Candidate {
        let (x, y) = (self.id[i], self.id[j]);
        Candidate {
            value: R::value(self.cell(i, j), self.size[i], self.size[j]),
            lo: x.min(y),
            hi: x.max(y),
            partner: j,
        }
    }

    fn recompute_nn(&mut self, i: usize) {
        let mut best: Option<Candidate> = None;
        for j in 0..self.n {
            if j == i || !self.active[j] {
                continue;
            }
            let c = self.candidate(i, j);
            if best.as_ref().is_none_or(|b| c.better_than(b)) {
                best = Some(c);
            }
        }
        self.nn[i] = best;
    }

    fn snapshot(&self) -> ActiveClusters {
        let mut slots: Vec<usize> = (0..self.n).filter(|&s| self.active[s]).collect();
        slots.sort_by_key(|&s| self.id[s]);
        let mut distances = Vec::with_capacity(slots.len() * slots.len().saturating_sub(1) / 2);
        for (a, &i) in slots.iter().enumerate() {
            for &j in &slots[a + 1..] {
                distances.push(R::value(self.cell(i, j), self.size[i], self.size[j]));
            }
        }
        ActiveClusters {
            ids: slots.iter().map(|&s| self.id[s]).collect(),
            distances,
        }
    }
}

pub(crate) fn agglomerate<R: Rule>(d: &DistanceMatrix, mut observer: Observer<'_>) -> Result<Dendrogram> {
    let n = d.n();
    if n == 0 {
        return Err(Error::Empty("distance matrix has no points"));
    }
    let mut st = State::<R> {
        n,
        cells: d.values().iter().map(|&v| R::init(v)).collect(),
        active: vec![true; n],
        id: (0..n).collect(),
        size: vec![1; n],
        nn: vec![None; n],
    };
    for i in 0..n {
        st.recompute_nn(i);
    }

    let mut merges: Vec<Merge> = Vec::with_capacity(n.saturating_sub(1));
    let mut last_height = f64::NEG_INFINITY;
    for step in 0..n.saturating_sub(1) {
        if let Some(obs) = observer.as_mut() {
            obs(&st.snapshot());
        }
        let mut best: Option<(usize, Candidate)> = None;
        for i in 0..n {
            if !st.active[i] {
                continue;
            }
            if let Some(c) = st.nn[i] {
                if best.as_ref().is_none_or(|(_, b)| c.better_than(b)) {
                    best = Some((i, c));
                }
            }
        }
        let (i, cand) = best.ok_or_else(|| Error::Internal("no candidate pair left".into()))?;
        let (a, b) = (i.min(cand.partner), i.max(cand.partner));

        let mut height = cand.value;
        if !R::EXACTLY_MONOTONE && height < last_height {
            height = last_height;
        }
        last_height = height;
        let new_size = st.size[a] + st.size[b];
        merges.push(Merge {
            left: cand.lo,
            right: cand.hi,
            height,
            size: new_size,
        });

        // Slot `a` now holds the union; slot `b` retires.
        st.active[b] = false;
        st.nn[b] = None;
        for k in 0..n {
            if k != a && st.active[k] {
                let c = R::merge(st.cell(a, k), st.cell(b, k));
                st.set_cell(a, k, c);
            }
        }
        st.id[a] = n + step;
        st.size[a] = new_size;
        st.recompute_nn(a);
        for k in 0..n {
            if k == a || !st.active[k] {
                continue;
            }
            match st.nn[k] {
                Some(c) if c.partner == a || c.partner == b => st.recompute_nn(k),
                Some(c) => {
                    let fresh = st.candidate(k, a);
                    if fresh.better_than(&c) {
                        st.nn[k] = Some(fresh);
                    }
                }
                None => st.recompute_nn(k),
            }
        }
    }
    Dendrogram::new(d.labels().to_vec(), merges)
}
