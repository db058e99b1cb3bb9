use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::linkage::{single_linkage, Dendrogram, Merge};
use crate::metric_space::DistanceMatrix;

/// Heap key: lower height first, then lower source rank.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ready {
    height: f64,
    rank: (usize, usize),
    node: usize,
}

impl Eq for Ready {}

impl PartialOrd for Ready {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ready {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.height
            .total_cmp(&other.height)
            .then(self.rank.cmp(&other.rank))
            .then(self.node.cmp(&other.node))
    }
}

/// Joins per-segment dendrograms into one dendrogram over `order`.
///
/// Segments are treated as single points and clustered by single linkage on
/// `prior` (minimum cross-segment prior distance). Each segment dendrogram
/// is grafted below the segment-level merges; a segment-level merge sits at
/// the larger of its linkage distance and the heights of its children, so
/// heights stay non-decreasing.
pub fn combine_dendrograms(
    segments: &[Dendrogram],
    prior: &DistanceMatrix,
    order: &[String],
) -> Result<Dendrogram> {
    if segments.is_empty() {
        return Err(Error::Empty("no segment dendrograms to combine"));
    }
    let global: HashMap<&str, usize> = order.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if global.len() != order.len() {
        return Err(Error::LabelMismatch("combined label order repeats a label".into()));
    }
    let mut owner = vec![usize::MAX; order.len()];
    for (s, d) in segments.iter().enumerate() {
        for l in d.labels() {
            let &g = global
                .get(l.as_str())
                .ok_or_else(|| Error::LabelMismatch(format!("segment label {l:?} not in the label order")))?;
            if owner[g] != usize::MAX {
                return Err(Error::LabelMismatch(format!("label {l:?} appears in two segments")));
            }
            owner[g] = s;
        }
    }
    if let Some(g) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::LabelMismatch(format!(
            "label {:?} is not covered by any segment",
            order[g]
        )));
    }

    // Segment-level single linkage on the prior.
    let prior_index = prior.label_index();
    let pidx = |l: &str| {
        prior_index
            .get(l)
            .copied()
            .ok_or_else(|| Error::LabelMismatch(format!("label {l:?} missing from prior matrix")))
    };
    let seg_points: Vec<Vec<usize>> = segments
        .iter()
        .map(|d| d.labels().iter().map(|l| pidx(l)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let k = segments.len();
    let seg_labels: Vec<String> = (0..k).map(|s| s.to_string()).collect();
    let seg_dist = DistanceMatrix::from_fn(seg_labels, |a, b| {
        let mut m = f64::INFINITY;
        for &x in &seg_points[a] {
            for &y in &seg_points[b] {
                m = m.min(prior.get(x, y));
            }
        }
        m
    })?;
    let top = single_linkage(&seg_dist)?;

    // Node table: segment-internal merges first, then segment-level merges.
    // `parts[node]` = (height, rank, children as node refs).
    #[derive(Clone, Copy)]
    enum Ref {
        Leaf(usize),
        Node(usize),
    }
    struct Pending {
        height: f64,
        rank: (usize, usize),
        children: [Ref; 2],
    }
    let mut nodes: Vec<Pending> = Vec::new();
    // Root reference of every segment.
    let mut seg_root: Vec<Ref> = Vec::with_capacity(k);
    let mut seg_top: Vec<f64> = Vec::with_capacity(k);
    for (s, d) in segments.iter().enumerate() {
        let n = d.n();
        let base = nodes.len();
        let leaf = |i: usize| Ref::Leaf(global[d.labels()[i].as_str()]);
        let to_ref = |id: usize| if id < n { leaf(id) } else { Ref::Node(base + id - n) };
        for (pos, m) in d.merges().iter().enumerate() {
            nodes.push(Pending {
                height: m.height,
                rank: (s, pos),
                children: [to_ref(m.left), to_ref(m.right)],
            });
        }
        seg_root.push(if n == 1 { leaf(0) } else { Ref::Node(nodes.len() - 1) });
        seg_top.push(d.top_height());
    }
    let top_base = nodes.len();
    let mut top_height: Vec<f64> = Vec::with_capacity(k.saturating_sub(1));
    for (pos, m) in top.merges().iter().enumerate() {
        let side = |id: usize| -> (Ref, f64) {
            if id < k {
                (seg_root[id], seg_top[id])
            } else {
                (Ref::Node(top_base + id - k), top_height[id - k])
            }
        };
        let (l, lh) = side(m.left);
        let (r, rh) = side(m.right);
        let h = m.height.max(lh).max(rh);
        top_height.push(h);
        nodes.push(Pending {
            height: h,
            rank: (k, pos),
            children: [l, r],
        });
    }

    // Height-ordered topological sort; every parent is at least as high as
    // its children, so the emitted heights never decrease.
    let total = nodes.len();
    let mut parent_of: Vec<Option<usize>> = vec![None; total];
    let mut waiting: Vec<u8> = vec![0; total];
    let mut heap = BinaryHeap::new();
    for (i, p) in nodes.iter().enumerate() {
        for c in p.children {
            if let Ref::Node(j) = c {
                parent_of[j] = Some(i);
                waiting[i] += 1;
            }
        }
    }
    for (i, p) in nodes.iter().enumerate() {
        if waiting[i] == 0 {
            heap.push(Reverse(Ready {
                height: p.height,
                rank: p.rank,
                node: i,
            }));
        }
    }
    let n = order.len();
    let mut new_id = vec![usize::MAX; total];
    let mut sizes: Vec<usize> = vec![1; n];
    let mut merges = Vec::with_capacity(total);
    while let Some(Reverse(ready)) = heap.pop() {
        let p = &nodes[ready.node];
        let resolve = |r: Ref| match r {
            Ref::Leaf(g) => g,
            Ref::Node(j) => new_id[j],
        };
        let (a, b) = (resolve(p.children[0]), resolve(p.children[1]));
        let size = sizes[a] + sizes[b];
        merges.push(Merge {
            left: a.min(b),
            right: a.max(b),
            height: p.height,
            size,
        });
        new_id[ready.node] = n + merges.len() - 1;
        sizes.push(size);
        if let Some(parent) = parent_of[ready.node] {
            waiting[parent] -= 1;
            if waiting[parent] == 0 {
                heap.push(Reverse(Ready {
                    height: nodes[parent].height,
                    rank: nodes[parent].rank,
                    node: parent,
                }));
            }
        }
    }
    if merges.len() != total {
        return Err(Error::Internal("segment merge graph is not a tree".into()));
    }
    Dendrogram::new(order.to_vec(), merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::cut;
    use crate::tree::{PriorTree, TreeFormat};

    fn six_leaf() -> (Vec<String>, DistanceMatrix) {
        let t = PriorTree::parse("(((1,2),(3,4)),(5,6));", TreeFormat::Newick).unwrap();
        let labels: Vec<String> = t.labels().map(String::from).collect();
        let u = t.to_ultrametric(&labels).unwrap();
        (labels, u)
    }

    #[test]
    fn one_segment_is_unchanged() {
        let (labels, u) = six_leaf();
        let d = single_linkage(&u).unwrap();
        assert_eq!(combine_dendrograms(&[d.clone()], &u, &labels).unwrap(), d);
    }

    #[test]
    fn two_segments_join_at_root_distance() {
        let (labels, u) = six_leaf();
        let a = single_linkage(&u.submatrix(&labels[..4]).unwrap()).unwrap();
        let b = single_linkage(&u.submatrix(&labels[4..]).unwrap()).unwrap();
        let c = combine_dendrograms(&[a, b], &u, &labels).unwrap();
        assert_eq!(c.top_height(), 1.0);
        assert_eq!(c.cophenetic(), u);
        assert_eq!(c, single_linkage(&u).unwrap());
    }

    #[test]
    fn raised_heights_keep_order() {
        // Segment {a,b} is internally far apart (0.9) but close to {c} (0.2)
        // under the prior; the joining merge is raised to 0.9.
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let prior = DistanceMatrix::from_condensed(labels.clone(), vec![0.2, 0.2, 0.2]).unwrap();
        let seg = DistanceMatrix::from_condensed(labels[..2].to_vec(), vec![0.9]).unwrap();
        let ab = single_linkage(&seg).unwrap();
        let c = Dendrogram::new(vec!["c".into()], vec![]).unwrap();
        let out = combine_dendrograms(&[c, ab], &prior, &labels).unwrap();
        assert_eq!(out.heights().collect::<Vec<_>>(), [0.9, 0.9]);
        assert_eq!(cut(&out, 1).unwrap().k(), 1);
    }

    #[test]
    fn rejects_bad_segments() {
        let (labels, u) = six_leaf();
        let a = single_linkage(&u.submatrix(&labels[..4]).unwrap()).unwrap();
        let overlap = single_linkage(&u.submatrix(&labels[3..]).unwrap()).unwrap();
        assert!(combine_dendrograms(&[a.clone(), overlap], &u, &labels).is_err());
        assert!(combine_dendrograms(&[a], &u, &labels).is_err());
        assert!(combine_dendrograms(&[], &u, &labels).is_err());
    }
}
