//! Prior ontology trees and the leaf-count ultrametric they induce.
//!
//! The distance between two leaves is the number of leaves under their
//! lowest common ancestor divided by the total number of leaves. Values are
//! carried as integer ratios ([`LeafRatio`]) and converted to `f64` once, so
//! ultrametricity holds exactly on emitted matrices.

mod lca;
mod parse;

use std::collections::{HashMap, HashSet};
use std::fmt;

pub use parse::TreeFormat;

use crate::error::{Error, Result};
use crate::metric_space::DistanceMatrix;
use lca::LcaIndex;
use parse::RawTree;

/// Index of a node inside a [`PriorTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
struct Node {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    /// Leaf label, or the optional name of an internal node.
    name: Option<String>,
}

/// Exact `leaves(lca) / leaves(root)` ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafRatio {
    pub leaves: usize,
    pub total: usize,
}

impl LeafRatio {
    pub fn to_f64(self) -> f64 {
        self.leaves as f64 / self.total as f64
    }
}

impl fmt::Display for LeafRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.leaves, self.total)
    }
}

/// Canonicalized rooted tree over uniquely labeled leaves.
///
/// Unary internal nodes are collapsed, children keep input order, and node
/// ids are assigned in preorder. Immutable once built.
#[derive(Debug, Clone)]
pub struct PriorTree {
    nodes: Vec<Node>,
    leaf_by_label: HashMap<String, NodeId>,
    leaves: Vec<NodeId>,
    leaf_counts: Vec<usize>,
    depths: Vec<usize>,
    lca: LcaIndex,
}

impl PriorTree {
    pub fn parse(text: &str, format: TreeFormat) -> Result<Self> {
        Self::from_raw(parse::parse(text, format)?)
    }

    fn from_raw(raw: RawTree) -> Result<Self> {
        if raw.nodes.is_empty() {
            return Err(Error::EmptyTree);
        }
        // Preorder copy that skips unary nodes; a collapsed chain keeps the
        // name of its bottom node.
        let mut nodes: Vec<Node> = Vec::with_capacity(raw.nodes.len());
        let mut stack: Vec<(usize, Option<NodeId>)> = vec![(0, None)];
        while let Some((mut raw_id, parent)) = stack.pop() {
            while raw.nodes[raw_id].children.len() == 1 {
                raw_id = raw.nodes[raw_id].children[0];
            }
            let raw_node = &raw.nodes[raw_id];
            let id = NodeId(nodes.len());
            nodes.push(Node {
                parent,
                children: Vec::new(),
                name: raw_node.label.clone(),
            });
            if let Some(p) = parent {
                nodes[p.0].children.push(id);
            }
            for &child in raw_node.children.iter().rev() {
                stack.push((child, Some(id)));
            }
        }
        Self::from_nodes(nodes)
    }

    fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let mut leaf_by_label = HashMap::new();
        let mut leaves = Vec::new();
        for (i, node) in nodes.iter().enumerate() {
            if node.children.is_empty() {
                let label = node
                    .name
                    .clone()
                    .ok_or_else(|| Error::TreeStructure("leaf without a label".into()))?;
                if leaf_by_label.insert(label.clone(), NodeId(i)).is_some() {
                    return Err(Error::DuplicateLabel(label));
                }
                leaves.push(NodeId(i));
            }
        }
        if leaves.is_empty() {
            return Err(Error::EmptyTree);
        }

        // Preorder ids: parents precede children, so a reverse sweep
        // accumulates counts bottom-up.
        let mut leaf_counts = vec![0usize; nodes.len()];
        for i in (0..nodes.len()).rev() {
            leaf_counts[i] = if nodes[i].children.is_empty() {
                1
            } else {
                nodes[i].children.iter().map(|c| leaf_counts[c.0]).sum()
            };
        }
        let mut depths = vec![0usize; nodes.len()];
        for i in 1..nodes.len() {
            let p = nodes[i].parent.expect("non-root has a parent").0;
            depths[i] = depths[p] + 1;
        }

        let children: Vec<Vec<usize>> = nodes
            .iter()
            .map(|n| n.children.iter().map(|c| c.0).collect())
            .collect();
        let lca = LcaIndex::build(&children, 0);

        Ok(PriorTree {
            nodes,
            leaf_by_label,
            leaves,
            leaf_counts,
            depths,
            lca,
        })
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf labels in depth-first (input) order.
    pub fn labels(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.leaves
            .iter()
            .map(move |id| self.nodes[id.0].name.as_deref().expect("leaf label"))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.leaf_by_label.contains_key(label)
    }

    pub fn leaf(&self, label: &str) -> Result<NodeId> {
        self.leaf_by_label
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node.0].parent
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.nodes[node.0].children
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.nodes[node.0].children.is_empty()
    }

    /// Leaf label for leaves, optional name for internal nodes.
    pub fn name(&self, node: NodeId) -> Option<&str> {
        self.nodes[node.0].name.as_deref()
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.depths[node.0]
    }

    pub fn subtree_leaf_count(&self, node: NodeId) -> usize {
        self.leaf_counts[node.0]
    }

    /// Labels of the leaves below `node`, in depth-first order.
    pub fn leaves_under(&self, node: NodeId) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.leaf_counts[node.0]);
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            let n = &self.nodes[v.0];
            if n.children.is_empty() {
                out.push(n.name.as_deref().expect("leaf label"));
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
        out
    }

    pub fn lca_nodes(&self, a: NodeId, b: NodeId) -> NodeId {
        NodeId(self.lca.query(a.0, b.0))
    }

    pub fn lca(&self, a: &str, b: &str) -> Result<NodeId> {
        Ok(self.lca_nodes(self.leaf(a)?, self.leaf(b)?))
    }

    pub fn ultrametric_ratio(&self, a: &str, b: &str) -> Result<LeafRatio> {
        let v = self.lca(a, b)?;
        Ok(LeafRatio {
            leaves: self.leaf_counts[v.0],
            total: self.leaf_count(),
        })
    }

    /// Prior distance between two leaves. `(x, x)` gives `1/n`; matrices
    /// built by [`PriorTree::to_ultrametric`] use 0 on the diagonal instead.
    pub fn ultrametric_distance(&self, a: &str, b: &str) -> Result<f64> {
        self.ultrametric_ratio(a, b).map(LeafRatio::to_f64)
    }

    /// Condensed prior distance matrix over `order`, which must be a
    /// permutation of the tree's leaf labels.
    pub fn to_ultrametric(&self, order: &[String]) -> Result<DistanceMatrix> {
        let ids = self.check_order(order)?;
        let n = ids.len();
        let total = self.leaf_count() as f64;
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.lca_nodes(ids[i], ids[j]);
                values.push(self.leaf_counts[v.0] as f64 / total);
            }
        }
        DistanceMatrix::from_condensed(order.to_vec(), values)
            .map(|m| m.with_normalized_flag(true))
    }

    fn check_order(&self, order: &[String]) -> Result<Vec<NodeId>> {
        let mut seen = HashSet::with_capacity(order.len());
        let mut ids = Vec::with_capacity(order.len());
        for label in order {
            if !seen.insert(label.as_str()) {
                return Err(Error::LabelMismatch(format!("label {label:?} repeated in order")));
            }
            let id = self.leaf_by_label.get(label).ok_or_else(|| {
                Error::LabelMismatch(format!("label {label:?} is not a leaf of the tree"))
            })?;
            ids.push(*id);
        }
        if ids.len() != self.leaf_count() {
            let missing: Vec<&str> = self.labels().filter(|l| !seen.contains(l)).collect();
            return Err(Error::LabelMismatch(format!(
                "order is missing tree leaves: {}",
                missing.join(", ")
            )));
        }
        Ok(ids)
    }

    /// Re-targets the tree to exactly `labels`: leaves not in `labels` are
    /// pruned, labels absent from the tree are attached as children of the
    /// root (maximal prior distance), and the result is re-canonicalized.
    pub fn aligned_to(&self, labels: &[String]) -> Result<PriorTree> {
        let wanted: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if wanted.len() != labels.len() {
            return Err(Error::LabelMismatch("dataset labels are not unique".into()));
        }
        // Preorder ids let a reverse sweep mark every node that keeps a leaf.
        let mut keep = vec![false; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            keep[i] = match &self.nodes[i].name {
                Some(name) if self.nodes[i].children.is_empty() => wanted.contains(name.as_str()),
                _ => self.nodes[i].children.iter().any(|c| keep[c.0]),
            };
        }
        let mut raw = RawTree::default();
        raw.nodes.push(parse::RawNode {
            label: self.nodes[0].name.clone(),
            children: Vec::new(),
        });
        let mut stack: Vec<(NodeId, usize)> = self.nodes[0]
            .children
            .iter()
            .rev()
            .map(|&c| (c, 0))
            .collect();
        while let Some((node, parent)) = stack.pop() {
            if !keep[node.0] {
                continue;
            }
            let id = raw.nodes.len();
            raw.nodes.push(parse::RawNode {
                label: self.nodes[node.0].name.clone(),
                children: Vec::new(),
            });
            raw.nodes[parent].children.push(id);
            for &c in self.nodes[node.0].children.iter().rev() {
                stack.push((c, id));
            }
        }
        if self.is_leaf(self.root()) {
            // Single-leaf tree: the root itself is the leaf.
            raw.nodes[0].label = None;
            if keep[0] {
                raw.nodes.push(parse::RawNode {
                    label: self.nodes[0].name.clone(),
                    children: Vec::new(),
                });
                raw.nodes[0].children.push(1);
            }
        }
        for label in labels {
            if !self.contains(label) {
                let id = raw.nodes.len();
                raw.nodes.push(parse::RawNode {
                    label: Some(label.clone()),
                    children: Vec::new(),
                });
                raw.nodes[0].children.push(id);
            }
        }
        if raw.nodes[0].children.is_empty() {
            return Err(Error::EmptyTree);
        }
        Self::from_raw(raw)
    }

    /// Shallowest depth-frontier with at least `k` nodes.
    ///
    /// The frontier at depth `d` holds every node at depth `d` plus every
    /// leaf shallower than `d`; its size grows with `d`. Nodes are returned
    /// in depth-first order.
    pub fn frontier(&self, k: usize) -> Vec<NodeId> {
        let max_depth = self.depths.iter().copied().max().unwrap_or(0);
        let mut chosen = Vec::new();
        for d in 0..=max_depth {
            chosen = self.frontier_at(d);
            if chosen.len() >= k {
                break;
            }
        }
        chosen
    }

    fn frontier_at(&self, depth: usize) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            if self.depths[v.0] == depth || self.is_leaf(v) {
                out.push(v);
            } else {
                stack.extend(self.nodes[v.0].children.iter().rev());
            }
        }
        out
    }

    /// Nested-parenthesis text; leaf labels are quoted when needed.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_newick(self.root(), &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, root: NodeId, out: &mut String) {
        enum Step {
            Enter(NodeId),
            Comma,
            Close,
        }
        let mut stack = vec![Step::Enter(root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Comma => out.push(','),
                Step::Close => out.push(')'),
                Step::Enter(v) => {
                    let node = &self.nodes[v.0];
                    if node.children.is_empty() {
                        out.push_str(&quote_label(node.name.as_deref().unwrap_or_default()));
                    } else {
                        out.push('(');
                        stack.push(Step::Close);
                        for (i, &c) in node.children.iter().enumerate().rev() {
                            stack.push(Step::Enter(c));
                            if i > 0 {
                                stack.push(Step::Comma);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Quotes a label for nested-parenthesis output when it contains delimiters.
pub fn quote_label(label: &str) -> String {
    let plain = !label.is_empty()
        && !label.chars().any(|c| {
            c.is_whitespace() || matches!(c, '(' | ')' | ',' | ';' | ':' | '"' | '[' | ']' | '\\')
        });
    if plain {
        return label.to_string();
    }
    let mut out = String::with_capacity(label.len() + 2);
    out.push('"');
    for c in label.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
