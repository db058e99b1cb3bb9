// Brute-force reference implementations used by the property and
// acceptance tests. Each works on plain nested vectors and shares no code
// with the library beyond reading its public data.

#![allow(dead_code)]

use std::collections::HashMap;

use priorclust::tree::{NodeId, PriorTree};
use priorclust::DistanceMatrix;

pub fn dense(d: &DistanceMatrix) -> Vec<Vec<f64>> {
    let n = d.n();
    (0..n).map(|i| (0..n).map(|j| d.get(i, j)).collect()).collect()
}

/// Min-max Floyd-Warshall: the smallest achievable largest edge over all
/// paths between each pair.
pub fn minimax(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut m = d.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k].max(m[k][j]);
                if via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Min,
    Max,
    Mean,
}

/// Agglomeration that recomputes every cluster distance from the original
/// matrix at every step. New clusters get ids `n, n+1, ...`; ties go to the
/// lexicographically smallest `(min id, max id)`. Returns `(a, b, height)`
/// with `a < b`.
pub fn naive_agglomerate(d: &[Vec<f64>], rule: Rule) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut active: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    let mut next = n;
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for x in 0..active.len() {
            for y in (x + 1)..active.len() {
                let (ia, ma) = &active[x];
                let (ib, mb) = &active[y];
                let mut vals = Vec::new();
                for &p in ma {
                    for &q in mb {
                        vals.push(d[p][q]);
                    }
                }
                let v = match rule {
                    Rule::Min => vals.iter().cloned().fold(f64::INFINITY, f64::min),
                    Rule::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    Rule::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                };
                let (lo, hi) = ((*ia).min(*ib), (*ia).max(*ib));
                let better = match best {
                    None => true,
                    Some((bv, blo, bhi, _, _)) => v < bv || (v == bv && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((v, lo, hi, x, y));
                }
            }
        }
        let (v, lo, hi, x, y) = best.unwrap();
        let mut members = active[x].1.clone();
        members.extend(active[y].1.iter().copied());
        active.remove(y);
        active.remove(x);
        active.push((next, members));
        next += 1;
        out.push((lo, hi, v));
    }
    out
}

/// Cophenetic matrix of a merge list from [`naive_agglomerate`].
pub fn naive_cophenetic(n: usize, merges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut c = vec![vec![0.0; n]; n];
    for &(a, b, h) in merges {
        for &p in &members[a] {
            for &q in &members[b] {
                c[p][q] = h;
                c[q][p] = h;
            }
        }
        let mut m = members[a].clone();
        m.extend(members[b].iter().copied());
        members.push(m);
    }
    c
}

fn ancestors(tree: &PriorTree, mut node: NodeId) -> Vec<NodeId> {
    let mut chain = vec![node];
    while let Some(p) = tree.parent(node) {
        chain.push(p);
        node = p;
    }
    chain
}

/// Deepest common ancestor found by walking both leaves to the root.
pub fn naive_lca(tree: &PriorTree, a: &str, b: &str) -> NodeId {
    let ca = ancestors(tree, tree.leaf(a).unwrap());
    let cb = ancestors(tree, tree.leaf(b).unwrap());
    *ca.iter().find(|x| cb.contains(x)).unwrap()
}

/// Leaves whose root path passes through `node`.
pub fn naive_leaf_count(tree: &PriorTree, node: NodeId) -> usize {
    tree.labels()
        .filter(|l| ancestors(tree, tree.leaf(l).unwrap()).contains(&node))
        .count()
}

/// Exact `(leaf count of lca, n)` pairs for every label pair.
pub fn naive_ultrametric_ratio(tree: &PriorTree, a: &str, b: &str) -> (usize, usize) {
    (naive_leaf_count(tree, naive_lca(tree, a, b)), tree.labels().count())
}

/// Lowest total distance-to-nearest-medoid over every k-subset.
pub fn brute_medoid_cost(d: &[Vec<f64>], k: usize) -> f64 {
    fn rec(d: &[Vec<f64>], k: usize, from: usize, pick: &mut Vec<usize>, best: &mut f64) {
        if pick.len() == k {
            let cost: f64 = (0..d.len())
                .map(|i| pick.iter().map(|&m| d[i][m]).fold(f64::INFINITY, f64::min))
                .sum();
            *best = best.min(cost);
            return;
        }
        for m in from..d.len() {
            pick.push(m);
            rec(d, k, m + 1, pick, best);
            pick.pop();
        }
    }
    let mut best = f64::INFINITY;
    rec(d, k, 0, &mut Vec::new(), &mut best);
    best
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    p[x] = r;
    r
}

/// Clusters of the graph joining pairs with `d <= t`, for the threshold
/// giving exactly `k` components; `None` when no threshold does. Cluster
/// numbers follow first appearance in index order.
pub fn components_cut(d: &[Vec<f64>], k: usize) -> Option<Vec<usize>> {
    let n = d.len();
    let mut levels: Vec<f64> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| d[i][j]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let label = |t: Option<f64>| {
        let mut p: Vec<usize> = (0..n).collect();
        if let Some(t) = t {
            for i in 0..n {
                for j in (i + 1)..n {
                    if d[i][j] <= t {
                        let (a, b) = (find(&mut p, i), find(&mut p, j));
                        p[a] = b;
                    }
                }
            }
        }
        let mut ids = HashMap::new();
        (0..n)
            .map(|i| {
                let r = find(&mut p, i);
                let next = ids.len();
                *ids.entry(r).or_insert(next)
            })
            .collect::<Vec<usize>>()
    };
    std::iter::once(None)
        .chain(levels.into_iter().map(Some))
        .map(label)
        .find(|a| a.iter().max().map_or(0, |m| m + 1) == k)
}

/// Mean over keywords of the top cluster's share of that keyword's
/// purchases. `rows` are `(keyword, item index, count)`.
pub fn purity(assignment: &[usize], rows: &[(String, usize, u64)]) -> f64 {
    let mut by_kw: HashMap<&str, HashMap<usize, u64>> = HashMap::new();
    for (kw, item, c) in rows {
        *by_kw.entry(kw).or_default().entry(assignment[*item]).or_default() += c;
    }
    let mut keys: Vec<&str> = by_kw.keys().copied().collect();
    keys.sort();
    let shares: Vec<f64> = keys
        .iter()
        .map(|k| {
            let m = &by_kw[k];
            *m.values().max().unwrap() as f64 / m.values().sum::<u64>() as f64
        })
        .collect();
    shares.iter().sum::<f64>() / shares.len() as f64
}
