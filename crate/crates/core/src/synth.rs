//! Seeded synthetic inputs: random trees and dissimilarities for property
//! tests, and a fixture on which an interior blend weight beats both
//! endpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluation::RecordSet;
use crate::metric_space::{write_matrix, DistanceMatrix};
use crate::tree::{quote_label, PriorTree, TreeFormat};

/// Labels `x0 .. x{n-1}`.
pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// Newick text of a random tree over `labels(n)`: repeatedly joins 2 to 4
/// random current subtrees until one remains.
pub fn random_newick(n: usize, rng: &mut impl Rng) -> String {
    let mut parts: Vec<String> = labels(n);
    while parts.len() > 1 {
        parts.shuffle(rng);
        let take = rng.gen_range(2..=4).min(parts.len());
        let group: Vec<String> = parts.split_off(parts.len() - take);
        parts.push(format!("({})", group.join(",")));
    }
    let mut s = parts.pop().unwrap_or_default();
    if n == 1 {
        s = format!("({s})");
    }
    s.push(';');
    s
}

pub fn random_tree(n: usize, rng: &mut impl Rng) -> PriorTree {
    PriorTree::parse(&random_newick(n, rng), TreeFormat::Newick).expect("generated tree is valid")
}

/// Uniform entries in `[lo, hi)` over `labels(n)`.
pub fn random_matrix(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DistanceMatrix {
    DistanceMatrix::from_fn(labels(n), |_, _| rng.gen_range(lo..hi)).expect("finite non-negative entries")
}

/// Entries drawn from a few distinct values, so exact ties are common.
pub fn random_tied_matrix(n: usize, levels: u32, rng: &mut impl Rng) -> DistanceMatrix {
    DistanceMatrix::from_fn(labels(n), |_, _| f64::from(rng.gen_range(1..=levels)) / f64::from(levels))
        .expect("finite non-negative entries")
}

/// `d` with every entry moved by at most `eps`, clamped at 0.
pub fn perturb(d: &DistanceMatrix, eps: f64, rng: &mut impl Rng) -> DistanceMatrix {
    DistanceMatrix::from_fn(d.labels().to_vec(), |i, j| (d.get(i, j) + rng.gen_range(-eps..=eps)).max(0.0))
        .expect("finite non-negative entries")
}

pub const COARSE: usize = 4;
pub const FINE: usize = 3;
pub const ITEMS: usize = 4;

/// 48 items in 4 coarse groups of 3 fine groups of 4 items.
///
/// The prior tree has the coarse groups right but deals each fine group's
/// items round-robin over the tree's fine subgroups (item `i` of fine group
/// `f` lands in subgroup `(f + i) % 3`), so at 12 clusters the prior alone
/// reaches purity 0.5.
///
/// Task distances are about 0.1 inside a fine group, 0.5 across fine groups
/// of one coarse group and 0.7 across coarse groups, each jittered by 0.02.
/// Item 0 of fine group 0 in every coarse group is mislocated: 0.05 from
/// fine group 1 of the next coarse group and 0.2 from its own group, so
/// task distances alone reach purity 11/12.
///
/// One keyword per fine group buys each of its items once. With 12
/// clusters, blend weights in roughly (0.17, 0.62) recover every fine group.
#[derive(Debug, Clone)]
pub struct InteriorFixture {
    pub tree_newick: String,
    pub tree: PriorTree,
    pub task: DistanceMatrix,
    pub records: RecordSet,
    /// True fine group (0..12) of every label, in task label order.
    pub truth: Vec<usize>,
    pub alphas: Vec<f64>,
    pub k: usize,
}

fn item(c: usize, f: usize, i: usize) -> String {
    format!("c{c}f{f}i{i}")
}

pub fn interior_fixture(seed: u64) -> InteriorFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for c in 0..COARSE {
        for f in 0..FINE {
            for i in 0..ITEMS {
                labels.push(item(c, f, i));
                coords.push((c, f, i));
            }
        }
    }
    let misplaced = |(_, f, i): (usize, usize, usize)| f == 0 && i == 0;
    let decoy = |c: usize| ((c + 1) % COARSE, 1);
    let task = DistanceMatrix::from_fn(labels.clone(), |a, b| {
        let (pa, pb) = (coords[a], coords[b]);
        let jitter = |rng: &mut ChaCha8Rng, w: f64| rng.gen_range(-w..=w);
        for (m, o) in [(pa, pb), (pb, pa)] {
            if misplaced(m) {
                if (o.0, o.1) == decoy(m.0) {
                    return 0.05 + jitter(&mut rng, 0.01);
                }
                if (o.0, o.1) == (m.0, m.1) {
                    return 0.2 + jitter(&mut rng, 0.01);
                }
            }
        }
        let base = if pa.0 != pb.0 {
            0.7
        } else if pa.1 != pb.1 {
            0.5
        } else {
            0.1
        };
        base + jitter(&mut rng, 0.02)
    })
    .expect("finite non-negative entries");

    let mut newick = String::from("(");
    for c in 0..COARSE {
        if c > 0 {
            newick.push(',');
        }
        newick.push('(');
        for t in 0..FINE {
            if t > 0 {
                newick.push(',');
            }
            let members: Vec<String> = (0..FINE)
                .flat_map(|f| (0..ITEMS).map(move |i| (f, i)))
                .filter(|&(f, i)| (f + i) % FINE == t)
                .map(|(f, i)| quote_label(&item(c, f, i)))
                .collect();
            let _ = write!(newick, "({})", members.join(","));
        }
        newick.push(')');
    }
    newick.push_str(");");
    let tree = PriorTree::parse(&newick, TreeFormat::Newick).expect("fixture tree is valid");

    let records = RecordSet::from_rows(
        coords
            .iter()
            .map(|&(c, f, i)| (format!("kw-c{c}f{f}"), item(c, f, i), 1u64)),
    )
    .expect("fixture records are valid");
    let truth = coords.iter().map(|&(c, f, _)| c * FINE + f).collect();
    InteriorFixture {
        tree_newick: newick,
        tree,
        task,
        records,
        truth,
        alphas: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
        k: COARSE * FINE,
    }
}

impl InteriorFixture {
    /// Writes `tree.nwk`, `distances.csv` (+ sidecar), `records.csv` and a
    /// `config.toml` that tunes over the fixture grid; returns the config
    /// path.
    pub fn write_files(&self, dir: &Path, seed: u64) -> Result<PathBuf> {
        let put = |name: &str, text: &str| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("tree.nwk", &self.tree_newick)?;
        write_matrix(&dir.join("distances.csv"), &self.task)?;
        let mut rec = String::from("keyword,item_label,purchase_count\n");
        for r in self.records.records() {
            for (it, n) in &r.purchases {
                let _ = writeln!(rec, "{},{},{}", r.keyword, it, n);
            }
        }
        put("records.csv", &rec)?;
        let alphas: Vec<String> = self.alphas.iter().map(|a| format!("{a:?}")).collect();
        let config = format!(
            "tree = \"tree.nwk\"\ndistances = \"distances.csv\"\nseed = {seed}\n\n\
             [records]\nvalidate = \"records.csv\"\ntest = \"records.csv\"\n\n\
             [grid]\nalphas = [{}]\nks = [{}]\nmetric = \"purity\"\naggregation = \"mean\"\n\n\
             [partition]\nstrategy = \"tree-cut\"\nk = 1\n",
            alphas.join(", "),
            self.k
        );
        put("config.toml", &config)?;
        Ok(dir.join("config.toml"))
    }
}
