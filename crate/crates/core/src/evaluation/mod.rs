//! External evaluation of a flat partition against keyword purchase
//! records: purity, entropy, and purchase-weighted entropy.
//!
//! For each keyword the purchases are mapped to clusters, giving a
//! categorical distribution over clusters. Entropies use the natural log.

mod records;

use serde::Serialize;

pub use records::{KeywordRecord, RecordSet};

use crate::error::{Error, Result};
use crate::linkage::FlatPartition;
use crate::registry::Registry;

/// Whether larger metric values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::HigherIsBetter => a > b,
            Direction::LowerIsBetter => a < b,
        }
    }
}

pub trait Metric: Send + Sync {
    fn name(&self) -> &'static str;
    fn direction(&self) -> Direction;
    fn evaluate(&self, partition: &FlatPartition, records: &RecordSet) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Purity;

#[derive(Debug, Clone, Copy, Default)]
pub struct Entropy;

#[derive(Debug, Clone, Copy, Default)]
pub struct WeightedEntropy;

impl Metric for Purity {
    fn name(&self) -> &'static str {
        "purity"
    }
    fn direction(&self) -> Direction {
        Direction::HigherIsBetter
    }
    fn evaluate(&self, partition: &FlatPartition, records: &RecordSet) -> Result<f64> {
        purity(partition, records)
    }
}

impl Metric for Entropy {
    fn name(&self) -> &'static str {
        "entropy"
    }
    fn direction(&self) -> Direction {
        Direction::LowerIsBetter
    }
    fn evaluate(&self, partition: &FlatPartition, records: &RecordSet) -> Result<f64> {
        entropy(partition, records)
    }
}

impl Metric for WeightedEntropy {
    fn name(&self) -> &'static str {
        "weighted_entropy"
    }
    fn direction(&self) -> Direction {
        Direction::LowerIsBetter
    }
    fn evaluate(&self, partition: &FlatPartition, records: &RecordSet) -> Result<f64> {
        weighted_entropy(partition, records)
    }
}

/// Built-in metrics: `purity`, `entropy`, `weighted_entropy`.
pub fn registry() -> Registry<dyn Metric> {
    Registry::<dyn Metric>::new("metric")
        .with("purity", || Box::new(Purity))
        .with("entropy", || Box::new(Entropy))
        .with("weighted_entropy", || Box::new(WeightedEntropy))
}

/// Per-keyword purchase counts by cluster, sorted descending so results do
/// not depend on cluster numbering.
fn distributions(partition: &FlatPartition, records: &RecordSet) -> Result<Vec<Vec<u64>>> {
    if records.is_empty() {
        return Err(Error::Empty("no keyword records to evaluate"));
    }
    let cluster = partition.label_to_cluster();
    records
        .records()
        .iter()
        .map(|r| {
            let mut counts = vec![0u64; partition.k()];
            for (item, c) in &r.purchases {
                let &k = cluster.get(item.as_str()).ok_or_else(|| Error::UnknownItem {
                    keyword: r.keyword.clone(),
                    item: item.clone(),
                })?;
                counts[k] += c;
            }
            counts.retain(|&c| c > 0);
            counts.sort_unstable_by(|a, b| b.cmp(a));
            Ok(counts)
        })
        .collect()
}

fn shannon(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let t = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p.ln()
        })
        .sum();
    // -0.0 for a single cluster reads better as 0.
    if h == 0.0 {
        0.0
    } else {
        -h
    }
}

/// Sum in ascending order, so the result does not depend on keyword order.
fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    sorted_sum(xs.collect()) / n
}

/// Mean over keywords of the share of purchases in the keyword's top cluster.
pub fn purity(partition: &FlatPartition, records: &RecordSet) -> Result<f64> {
    let dists = distributions(partition, records)?;
    Ok(mean(dists.iter().map(|c| c[0] as f64 / c.iter().sum::<u64>() as f64)))
}

/// Mean over keywords of the entropy of purchases across clusters.
pub fn entropy(partition: &FlatPartition, records: &RecordSet) -> Result<f64> {
    let dists = distributions(partition, records)?;
    Ok(mean(dists.iter().map(|c| shannon(c))))
}

/// Keyword entropies averaged with weights equal to purchase totals.
pub fn weighted_entropy(partition: &FlatPartition, records: &RecordSet) -> Result<f64> {
    let dists = distributions(partition, records)?;
    let weights: Vec<u64> = dists.iter().map(|c| c.iter().sum()).collect();
    let num = sorted_sum(dists.iter().zip(&weights).map(|(c, &w)| w as f64 * shannon(c)).collect());
    let den: u64 = weights.iter().sum();
    Ok(num / den as f64)
}

/// All three metrics for one partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub purity: f64,
    pub entropy: f64,
    pub weighted_entropy: f64,
    pub keywords_evaluated: usize,
}

pub fn evaluate_all(partition: &FlatPartition, records: &RecordSet) -> Result<MetricReport> {
    Ok(MetricReport {
        purity: purity(partition, records)?,
        entropy: entropy(partition, records)?,
        weighted_entropy: weighted_entropy(partition, records)?,
        keywords_evaluated: records.len(),
    })
}

/// Scales each column by its maximum across `reports`: the best purity and
/// the worst entropies become 1. A column whose maximum is 0 is left as is.
pub fn normalize_reports(reports: &[MetricReport]) -> Result<Vec<MetricReport>> {
    if reports.is_empty() {
        return Err(Error::Empty("no reports to normalize"));
    }
    let scale = |get: fn(&MetricReport) -> f64, name: &str| {
        let max = reports.iter().map(get).fold(0.0, f64::max);
        if max == 0.0 {
            log::warn!("{name} is 0 for every report; left unnormalized");
            1.0
        } else {
            max
        }
    };
    let p = scale(|r| r.purity, "purity");
    let e = scale(|r| r.entropy, "entropy");
    let w = scale(|r| r.weighted_entropy, "weighted entropy");
    Ok(reports
        .iter()
        .map(|r| MetricReport {
            purity: r.purity / p,
            entropy: r.entropy / e,
            weighted_entropy: r.weighted_entropy / w,
            keywords_evaluated: r.keywords_evaluated,
        })
        .collect())
}
