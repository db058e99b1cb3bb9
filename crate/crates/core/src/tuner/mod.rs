//! Grid search over the blend weight and the number of flat clusters, per
//! segment of a coarse pre-partition, followed by recombination of the
//! per-segment dendrograms.

mod combine;
mod partition;
mod pipeline;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use combine::combine_dendrograms;
pub use partition::{
    assign_to_medoids, medoid_cost, registry as partition_registry, Medoids, PartitionInput, PrePartition,
    TreeCut,
};
pub use pipeline::{run_pipeline, Config, GridConfig, PartitionConfig, PipelineInput, PipelineOutput, RecordsConfig, TestRow};

use crate::error::{Error, Result};
use crate::evaluation::{self, Direction, Metric, RecordSet};
use crate::linkage::{cut, single_linkage};
use crate::metric_space::{blend, BlendWeight, DistanceMatrix};

/// How metric values of one α are combined across the K grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
    /// The best value under the metric's direction.
    Best,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            "best" => Ok(Aggregation::Best),
            _ => Err(Error::InvalidGrid(format!(
                "unknown aggregation {s:?} (expected mean, median or best)"
            ))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
            Aggregation::Best => "best",
        })
    }
}

impl Aggregation {
    /// Aggregate of a non-empty slice.
    pub fn apply(self, values: &[f64], direction: Direction) -> f64 {
        debug_assert!(!values.is_empty());
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                if v.len() % 2 == 1 {
                    v[m]
                } else {
                    (v[m - 1] + v[m]) / 2.0
                }
            }
            Aggregation::Best => values
                .iter()
                .copied()
                .reduce(|a, b| if direction.better(b, a) { b } else { a })
                .unwrap_or(f64::NAN),
        }
    }
}

/// The (α, K) search grid plus the metric and its aggregation across K.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    alphas: Vec<f64>,
    ks: Vec<usize>,
    metric: String,
    aggregation: Aggregation,
}

impl GridSpec {
    /// Sorts and deduplicates both grids. Fails on empty grids, α outside
    /// [0, 1], K = 0, or an unknown metric name.
    pub fn new(
        mut alphas: Vec<f64>,
        mut ks: Vec<usize>,
        metric: impl Into<String>,
        aggregation: Aggregation,
    ) -> Result<Self> {
        if alphas.is_empty() || ks.is_empty() {
            return Err(Error::InvalidGrid("alpha and K grids must be non-empty".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidGrid(format!("alpha {a} outside [0, 1]")));
        }
        if ks.contains(&0) {
            return Err(Error::InvalidGrid("K must be at least 1".into()));
        }
        let metric = metric.into();
        evaluation::registry().build(&metric)?;
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        ks.sort_unstable();
        ks.dedup();
        Ok(GridSpec {
            alphas,
            ks,
            metric,
            aggregation,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    fn build_metric(&self) -> Box<dyn Metric> {
        evaluation::registry()
            .build(&self.metric)
            .expect("metric name checked in GridSpec::new")
    }
}

/// One grid cell: a metric value, or a marker for a K that no flat cut of
/// the dendrogram can produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellValue {
    Value(f64),
    Unattainable,
}

impl CellValue {
    pub fn value(self) -> Option<f64> {
        match self {
            CellValue::Value(v) => Some(v),
            CellValue::Unattainable => None,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Value(v) => write!(f, "{v}"),
            CellValue::Unattainable => f.write_str("UNATTAINABLE"),
        }
    }
}

/// Grid results for one segment; `values[a][k]` belongs to `alphas[a]` and
/// `ks[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFragment {
    pub alphas: Vec<f64>,
    pub ks: Vec<usize>,
    pub values: Vec<Vec<CellValue>>,
}

impl GridFragment {
    /// `(alpha, K, value)` in grid order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, usize, CellValue)> + '_ {
        self.alphas
            .iter()
            .zip(&self.values)
            .flat_map(move |(&a, row)| self.ks.iter().zip(row).map(move |(&k, &v)| (a, k, v)))
    }

    pub fn get(&self, alpha: f64, k: usize) -> Option<CellValue> {
        let a = self.alphas.iter().position(|&x| x == alpha)?;
        let j = self.ks.iter().position(|&x| x == k)?;
        Some(self.values[a][j])
    }
}

/// Evaluates every (α, K) cell on one segment: blend the segment's task and
/// prior distances, single-link, cut at each K, and score the cut against
/// the segment's purchases. K above the segment size is unattainable.
pub fn grid_search(
    segment: &[String],
    task: &DistanceMatrix,
    prior: &DistanceMatrix,
    grid: &GridSpec,
    records: &RecordSet,
) -> Result<GridFragment> {
    if segment.is_empty() {
        return Err(Error::Empty("segment has no labels"));
    }
    let sub_task = task.submatrix(segment)?;
    let sub_prior = prior.submatrix(segment)?;
    let sub_records = records.restricted_to(segment.iter().map(String::as_str));
    if sub_records.is_empty() {
        return Err(Error::Empty("no purchases of items in this segment"));
    }
    let metric = grid.build_metric();
    let values = grid
        .alphas
        .par_iter()
        .map(|&alpha| -> Result<Vec<CellValue>> {
            let d = blend(&sub_task, &sub_prior, BlendWeight::new(alpha)?)?;
            let dend = single_linkage(&d)?;
            grid.ks
                .iter()
                .map(|&k| {
                    if k > segment.len() {
                        return Ok(CellValue::Unattainable);
                    }
                    match cut(&dend, k) {
                        Ok(p) => Ok(CellValue::Value(metric.evaluate(&p, &sub_records)?)),
                        Err(Error::UnattainableK { .. }) => Ok(CellValue::Unattainable),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridFragment {
        alphas: grid.alphas.clone(),
        ks: grid.ks.clone(),
        values,
    })
}

/// Picks the α whose aggregate over attainable K is best; ties go to the
/// smaller α. Returns `(alpha, aggregate score)`.
pub fn choose_alpha(fragment: &GridFragment, aggregation: Aggregation, direction: Direction) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (&alpha, row) in fragment.alphas.iter().zip(&fragment.values) {
        let attained: Vec<f64> = row.iter().filter_map(|c| c.value()).collect();
        if attained.is_empty() {
            continue;
        }
        let score = aggregation.apply(&attained, direction);
        if best.is_none_or(|(_, s)| direction.better(score, s)) {
            best = Some((alpha, score));
        }
    }
    best.ok_or(Error::NoAttainableCell)
}

/// The α picked for one segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentChoice {
    pub segment: usize,
    pub size: usize,
    pub alpha: f64,
    pub score: f64,
}

/// Every grid cell of every segment plus the chosen α per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchReport {
    pub metric: String,
    pub aggregation: Aggregation,
    pub fragments: Vec<GridFragment>,
    pub choices: Vec<SegmentChoice>,
}

impl GridSearchReport {
    pub fn cell_count(&self) -> usize {
        self.fragments.iter().map(|f| f.alphas.len() * f.ks.len()).sum()
    }

    /// Long-form CSV: `segment,alpha,K,metric,value`, where value may be
    /// `UNATTAINABLE`.
    pub fn write_cells_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["segment", "alpha", "K", "metric", "value"])?;
        for (s, frag) in self.fragments.iter().enumerate() {
            for (alpha, k, v) in frag.cells() {
                w.write_record([
                    s.to_string(),
                    alpha.to_string(),
                    k.to_string(),
                    self.metric.clone(),
                    v.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }

    /// CSV: `segment,size,alpha,score`.
    pub fn write_choices_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["segment", "size", "alpha", "score"])?;
        for c in &self.choices {
            w.write_record([
                c.segment.to_string(),
                c.size.to_string(),
                c.alpha.to_string(),
                c.score.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }
}
