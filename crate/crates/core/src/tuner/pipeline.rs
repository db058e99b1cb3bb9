use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::{choose_alpha, combine_dendrograms, grid_search, partition_registry, Aggregation, CellValue, GridSearchReport, GridSpec, PartitionInput, SegmentChoice};
use crate::error::{Error, Result};
use crate::evaluation::{self, RecordSet};
use crate::linkage::{cut, single_linkage, Dendrogram};
use crate::metric_space::{blend, cosine_dissimilarity_matrix, read_matrix, BlendWeight, DistanceMatrix, LabeledPointSet};
use crate::tree::{PriorTree, TreeFormat};

/// TOML configuration. Relative paths resolve against the config file's
/// directory.
///
/// ```toml
/// tree = "tree.nwk"
/// embeddings = "topics.csv"      # or: distances = "d.csv"
/// seed = 7
///
/// [records]
/// validate = "validate.csv"
/// test = "test.csv"              # optional
///
/// [grid]
/// alphas = [0.0, 0.25, 0.5, 0.75, 1.0]
/// ks = [2, 4, 8]
/// metric = "purity"
/// aggregation = "mean"
///
/// [partition]
/// strategy = "tree-cut"
/// k = 1
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub tree: PathBuf,
    pub tree_format: Option<String>,
    pub embeddings: Option<PathBuf>,
    pub distances: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub records: RecordsConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsConfig {
    /// Accepted for completeness; nothing is fitted on training records.
    pub train: Option<PathBuf>,
    /// Records scored during grid search. Falls back to `train`.
    pub validate: Option<PathBuf>,
    /// Held-out records scored on the final dendrogram.
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub alphas: Vec<f64>,
    pub ks: Vec<usize>,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default)]
    pub aggregation: Aggregation,
}

fn default_metric() -> String {
    "purity".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_strategy() -> String {
    "tree-cut".into()
}

fn default_k() -> usize {
    1
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            strategy: default_strategy(),
            k: default_k(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Loads every referenced file, resolving relative paths against `base`.
    pub fn load(&self, base: &Path) -> Result<PipelineInput> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let tree_path = resolve(&self.tree);
        let format = match &self.tree_format {
            Some(f) => f.parse()?,
            None => TreeFormat::from_path(&tree_path),
        };
        let text = std::fs::read_to_string(&tree_path).map_err(|e| Error::io(&tree_path, e))?;
        let tree = PriorTree::parse(&text, format).map_err(|e| e.in_stage("load tree", None))?;

        let task = match (&self.embeddings, &self.distances) {
            (Some(e), None) => {
                let points = LabeledPointSet::read(&resolve(e)).map_err(|e| e.in_stage("load embeddings", None))?;
                cosine_dissimilarity_matrix(&points)
            }
            (None, Some(d)) => read_matrix(&resolve(d)).map_err(|e| e.in_stage("load distances", None))?,
            _ => {
                return Err(Error::Config(
                    "exactly one of `embeddings` and `distances` must be set".into(),
                ))
            }
        };

        let validate = self
            .records
            .validate
            .as_ref()
            .or(self.records.train.as_ref())
            .ok_or_else(|| Error::Config("records need `validate` (or `train`)".into()))?;
        let validate = RecordSet::read(&resolve(validate)).map_err(|e| e.in_stage("load records", None))?;
        let test = match &self.records.test {
            Some(p) => Some(RecordSet::read(&resolve(p)).map_err(|e| e.in_stage("load records", None))?),
            None => None,
        };
        let grid = GridSpec::new(
            self.grid.alphas.clone(),
            self.grid.ks.clone(),
            self.grid.metric.clone(),
            self.grid.aggregation,
        )?;
        Ok(PipelineInput {
            task,
            tree,
            validate,
            test,
            grid,
            strategy: self.partition.strategy.clone(),
            k: self.partition.k,
            seed: self.seed,
        })
    }
}

/// Fully loaded pipeline inputs.
#[derive(Debug, Clone)]
pub struct PipelineInput {
    /// Task distances; their label order is the output order.
    pub task: DistanceMatrix,
    pub tree: PriorTree,
    pub validate: RecordSet,
    pub test: Option<RecordSet>,
    pub grid: GridSpec,
    pub strategy: String,
    pub k: usize,
    pub seed: u64,
}

/// Scores of the final dendrogram on test records at one K.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRow {
    pub k: usize,
    /// `None` when K is unattainable.
    pub report: Option<evaluation::MetricReport>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dendrogram: Dendrogram,
    pub report: GridSearchReport,
    pub segments: Vec<Vec<String>>,
    pub test: Option<Vec<TestRow>>,
}

/// Pre-partition, grid search and α choice per segment, rebuild at the
/// chosen α, then combine. Task distances outside [0, 1] are divided by
/// their maximum first.
pub fn run_pipeline(input: &PipelineInput) -> Result<PipelineOutput> {
    let labels = input.task.labels().to_vec();
    let task = if input.task.is_normalized() {
        input.task.clone()
    } else {
        log::info!("task distances exceed 1; dividing by the maximum");
        input.task.normalized()
    };
    let tree = input.tree.aligned_to(&labels).map_err(|e| e.in_stage("align tree", None))?;
    let prior = tree.to_ultrametric(&labels)?;
    input
        .validate
        .validate_items(labels.iter().map(String::as_str))
        .map_err(|e| e.in_stage("check records", None))?;

    let strategy = partition_registry().build(&input.strategy)?;
    let segments = strategy
        .partition(&PartitionInput {
            task: &task,
            tree: &tree,
            k: input.k,
            seed: input.seed,
        })
        .map_err(|e| e.in_stage("pre-partition", None))?;
    log::info!("{} segment(s) from {}", segments.len(), strategy.name());

    let direction = evaluation::registry().build(input.grid.metric())?.direction();
    let per_segment = segments
        .par_iter()
        .enumerate()
        .map(|(s, seg)| -> Result<_> {
            let fragment = grid_search(seg, &task, &prior, &input.grid, &input.validate)
                .map_err(|e| e.in_stage("grid search", Some(s)))?;
            let (alpha, score) = choose_alpha(&fragment, input.grid.aggregation(), direction)
                .map_err(|e| e.in_stage("choose alpha", Some(s)))?;
            let d = blend(&task.submatrix(seg)?, &prior.submatrix(seg)?, BlendWeight::new(alpha)?)?;
            let dend = single_linkage(&d).map_err(|e| e.in_stage("rebuild", Some(s)))?;
            let choice = SegmentChoice {
                segment: s,
                size: seg.len(),
                alpha,
                score,
            };
            Ok((fragment, choice, dend))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fragments = Vec::with_capacity(per_segment.len());
    let mut choices = Vec::with_capacity(per_segment.len());
    let mut dendrograms = Vec::with_capacity(per_segment.len());
    for (f, c, d) in per_segment {
        log::info!("segment {}: alpha {} (score {})", c.segment, c.alpha, c.score);
        fragments.push(f);
        choices.push(c);
        dendrograms.push(d);
    }
    let dendrogram =
        combine_dendrograms(&dendrograms, &prior, &labels).map_err(|e| e.in_stage("combine", None))?;

    let test = match &input.test {
        Some(records) => Some(
            score_test(&dendrogram, records, input.grid.ks()).map_err(|e| e.in_stage("test evaluation", None))?,
        ),
        None => None,
    };
    Ok(PipelineOutput {
        dendrogram,
        report: GridSearchReport {
            metric: input.grid.metric().to_string(),
            aggregation: input.grid.aggregation(),
            fragments,
            choices,
        },
        segments,
        test,
    })
}

fn score_test(dend: &Dendrogram, records: &RecordSet, ks: &[usize]) -> Result<Vec<TestRow>> {
    records.validate_items(dend.labels().iter().map(String::as_str))?;
    ks.iter()
        .map(|&k| {
            if k > dend.n() {
                return Ok(TestRow { k, report: None });
            }
            match cut(dend, k) {
                Ok(p) => Ok(TestRow {
                    k,
                    report: Some(evaluation::evaluate_all(&p, records)?),
                }),
                Err(Error::UnattainableK { .. }) => Ok(TestRow { k, report: None }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

impl TestRow {
    /// The cell for one named metric.
    pub fn cell(&self, metric: &str) -> CellValue {
        match &self.report {
            None => CellValue::Unattainable,
            Some(r) => CellValue::Value(match metric {
                "entropy" => r.entropy,
                "weighted_entropy" => r.weighted_entropy,
                _ => r.purity,
            }),
        }
    }
}
