use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use priorclust::evaluation::{evaluate_all, normalize_reports, MetricReport, RecordSet};
use priorclust::linkage::{attainable_ks, cut as cut_dendrogram, permutation_invariance_check, registry};
use priorclust::metric_space::{
    cosine_dissimilarity_matrix, read_labels, read_matrix, verify_metric_axioms, verify_ultrametric,
    LabeledPointSet,
};
use priorclust::tuner::{run_pipeline, Config, TestRow};
use priorclust::{blend, BlendWeight, Dendrogram, Error, FlatPartition, PriorTree, Result, TreeFormat};
use serde_json::json;

use crate::{output, ReportFormat, TreeFormatArg};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn encode_tree(tree: &Path, format: Option<TreeFormatArg>, order: Option<&Path>, out: &Path) -> Result<()> {
    let format = match format {
        Some(TreeFormatArg::Newick) => TreeFormat::Newick,
        Some(TreeFormatArg::Json) => TreeFormat::Json,
        None => TreeFormat::from_path(tree),
    };
    let t = PriorTree::parse(&read_text(tree)?, format)?;
    let order = match order {
        Some(p) => read_labels(read_text(p)?.as_bytes())?,
        None => t.labels().map(String::from).collect(),
    };
    output::matrix(out, &t.to_ultrametric(&order)?)
}

pub fn distances(embeddings: &Path, out: &Path) -> Result<()> {
    let points = LabeledPointSet::read(embeddings)?;
    output::matrix(out, &cosine_dissimilarity_matrix(&points))
}

pub fn cluster(
    distances: &Path,
    prior: Option<&Path>,
    alpha: f64,
    linkage: &str,
    out: &Path,
    newick: Option<&Path>,
) -> Result<()> {
    let weight = BlendWeight::new(alpha)?;
    let linkage = registry().build(linkage)?;
    let task = read_matrix(distances)?;
    let d = match prior {
        Some(p) => {
            let prior = read_matrix(p)?;
            let task = if task.is_normalized() {
                task
            } else {
                log::warn!("task distances exceed 1; dividing by the maximum");
                task.normalized()
            };
            blend(&task, &prior, weight)?
        }
        None if alpha == 0.0 => task,
        None => {
            return Err(Error::Config(format!(
                "alpha {alpha} needs a prior matrix (--prior)"
            )))
        }
    };
    let dend = linkage.cluster(&d)?;
    output::dendrogram(out, &dend)?;
    let nwk = newick.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("nwk"));
    output::text(&nwk, &(dend.to_newick() + "\n"))
}

pub fn cut(dendrogram: &Path, k: usize, out: &Path) -> Result<()> {
    let dend = Dendrogram::read(dendrogram)?;
    match cut_dendrogram(&dend, k) {
        Ok(p) => output::atomic(out, |w| p.write_to(w)),
        Err(e @ Error::UnattainableK { .. }) => {
            let ks: Vec<String> = attainable_ks(&dend).iter().map(|k| k.to_string()).collect();
            eprintln!("attainable K: {}", ks.join(", "));
            Err(e)
        }
        Err(e) => Err(e),
    }
}

pub fn evaluate(partitions: &[std::path::PathBuf], records: &Path, format: ReportFormat, out: Option<&Path>) -> Result<()> {
    let records = RecordSet::read(records)?;
    let raw = partitions
        .iter()
        .map(|p| {
            let part = FlatPartition::read(p)?;
            records.validate_items(part.labels().iter().map(String::as_str))?;
            evaluate_all(&part, &records)
        })
        .collect::<Result<Vec<MetricReport>>>()?;
    let normalized = normalize_reports(&raw)?;
    let body = match format {
        ReportFormat::Json => {
            let reports: Vec<_> = partitions
                .iter()
                .zip(raw.iter().zip(&normalized))
                .map(|(p, (r, n))| json!({ "partition": p.display().to_string(), "raw": r, "normalized": n }))
                .collect();
            serde_json::to_string_pretty(&json!({ "reports": reports }))? + "\n"
        }
        ReportFormat::Csv => {
            let mut s = String::from(
                "partition,keywords,purity,entropy,weighted_entropy,purity_normalized,entropy_normalized,weighted_entropy_normalized\n",
            );
            for (p, (r, n)) in partitions.iter().zip(raw.iter().zip(&normalized)) {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    p.display(),
                    r.keywords_evaluated,
                    r.purity,
                    r.entropy,
                    r.weighted_entropy,
                    n.purity,
                    n.entropy,
                    n.weighted_entropy
                );
            }
            s
        }
    };
    emit(out, &body)
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => output::text(p, body),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn test_csv(rows: &[TestRow]) -> String {
    let mut s = String::from("K,purity,entropy,weighted_entropy\n");
    for r in rows {
        match &r.report {
            Some(m) => {
                let _ = writeln!(s, "{},{},{},{}", r.k, m.purity, m.entropy, m.weighted_entropy);
            }
            None => {
                let _ = writeln!(s, "{},UNATTAINABLE,UNATTAINABLE,UNATTAINABLE", r.k);
            }
        }
    }
    s
}

/// Writes `grid.csv`, `alphas.csv`, `dendrogram.csv` (+ `.labels`),
/// `dendrogram.nwk` and, with test records, `test.csv` into `out_dir`.
pub fn tune(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = Config::read(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let mut input = cfg.load(base)?;
    if let Some(s) = seed {
        input.seed = s;
    }
    let result = run_pipeline(&input)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    output::atomic(&out_dir.join("grid.csv"), |w| result.report.write_cells_to(w))?;
    output::atomic(&out_dir.join("alphas.csv"), |w| result.report.write_choices_to(w))?;
    output::dendrogram(&out_dir.join("dendrogram.csv"), &result.dendrogram)?;
    output::text(&out_dir.join("dendrogram.nwk"), &(result.dendrogram.to_newick() + "\n"))?;
    if let Some(rows) = &result.test {
        output::text(&out_dir.join("test.csv"), &test_csv(rows))?;
    }
    for c in &result.report.choices {
        log::info!("segment {} ({} labels): alpha {} score {}", c.segment, c.size, c.alpha, c.score);
    }
    Ok(())
}

pub fn check(matrix: &Path, tolerance: f64, linkage: &str, trials: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let m = read_matrix(matrix)?;
    let l = registry().build(linkage)?;
    let axioms = verify_metric_axioms(&m, tolerance);
    let ultra = verify_ultrametric(&m, tolerance);
    let invariant = permutation_invariance_check(&m, l.as_ref(), trials, seed)?;
    let body = serde_json::to_string_pretty(&json!({
        "metric": axioms,
        "ultrametric": ultra,
        "permutation_invariance": {
            "linkage": l.name(),
            "trials": trials,
            "seed": seed,
            "invariant": invariant,
        },
    }))? + "\n";
    emit(out, &body)
}
