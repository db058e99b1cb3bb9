//! `priorclust` command-line interface.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 unattainable
//! number of clusters, 4 internal error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use priorclust::Error;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "priorclust", version, about = "Hierarchical clustering regularized by a prior tree")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TreeFormatArg {
    Newick,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a prior tree as its leaf-count ultrametric matrix.
    EncodeTree {
        /// Tree file (Newick, or JSON for `.json` files).
        tree: PathBuf,
        #[arg(long, value_enum)]
        format: Option<TreeFormatArg>,
        /// Label order file (one-column CSV with a `label` header).
        #[arg(long)]
        order: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Cosine dissimilarities between embedding rows.
    Distances {
        /// CSV or TSV with a header; first column is the label.
        embeddings: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Blend task and prior distances and build a dendrogram.
    Cluster {
        /// Task distance matrix.
        distances: PathBuf,
        /// Prior ultrametric matrix, aligned to the task labels.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value = "single")]
        linkage: String,
        /// Merge-table CSV; the label order goes to `<out>.labels`.
        #[arg(short, long)]
        out: PathBuf,
        /// Nested-parenthesis export (default: `<out>` with extension `nwk`).
        #[arg(long)]
        newick: Option<PathBuf>,
    },
    /// Cut a dendrogram into K flat clusters.
    Cut {
        dendrogram: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Score flat partitions against keyword purchase records.
    Evaluate {
        /// Partition CSV (`label,cluster`); repeat to compare several.
        #[arg(long = "partition", required = true)]
        partitions: Vec<PathBuf>,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        /// Output file (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the full grid search from a TOML config.
    Tune {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report metric and ultrametric axioms and linkage order sensitivity.
    Check {
        matrix: PathBuf,
        #[arg(long, default_value_t = priorclust::metric_space::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value = "complete")]
        linkage: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.root_cause() {
        Error::UnattainableK { .. } => 3,
        Error::Internal(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match cli.command {
        Command::EncodeTree { tree, format, order, out } => commands::encode_tree(&tree, format, order.as_deref(), &out),
        Command::Distances { embeddings, out } => commands::distances(&embeddings, &out),
        Command::Cluster {
            distances,
            prior,
            alpha,
            linkage,
            out,
            newick,
        } => commands::cluster(&distances, prior.as_deref(), alpha, &linkage, &out, newick.as_deref()),
        Command::Cut { dendrogram, k, out } => commands::cut(&dendrogram, k, &out),
        Command::Evaluate {
            partitions,
            records,
            format,
            out,
        } => commands::evaluate(&partitions, &records, format, out.as_deref()),
        Command::Tune { config, out_dir, seed } => commands::tune(&config, &out_dir, seed),
        Command::Check {
            matrix,
            tolerance,
            linkage,
            trials,
            seed,
            out,
        } => commands::check(&matrix, tolerance, &linkage, trials, seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
