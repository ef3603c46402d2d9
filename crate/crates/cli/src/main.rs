//! `blockbn` — learn discrete Bayesian networks classically or by variable
//! clustering with compressed code columns, and reproduce the time / SHD /
//! recovery-accuracy comparisons against the classical baseline.

mod bench;
mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blockbn::Error;

#[derive(Parser)]
#[command(name = "blockbn", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared flags for commands that ingest a CSV dataset.
#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Input CSV (UTF-8, comma-separated, header row required).
    #[arg(long)]
    data: std::path::PathBuf,
    /// Equal-frequency bins for numeric columns.
    #[arg(long, default_value_t = 5)]
    bins: usize,
    /// Treat every column as categorical (no quantile binning).
    #[arg(long)]
    all_categorical: bool,
    /// Per-column kind overrides, e.g. `age=numeric,sex=categorical`.
    #[arg(long, value_name = "COL=KIND,..")]
    schema: Option<String>,
}

/// Shared structure-search flags.
#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Score function: bic or mi.
    #[arg(long, default_value = "bic")]
    score: String,
    /// Parent-set cap per node.
    #[arg(long, default_value_t = 4)]
    max_parents: usize,
    /// Minimum score gain for a move to be applied.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Iteration cap for one hill climb.
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
}

/// Shared block-pipeline flags.
#[derive(Args, Debug, Clone)]
struct BlockArgs {
    /// Clustering threshold: `auto` (recommended over the grid) or a value
    /// in [0,1].
    #[arg(long, default_value = "auto")]
    threshold: String,
    /// Grid step used for `--threshold auto`.
    #[arg(long, default_value_t = 0.1)]
    grid_step: f64,
    /// Compression: freq (most frequent) or hamming.
    #[arg(long, default_value = "hamming")]
    compression: String,
    /// Most-frequent coverage level α.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Minimum observations per frequent combination.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Normalized Hamming merge threshold.
    #[arg(long, default_value_t = 0.95)]
    hd_threshold: f64,
    /// Additive smoothing for CPT fitting.
    #[arg(long, default_value_t = 1.0)]
    smoothing: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-sample a dataset from a ground-truth network file.
    Sample {
        /// Ground-truth network file.
        #[arg(long)]
        network: std::path::PathBuf,
        /// Number of rows.
        #[arg(long)]
        n: usize,
        /// RNG seed; identical seeds reproduce identical files.
        #[arg(long)]
        seed: u64,
        /// Output CSV of integer codes.
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Compute and export the pairwise divergence matrix.
    Divergence {
        #[command(flatten)]
        data: DataArgs,
        /// Output CSV (square, 12 significant digits).
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Cluster variables at a threshold (or the recommended one).
    Cluster {
        #[command(flatten)]
        data: DataArgs,
        /// Threshold in [0,1], or `auto`.
        #[arg(long, default_value = "auto")]
        threshold: String,
        /// Grid step used for `--threshold auto`.
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
        /// Output text file, one `cluster_id: names` line per cluster.
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Learn a model and write its model document.
    Learn {
        #[command(flatten)]
        data: DataArgs,
        /// classic or block.
        #[arg(long)]
        mode: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        block: BlockArgs,
        /// Seed recorded into provenance (the learner itself is
        /// deterministic).
        #[arg(long)]
        seed: Option<u64>,
        /// Print one `iter,kind,parent,child,gain` line per applied move
        /// (classic mode).
        #[arg(long)]
        trace: bool,
        /// Embed wall-clock timings in the document (breaks bit-identical
        /// reruns).
        #[arg(long)]
        timings: bool,
        /// Output model document.
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Structural Hamming distance between a learned model and ground truth.
    Shd {
        /// Learned model document.
        #[arg(long)]
        learned: std::path::PathBuf,
        /// Ground-truth network file.
        #[arg(long)]
        truth: std::path::PathBuf,
    },
    /// Connected-versus-separated recovery accuracy on a block model.
    ImputeEval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        block: BlockArgs,
        /// Evaluate at most this many rows.
        #[arg(long)]
        rows: Option<usize>,
        /// Seed recorded into provenance.
        #[arg(long)]
        seed: Option<u64>,
        /// Output report (JSON).
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Sample one dataset and sweep classic vs block over the threshold
    /// grid, writing a CSV report of time and SHD ratios.
    Bench {
        /// Ground-truth network file.
        #[arg(long)]
        network: std::path::PathBuf,
        /// Rows to sample.
        #[arg(long)]
        n: usize,
        /// Sampling seed (classic and block see identical data).
        #[arg(long)]
        seed: u64,
        /// Comma-separated scores to run.
        #[arg(long, default_value = "bic,mi")]
        scores: String,
        /// Comma-separated compressions to run (freq, hamming).
        #[arg(long, default_value = "freq,hamming")]
        compressions: String,
        /// Threshold grid step.
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
        #[command(flatten)]
        search: SearchArgs,
        /// Most-frequent coverage level α.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Minimum observations per frequent combination.
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        /// Normalized Hamming merge threshold.
        #[arg(long, default_value_t = 0.95)]
        hd_threshold: f64,
        /// Evaluate grid points in parallel (timings become contended; a
        /// caveat is recorded in the summary).
        #[arg(long)]
        parallel: bool,
        /// Output report CSV; a `<out>.summary.csv` sidecar is written next
        /// to it.
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample {
            network,
            n,
            seed,
            out,
        } => commands::sample(&network, n, seed, &out),
        Command::Divergence { data, out } => commands::divergence(&data, &out),
        Command::Cluster {
            data,
            threshold,
            grid_step,
            out,
        } => commands::cluster(&data, &threshold, grid_step, &out),
        Command::Learn {
            data,
            mode,
            search,
            block,
            seed,
            trace,
            timings,
            out,
        } => commands::learn(&data, &mode, &search, &block, seed, trace, timings, &out),
        Command::Shd { learned, truth } => commands::shd(&learned, &truth),
        Command::ImputeEval {
            data,
            search,
            block,
            rows,
            seed,
            out,
        } => commands::impute_eval(&data, &search, &block, rows, seed, &out),
        Command::Bench {
            network,
            n,
            seed,
            scores,
            compressions,
            grid_step,
            search,
            alpha,
            min_count,
            hd_threshold,
            parallel,
            out,
        } => bench::run(bench::BenchSpec {
            network,
            n,
            seed,
            scores,
            compressions,
            grid_step,
            search,
            alpha,
            min_count,
            hd_threshold,
            parallel,
            out,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = match &err {
                Error::CompressionInfeasible(_) => "compression_infeasible",
                Error::Io(_) => "io",
                Error::Json(_) => "json",
                Error::CsvStructure { .. } => "csv_structure",
                Error::MissingValue { .. } => "missing_value",
                Error::NumericParse { .. } => "numeric_parse",
                Error::InvalidNetwork(_) => "invalid_network",
                Error::Contract(_) => "contract",
            };
            eprintln!("error: {kind}: {err}");
            if matches!(err, Error::CompressionInfeasible(_)) {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
