//! Benchmark harness: one sampled dataset, classic baselines per score, and
//! block runs over the threshold grid for every score x compression, with
//! ratio-minus-one columns against the classical baseline.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use blockbn::blockpipeline::{
    learn_block, learn_classic, BlockConfig, CompressionConfig, ThresholdChoice,
};
use blockbn::dataio::{forward_sample, read_network, DiscreteDataset};
use blockbn::graph::{shd, Dag};
use blockbn::search::{ScoreKind, SearchConfig};
use blockbn::{Error, Result};

use crate::commands::compression_from;
use crate::SearchArgs;

pub struct BenchSpec {
    pub network: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub scores: String,
    pub compressions: String,
    pub grid_step: f64,
    pub search: SearchArgs,
    pub alpha: f64,
    pub min_count: u64,
    pub hd_threshold: f64,
    pub parallel: bool,
    pub out: PathBuf,
}

pub const REPORT_HEADER: &str = "dataset,p,n,score,compression,threshold,recommended,\
elapsed_block_ms,elapsed_classic_ms,time_ratio,shd_block,shd_classic,shd_ratio,status";

struct Row {
    dataset: String,
    p: usize,
    n: usize,
    score: ScoreKind,
    compression: String,
    threshold: Option<f64>,
    recommended: bool,
    elapsed_block_ms: Option<f64>,
    elapsed_classic_ms: f64,
    shd_block: Option<usize>,
    shd_classic: usize,
    status: &'static str,
}

impl Row {
    fn time_ratio(&self) -> Option<f64> {
        self.elapsed_block_ms
            .map(|b| b / self.elapsed_classic_ms - 1.0)
    }

    fn shd_ratio(&self) -> Option<f64> {
        match (self.shd_block, self.shd_classic) {
            (Some(b), c) if c > 0 => Some(b as f64 / c as f64 - 1.0),
            _ => None,
        }
    }

    fn to_csv(&self) -> String {
        let opt_f = |v: Option<f64>, digits: usize| match v {
            Some(x) => format!("{x:.digits$}"),
            None => "NA".to_string(),
        };
        let opt_u = |v: Option<usize>| match v {
            Some(x) => x.to_string(),
            None => "NA".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{:.3},{},{},{},{},{}",
            self.dataset,
            self.p,
            self.n,
            self.score,
            self.compression,
            self.threshold.map(|t| t.to_string()).unwrap_or_default(),
            self.recommended,
            opt_f(self.elapsed_block_ms, 3),
            self.elapsed_classic_ms,
            opt_f(self.time_ratio(), 6),
            opt_u(self.shd_block),
            self.shd_classic,
            opt_f(self.shd_ratio(), 6),
            self.status,
        )
    }
}

struct BlockRunResult {
    threshold: f64,
    elapsed_ms: Option<f64>,
    shd: Option<usize>,
    status: &'static str,
}

fn run_block_once(
    data: &DiscreteDataset,
    truth: &Dag,
    threshold: f64,
    compression: CompressionConfig,
    search: SearchConfig,
    seed: u64,
) -> Result<BlockRunResult> {
    let config = BlockConfig {
        threshold: ThresholdChoice::Fixed { value: threshold },
        compression,
        search,
        smoothing: 1.0,
        seed: Some(seed),
    };
    match learn_block(data, &config) {
        Ok((model, timings)) => {
            let restricted = model.restricted_dag()?;
            Ok(BlockRunResult {
                threshold,
                elapsed_ms: Some(timings.structure_ms()),
                shd: Some(shd(&restricted, truth)?),
                status: "ok",
            })
        }
        Err(Error::CompressionInfeasible(_)) => Ok(BlockRunResult {
            threshold,
            elapsed_ms: None,
            shd: None,
            status: "compression_infeasible",
        }),
        Err(other) => Err(other),
    }
}

pub fn run(spec: BenchSpec) -> Result<()> {
    let net = read_network(&spec.network)?;
    let truth = net.dag()?;
    let data = forward_sample(&net, spec.n, spec.seed)?;
    let dataset_name = spec
        .network
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());

    let scores: Vec<ScoreKind> = spec
        .scores
        .split(',')
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    let compressions: Vec<CompressionConfig> = spec
        .compressions
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|name| compression_from(name, spec.alpha, spec.min_count, spec.hd_threshold))
        .collect::<Result<_>>()?;
    if scores.is_empty() || compressions.is_empty() {
        return Err(Error::Contract(
            "need at least one score and one compression".into(),
        ));
    }

    let grid = blockbn::varcluster::threshold_grid(spec.grid_step)?;
    // The recommendation depends only on the data, not on score/compression.
    let div = blockbn::infotheory::divergence_matrix(&data)?;
    let (recommended_t, _) = blockbn::varcluster::recommend_threshold(&div, &grid)?;

    let mut rows: Vec<Row> = Vec::new();
    let mut summary = String::from(
        "score,compression,recommended_threshold,recommended_elapsed_ms,grid_mean_elapsed_ms,\
recommended_not_slower,timing_caveat\n",
    );
    let caveat = if spec.parallel { "parallel_grid" } else { "" };

    for &score in &scores {
        let search = SearchConfig {
            score,
            max_parents: spec.search.max_parents,
            epsilon: spec.search.epsilon,
            max_iterations: spec.search.max_iterations,
        };
        search.validate()?;
        let classic = learn_classic(&data, &search)?;
        let shd_classic = shd(&classic.dag, &truth)?;
        let elapsed_classic = classic.stats.elapsed_ms;

        // Self-check row: the baseline compared against itself.
        rows.push(Row {
            dataset: dataset_name.clone(),
            p: data.n_vars(),
            n: data.n_rows(),
            score,
            compression: "classic".into(),
            threshold: None,
            recommended: false,
            elapsed_block_ms: Some(elapsed_classic),
            elapsed_classic_ms: elapsed_classic,
            shd_block: Some(shd_classic),
            shd_classic,
            status: "ok",
        });

        for &compression in &compressions {
            let results: Vec<BlockRunResult> = if spec.parallel {
                grid.par_iter()
                    .map(|&t| run_block_once(&data, &truth, t, compression, search, spec.seed))
                    .collect::<Result<_>>()?
            } else {
                grid.iter()
                    .map(|&t| run_block_once(&data, &truth, t, compression, search, spec.seed))
                    .collect::<Result<_>>()?
            };

            let mut rec_elapsed = None;
            let mut ok_elapsed: Vec<f64> = Vec::new();
            for r in &results {
                let recommended = r.threshold == recommended_t;
                if let Some(ms) = r.elapsed_ms {
                    ok_elapsed.push(ms);
                    if recommended {
                        rec_elapsed = Some(ms);
                    }
                }
                rows.push(Row {
                    dataset: dataset_name.clone(),
                    p: data.n_vars(),
                    n: data.n_rows(),
                    score,
                    compression: compression.label().into(),
                    threshold: Some(r.threshold),
                    recommended,
                    elapsed_block_ms: r.elapsed_ms,
                    elapsed_classic_ms: elapsed_classic,
                    shd_block: r.shd,
                    shd_classic,
                    status: r.status,
                });
            }

            let mean = if ok_elapsed.is_empty() {
                f64::NAN
            } else {
                ok_elapsed.iter().sum::<f64>() / ok_elapsed.len() as f64
            };
            let (rec_str, not_slower) = match rec_elapsed {
                Some(ms) => (format!("{ms:.3}"), (ms <= mean).to_string()),
                None => ("NA".to_string(), "NA".to_string()),
            };
            writeln!(
                summary,
                "{score},{},{recommended_t},{rec_str},{mean:.3},{not_slower},{caveat}",
                compression.label()
            )
            .expect("string write");
        }
    }

    let mut csv = String::from(REPORT_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    std::fs::write(&spec.out, csv)?;

    let summary_path = summary_path_for(&spec.out);
    std::fs::write(&summary_path, &summary)?;
    if spec.parallel {
        eprintln!("note: grid evaluated in parallel; per-run timings are contended");
    }
    print!("{summary}");
    println!("report: {}", spec.out.display());
    Ok(())
}

pub fn summary_path_for(out: &std::path::Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    name.push_str(".summary.csv");
    out.with_file_name(name)
}
