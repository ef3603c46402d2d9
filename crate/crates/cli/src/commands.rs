//! Subcommand implementations: each wraps one library operation and writes
//! its documented output format.

use std::collections::BTreeMap;
use std::path::Path;

use blockbn::blockpipeline::{
    evaluate_imputation, fit_separated, learn_block, learn_classic, save_model_document,
    load_model_document, BlockConfig, CompressionConfig, ModelDocument, ThresholdChoice,
};
use blockbn::dataio::{
    discretize, forward_sample, read_csv, read_network, write_dataset_csv, ColumnKind,
    DiscreteDataset,
};
use blockbn::graph;
use blockbn::infotheory::divergence_matrix;
use blockbn::search::SearchConfig;
use blockbn::varcluster::{agglomerate, recommend_threshold, threshold_grid};
use blockbn::{Error, Result};

use crate::{BlockArgs, DataArgs, SearchArgs};

pub fn parse_schema(spec: &Option<String>) -> Result<BTreeMap<String, ColumnKind>> {
    let mut map = BTreeMap::new();
    let Some(spec) = spec else { return Ok(map) };
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let Some((name, kind)) = part.split_once('=') else {
            return Err(Error::Contract(format!(
                "schema entry '{part}' must look like name=kind"
            )));
        };
        let kind = match kind {
            "numeric" => ColumnKind::Numeric,
            "categorical" => ColumnKind::Categorical,
            other => {
                return Err(Error::Contract(format!(
                    "unknown column kind '{other}' (use numeric or categorical)"
                )))
            }
        };
        map.insert(name.to_string(), kind);
    }
    Ok(map)
}

/// Ingest + discretize a CSV per the shared data flags.
pub fn load_dataset(args: &DataArgs) -> Result<DiscreteDataset> {
    let mut schema = parse_schema(&args.schema)?;
    let table = if args.all_categorical {
        let table = read_csv(&args.data, None)?;
        for name in &table.names {
            schema.entry(name.clone()).or_insert(ColumnKind::Categorical);
        }
        read_csv(&args.data, Some(&schema))?
    } else if schema.is_empty() {
        read_csv(&args.data, None)?
    } else {
        read_csv(&args.data, Some(&schema))?
    };
    let out = discretize(&table, args.bins)?;
    for warn in &out.constant_columns {
        eprintln!("warning: column '{warn}' has a single category");
    }
    Ok(out.data)
}

fn parse_search(args: &SearchArgs) -> Result<SearchConfig> {
    let config = SearchConfig {
        score: args.score.parse()?,
        max_parents: args.max_parents,
        epsilon: args.epsilon,
        max_iterations: args.max_iterations,
    };
    config.validate()?;
    Ok(config)
}

fn parse_threshold(threshold: &str, grid_step: f64) -> Result<ThresholdChoice> {
    if threshold.eq_ignore_ascii_case("auto") {
        Ok(ThresholdChoice::Auto { grid_step })
    } else {
        let value: f64 = threshold
            .parse()
            .map_err(|_| Error::Contract(format!("threshold '{threshold}' is neither auto nor a number")))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Contract(format!(
                "threshold {value} outside [0,1]"
            )));
        }
        Ok(ThresholdChoice::Fixed { value })
    }
}

pub fn parse_compression(args: &BlockArgs) -> Result<CompressionConfig> {
    compression_from(&args.compression, args.alpha, args.min_count, args.hd_threshold)
}

pub fn compression_from(
    name: &str,
    alpha: f64,
    min_count: u64,
    hd_threshold: f64,
) -> Result<CompressionConfig> {
    match name.to_ascii_lowercase().as_str() {
        "freq" | "most_frequent" => Ok(CompressionConfig::MostFrequent { alpha, min_count }),
        "hamming" => Ok(CompressionConfig::Hamming {
            threshold: hd_threshold,
        }),
        other => Err(Error::Contract(format!(
            "unknown compression '{other}' (use freq or hamming)"
        ))),
    }
}

fn block_config(
    search: &SearchArgs,
    block: &BlockArgs,
    seed: Option<u64>,
) -> Result<BlockConfig> {
    Ok(BlockConfig {
        threshold: parse_threshold(&block.threshold, block.grid_step)?,
        compression: parse_compression(block)?,
        search: parse_search(search)?,
        smoothing: block.smoothing,
        seed,
    })
}

pub fn sample(network: &Path, n: usize, seed: u64, out: &Path) -> Result<()> {
    let net = read_network(network)?;
    let data = forward_sample(&net, n, seed)?;
    let file = std::fs::File::create(out)?;
    write_dataset_csv(&data, std::io::BufWriter::new(file))?;
    println!("wrote {} rows x {} variables to {}", data.n_rows(), data.n_vars(), out.display());
    Ok(())
}

pub fn divergence(args: &DataArgs, out: &Path) -> Result<()> {
    let data = load_dataset(args)?;
    let div = divergence_matrix(&data)?;
    std::fs::write(out, div.export_csv())?;
    println!("wrote {}x{} divergence matrix to {}", div.size(), div.size(), out.display());
    Ok(())
}

pub fn cluster(args: &DataArgs, threshold: &str, grid_step: f64, out: &Path) -> Result<()> {
    let data = load_dataset(args)?;
    let div = divergence_matrix(&data)?;
    let clustering = match parse_threshold(threshold, grid_step)? {
        ThresholdChoice::Fixed { value } => agglomerate(&div, value)?,
        ThresholdChoice::Auto { grid_step } => {
            let grid = threshold_grid(grid_step)?;
            recommend_threshold(&div, &grid)?.1
        }
    };
    std::fs::write(out, clustering.export_text(data.names()))?;
    println!(
        "threshold {} -> {} clusters (largest {})",
        clustering.threshold,
        clustering.n_clusters(),
        clustering.largest_cluster()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn learn(
    data_args: &DataArgs,
    mode: &str,
    search: &SearchArgs,
    block: &BlockArgs,
    seed: Option<u64>,
    trace: bool,
    timings: bool,
    out: &Path,
) -> Result<()> {
    let data = load_dataset(data_args)?;
    match mode.to_ascii_lowercase().as_str() {
        "classic" => {
            let config = parse_search(search)?;
            let outcome = learn_classic(&data, &config)?;
            if trace {
                for m in &outcome.stats.applied {
                    println!("{},{},{},{},{}", m.iteration, m.kind, m.parent, m.child, m.gain);
                }
            }
            let doc =
                ModelDocument::from_classic(data.arities(), &outcome, &config, seed, timings);
            save_model_document(&doc, out)?;
            eprintln!(
                "classic: {} edges, score {:.6}, {:.1} ms",
                outcome.dag.edge_count(),
                outcome.score.total,
                outcome.stats.elapsed_ms
            );
        }
        "block" => {
            if trace {
                return Err(Error::Contract(
                    "--trace is only available for --mode classic".into(),
                ));
            }
            let config = block_config(search, block, seed)?;
            let (model, stage_timings) = learn_block(&data, &config)?;
            let doc = ModelDocument::from_block(&model, timings.then_some(&stage_timings));
            save_model_document(&doc, out)?;
            eprintln!(
                "block: threshold {}, {} clusters, combined {} nodes / {} edges, structure {:.1} ms",
                model.provenance.threshold_used,
                model.clustering.n_clusters(),
                model.combined.node_count(),
                model.combined.edge_count(),
                stage_timings.structure_ms()
            );
        }
        other => {
            return Err(Error::Contract(format!(
                "unknown mode '{other}' (use classic or block)"
            )))
        }
    }
    Ok(())
}

pub fn shd(learned: &Path, truth: &Path) -> Result<()> {
    let doc = load_model_document(learned)?;
    let learned_dag = doc.comparison_dag()?;
    let net = read_network(truth)?;
    let truth_dag = net.dag()?;
    let value = graph::shd(&learned_dag, &truth_dag)?;
    println!("{value}");
    Ok(())
}

pub fn impute_eval(
    data_args: &DataArgs,
    search: &SearchArgs,
    block: &BlockArgs,
    rows: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let data = load_dataset(data_args)?;
    let config = block_config(search, block, seed)?;
    let (model, _) = learn_block(&data, &config)?;
    let separated = fit_separated(&model.clustering, &model.local_dags, &data, config.smoothing)?;
    let report = evaluate_imputation(&model, &separated, &data, rows)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    std::fs::write(out, json)?;
    match report.accuracy_ratio {
        Some(r) => println!(
            "connected {:.6} separated {:.6} ratio {:.6}",
            report.overall_connected, report.overall_separated, r
        ),
        None => println!(
            "connected {:.6} separated {:.6} ratio undefined",
            report.overall_connected, report.overall_separated
        ),
    }
    Ok(())
}
