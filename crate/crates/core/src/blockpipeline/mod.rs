//! The five-stage block-learning pipeline: divergence + clustering, local
//! structure search per cluster, combination compression, global structure
//! search over code columns, and support-node stitching — plus the classic
//! whole-graph baseline, CPT fitting, and single-variable imputation.

mod document;
mod impute;

pub use document::{
    load_model_document, save_model_document, BlockDocument, ClassicDocument, CptDocument,
    ModelDocument,
};
pub use impute::{
    evaluate_imputation, fit_separated, impute_one_connected, impute_one_separated,
    ImputationReport, LocalModel, VariableAccuracy,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{
    build_hamming_codebook, build_most_frequent_codebook, encode_column, enumerate_combinations,
    Codebook, MostFrequentOutcome,
};
use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::infotheory::divergence_matrix;
use crate::search::{hill_climb, ScoreKind, ScoreValue, SearchConfig, SearchStats};
use crate::varcluster::{agglomerate, recommend_threshold, threshold_grid, VariableClustering};

/// Reserved name prefix for code columns and support nodes.
const CODE_PREFIX: &str = "__code";

/// How the clustering threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdChoice {
    /// Pick the recommended threshold from the uniform grid with this step.
    Auto { grid_step: f64 },
    Fixed { value: f64 },
}

impl Default for ThresholdChoice {
    fn default() -> Self {
        ThresholdChoice::Auto { grid_step: 0.1 }
    }
}

/// Which compression builds the per-cluster code columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CompressionConfig {
    MostFrequent { alpha: f64, min_count: u64 },
    Hamming { threshold: f64 },
}

impl CompressionConfig {
    pub fn most_frequent_default() -> Self {
        CompressionConfig::MostFrequent {
            alpha: 0.05,
            min_count: 5,
        }
    }

    pub fn hamming_default() -> Self {
        CompressionConfig::Hamming { threshold: 0.95 }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CompressionConfig::MostFrequent { .. } => "freq",
            CompressionConfig::Hamming { .. } => "hamming",
        }
    }
}

/// Full block-learning configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub threshold: ThresholdChoice,
    pub compression: CompressionConfig,
    pub search: SearchConfig,
    /// Additive smoothing used when fitting CPTs.
    pub smoothing: f64,
    /// Echoed into provenance; the pipeline itself is deterministic.
    pub seed: Option<u64>,
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig {
            threshold: ThresholdChoice::default(),
            compression: CompressionConfig::hamming_default(),
            search: SearchConfig::default(),
            smoothing: 1.0,
            seed: None,
        }
    }
}

/// Wall-clock per-stage timings in milliseconds. Kept outside [`BlockModel`]
/// so the model itself is bit-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub divergence_ms: f64,
    pub clustering_ms: f64,
    pub local_ms: f64,
    pub compression_ms: f64,
    pub global_ms: f64,
    pub connect_ms: f64,
    pub fit_ms: f64,
}

impl StageTimings {
    /// Structure learning only: everything except CPT fitting, mirroring the
    /// timing target of the benchmark comparisons.
    pub fn structure_ms(&self) -> f64 {
        self.divergence_ms
            + self.clustering_ms
            + self.local_ms
            + self.compression_ms
            + self.global_ms
            + self.connect_ms
    }
}

/// Run configuration echoed into the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub score: ScoreKind,
    pub threshold_requested: ThresholdChoice,
    pub threshold_used: f64,
    pub compression: CompressionConfig,
    pub smoothing: f64,
    pub seed: Option<u64>,
}

/// A sparse conditional probability table for one node of a fitted network.
///
/// Row index is the mixed-radix combination of the parent values (parents in
/// ascending node-index order, last parent fastest-varying). Only observed
/// parent configurations are stored; unobserved ones read as the uniform row,
/// which is exactly the additive-smoothing posterior with zero counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    /// Parent node indexes (within the fitted network), ascending.
    pub parents: Vec<usize>,
    pub parent_arities: Vec<u32>,
    pub child_arity: u32,
    pub n_configs: u64,
    /// Observed configurations, sorted by configuration index.
    pub rows: Vec<(u64, Vec<f64>)>,
    pub default_row: Vec<f64>,
}

impl Cpt {
    fn fit(
        child_col: &[u32],
        child_arity: u32,
        parent_cols: &[&[u32]],
        parent_arities: &[u32],
        parents: Vec<usize>,
        smoothing: f64,
    ) -> Result<Cpt> {
        let mut n_configs: u64 = 1;
        for &a in parent_arities {
            n_configs = n_configs
                .checked_mul(a as u64)
                .ok_or_else(|| Error::contract("parent configuration space overflows u64"))?;
        }
        let mut counts: std::collections::HashMap<u64, Vec<u64>> = std::collections::HashMap::new();
        for r in 0..child_col.len() {
            let mut cfg = 0u64;
            for (k, col) in parent_cols.iter().enumerate() {
                cfg = cfg * parent_arities[k] as u64 + col[r] as u64;
            }
            counts
                .entry(cfg)
                .or_insert_with(|| vec![0; child_arity as usize])[child_col[r] as usize] += 1;
        }
        let mut rows: Vec<(u64, Vec<f64>)> = counts
            .into_iter()
            .map(|(cfg, cs)| {
                let total: u64 = cs.iter().sum();
                let denom = total as f64 + smoothing * child_arity as f64;
                let probs = cs
                    .iter()
                    .map(|&c| {
                        if denom > 0.0 {
                            (c as f64 + smoothing) / denom
                        } else {
                            1.0 / child_arity as f64
                        }
                    })
                    .collect();
                (cfg, probs)
            })
            .collect();
        rows.sort_unstable_by_key(|(cfg, _)| *cfg);
        Ok(Cpt {
            parents,
            parent_arities: parent_arities.to_vec(),
            child_arity,
            n_configs,
            rows,
            default_row: vec![1.0 / child_arity as f64; child_arity as usize],
        })
    }

    /// Mixed-radix configuration index for parent values supplied per parent
    /// node index.
    pub fn config_of(&self, mut value_of: impl FnMut(usize) -> u32) -> u64 {
        let mut cfg = 0u64;
        for (k, &p) in self.parents.iter().enumerate() {
            cfg = cfg * self.parent_arities[k] as u64 + value_of(p) as u64;
        }
        cfg
    }

    pub fn prob(&self, cfg: u64, state: u32) -> f64 {
        match self.rows.binary_search_by_key(&cfg, |(c, _)| *c) {
            Ok(i) => self.rows[i].1[state as usize],
            Err(_) => self.default_row[state as usize],
        }
    }
}

/// Fits maximum-likelihood CPTs with additive smoothing for every node of
/// `dag`, reading each node's data from `columns[node]`.
pub fn fit_cpts(
    dag: &Dag,
    columns: &[&[u32]],
    arities: &[u32],
    smoothing: f64,
) -> Result<Vec<Cpt>> {
    if columns.len() != dag.node_count() || arities.len() != dag.node_count() {
        return Err(Error::contract(
            "fit_cpts needs one column and arity per node",
        ));
    }
    if smoothing < 0.0 {
        return Err(Error::contract("smoothing must be non-negative"));
    }
    (0..dag.node_count())
        .map(|v| {
            let parents: Vec<usize> = dag.parents_of(v).iter().copied().collect();
            let pcols: Vec<&[u32]> = parents.iter().map(|&p| columns[p]).collect();
            let pars: Vec<u32> = parents.iter().map(|&p| arities[p]).collect();
            Cpt::fit(columns[v], arities[v], &pcols, &pars, parents, smoothing)
        })
        .collect()
}

/// Result of the classical whole-graph baseline.
#[derive(Debug, Clone)]
pub struct ClassicOutcome {
    pub dag: Dag,
    pub score: ScoreValue,
    pub stats: SearchStats,
}

/// Classical Hill-Climbing over all variables; the unmodified baseline every
/// benchmark ratio is computed against.
pub fn learn_classic(data: &DiscreteDataset, search: &SearchConfig) -> Result<ClassicOutcome> {
    let nodes: Vec<usize> = (0..data.n_vars()).collect();
    let (dag, score, stats) = hill_climb(data, &nodes, search)?;
    Ok(ClassicOutcome { dag, score, stats })
}

/// The learned block model: clustering, per-cluster local DAGs, codebooks,
/// the global DAG over code/pass-through columns, the stitched combined
/// network, and fitted CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    pub variables: Vec<String>,
    pub arities: Vec<u32>,
    pub clustering: VariableClustering,
    pub local_dags: Vec<Dag>,
    pub local_scores: Vec<ScoreValue>,
    /// One codebook per cluster of size ≥ 2; singletons pass through uncoded.
    pub codebooks: Vec<Option<Codebook>>,
    pub global_dag: Dag,
    pub global_score: ScoreValue,
    pub combined: Dag,
    /// CPTs aligned with `combined`'s node order.
    pub cpts: Vec<Cpt>,
    pub provenance: Provenance,
}

/// What backs a combined-network node: an original variable column or a
/// cluster's code column (shared by both support nodes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnSource {
    Variable(usize),
    Code(usize),
}

impl BlockModel {
    pub fn code_column_name(cluster: usize) -> String {
        format!("{CODE_PREFIX}{cluster}")
    }

    pub fn support_top_name(cluster: usize) -> String {
        format!("{CODE_PREFIX}{cluster}_top")
    }

    pub fn support_bottom_name(cluster: usize) -> String {
        format!("{CODE_PREFIX}{cluster}_bot")
    }

    /// Indices of clusters that carry a code column.
    pub fn coded_clusters(&self) -> Vec<usize> {
        (0..self.codebooks.len())
            .filter(|&c| self.codebooks[c].is_some())
            .collect()
    }

    /// Data source per combined-network node: original variables first (in
    /// data order), then a (top, bottom) pair per coded cluster.
    pub fn column_sources(&self) -> Vec<ColumnSource> {
        let mut out: Vec<ColumnSource> =
            (0..self.variables.len()).map(ColumnSource::Variable).collect();
        for c in self.coded_clusters() {
            out.push(ColumnSource::Code(c));
            out.push(ColumnSource::Code(c));
        }
        out
    }

    /// Combined-node indexes of a coded cluster's (top, bottom) support pair.
    pub fn support_indexes(&self, cluster: usize) -> Option<(usize, usize)> {
        self.codebooks[cluster].as_ref()?;
        let rank = self
            .coded_clusters()
            .iter()
            .position(|&c| c == cluster)
            .expect("cluster is coded");
        let base = self.variables.len() + 2 * rank;
        Some((base, base + 1))
    }

    /// The combined DAG restricted to the original variables: support nodes
    /// and their incident edges removed. This is the structure used for SHD
    /// comparisons against ground truth.
    pub fn restricted_dag(&self) -> Result<Dag> {
        self.combined.restrict_to(&self.variables)
    }
}

/// Builds the combined network: per coded cluster a top support node feeding
/// every member and a bottom support node fed by every member, plus every
/// global edge mapped from the source cluster's output side (bottom node, or
/// the variable itself for pass-through singletons) into the target
/// cluster's input side (top node or variable).
///
/// `global_dag` node `i` must correspond to `clustering.clusters[i]`.
pub fn connect(
    clustering: &VariableClustering,
    local_dags: &[Dag],
    codebooks: &[Option<Codebook>],
    global_dag: &Dag,
    variables: &[String],
) -> Result<Dag> {
    let n_clusters = clustering.n_clusters();
    if local_dags.len() != n_clusters
        || codebooks.len() != n_clusters
        || global_dag.node_count() != n_clusters
    {
        return Err(Error::contract(
            "clustering, local DAGs, codebooks, and global DAG must agree on cluster count",
        ));
    }

    let mut nodes: Vec<String> = variables.to_vec();
    for (c, cb) in codebooks.iter().enumerate() {
        if cb.is_some() {
            nodes.push(BlockModel::support_top_name(c));
            nodes.push(BlockModel::support_bottom_name(c));
        }
    }

    let mut edges: Vec<(String, String)> = Vec::new();
    for (c, dag) in local_dags.iter().enumerate() {
        for (p, ch) in dag.named_edges() {
            edges.push((p, ch));
        }
        if codebooks[c].is_some() {
            let top = BlockModel::support_top_name(c);
            let bot = BlockModel::support_bottom_name(c);
            for &m in &clustering.clusters[c] {
                edges.push((top.clone(), variables[m].clone()));
                edges.push((variables[m].clone(), bot.clone()));
            }
        }
    }
    // Output side of u into input side of v for every global edge u→v.
    for (u, v) in global_dag.edges() {
        let from = if codebooks[u].is_some() {
            BlockModel::support_bottom_name(u)
        } else {
            variables[clustering.clusters[u][0]].clone()
        };
        let to = if codebooks[v].is_some() {
            BlockModel::support_top_name(v)
        } else {
            variables[clustering.clusters[v][0]].clone()
        };
        edges.push((from, to));
    }

    // Acyclic by construction (intra-cluster flow is top→members→bottom and
    // the global DAG is acyclic); from_named_edges re-checks.
    Dag::from_named_edges(nodes, &edges)
}

/// Runs the five-stage pipeline and fits CPTs. Most-frequent compression
/// failures abort with [`Error::CompressionInfeasible`] naming every cluster
/// that violated the minimum-count constraint.
pub fn learn_block(
    data: &DiscreteDataset,
    config: &BlockConfig,
) -> Result<(BlockModel, StageTimings)> {
    config.search.validate()?;
    if data.n_vars() == 0 || data.n_rows() == 0 {
        return Err(Error::contract("dataset must have variables and rows"));
    }
    for name in data.names() {
        if name.starts_with(CODE_PREFIX) {
            return Err(Error::contract(format!(
                "variable name '{name}' collides with the reserved '{CODE_PREFIX}' prefix"
            )));
        }
    }

    // Stage 1: divergences + clustering.
    let t = Instant::now();
    let div = divergence_matrix(data)?;
    let divergence_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let (threshold_used, clustering) = match config.threshold {
        ThresholdChoice::Fixed { value } => (value, agglomerate(&div, value)?),
        ThresholdChoice::Auto { grid_step } => {
            let grid = threshold_grid(grid_step)?;
            recommend_threshold(&div, &grid)?
        }
    };
    let clustering_ms = t.elapsed().as_secs_f64() * 1e3;

    // Stage 2: local structure per cluster (independent searches).
    let t = Instant::now();
    let local_results: Vec<(Dag, ScoreValue, SearchStats)> = clustering
        .clusters
        .par_iter()
        .map(|members| hill_climb(data, members, &config.search))
        .collect::<Result<_>>()?;
    let local_ms = t.elapsed().as_secs_f64() * 1e3;
    let mut local_dags = Vec::with_capacity(local_results.len());
    let mut local_scores = Vec::with_capacity(local_results.len());
    for (dag, score, _) in local_results {
        local_dags.push(dag);
        local_scores.push(score);
    }

    // Stage 3: compression per cluster of size ≥ 2.
    let t = Instant::now();
    let mut codebooks: Vec<Option<Codebook>> = Vec::with_capacity(clustering.n_clusters());
    let mut code_columns: Vec<Option<Vec<u32>>> = Vec::with_capacity(clustering.n_clusters());
    let mut infeasible = Vec::new();
    for members in &clustering.clusters {
        if members.len() < 2 {
            codebooks.push(None);
            code_columns.push(None);
            continue;
        }
        let combos = enumerate_combinations(data, members)?;
        let member_names: Vec<String> =
            members.iter().map(|&m| data.name(m).to_string()).collect();
        let codebook = match config.compression {
            CompressionConfig::MostFrequent { alpha, min_count } => {
                match build_most_frequent_codebook(&combos, member_names, alpha, min_count)? {
                    MostFrequentOutcome::Built(cb) => cb,
                    MostFrequentOutcome::Infeasible(report) => {
                        infeasible.push(report);
                        codebooks.push(None);
                        code_columns.push(None);
                        continue;
                    }
                }
            }
            CompressionConfig::Hamming { threshold } => {
                build_hamming_codebook(&combos, member_names, threshold)?
            }
        };
        let column = encode_column(data, members, &codebook)?;
        codebooks.push(Some(codebook));
        code_columns.push(Some(column));
    }
    if !infeasible.is_empty() {
        return Err(Error::CompressionInfeasible(infeasible));
    }
    let compression_ms = t.elapsed().as_secs_f64() * 1e3;

    // Stage 4: global structure over code / pass-through columns.
    let t = Instant::now();
    let mut global_names = Vec::with_capacity(clustering.n_clusters());
    let mut global_columns = Vec::with_capacity(clustering.n_clusters());
    let mut global_arities = Vec::with_capacity(clustering.n_clusters());
    for (c, members) in clustering.clusters.iter().enumerate() {
        match (&codebooks[c], &code_columns[c]) {
            (Some(cb), Some(col)) => {
                global_names.push(BlockModel::code_column_name(c));
                global_columns.push(col.clone());
                global_arities.push(cb.n_codes);
            }
            _ => {
                let m = members[0];
                global_names.push(data.name(m).to_string());
                global_columns.push(data.column(m).to_vec());
                global_arities.push(data.arity(m));
            }
        }
    }
    let global_table = DiscreteDataset::new(global_names, global_columns, global_arities)?;
    let global_nodes: Vec<usize> = (0..global_table.n_vars()).collect();
    let (global_dag, global_score, _) = hill_climb(&global_table, &global_nodes, &config.search)?;
    let global_ms = t.elapsed().as_secs_f64() * 1e3;

    // Stage 5: stitch into the combined network.
    let t = Instant::now();
    let combined = connect(
        &clustering,
        &local_dags,
        &codebooks,
        &global_dag,
        data.names(),
    )?;
    let connect_ms = t.elapsed().as_secs_f64() * 1e3;

    // Fit CPTs over the combined network; both support nodes of a cluster
    // read the same code column.
    let t = Instant::now();
    let mut columns: Vec<&[u32]> = (0..data.n_vars()).map(|j| data.column(j)).collect();
    let mut arities: Vec<u32> = data.arities().to_vec();
    for (c, cb) in codebooks.iter().enumerate() {
        if let (Some(cb), Some(col)) = (cb, &code_columns[c]) {
            columns.push(col);
            columns.push(col);
            arities.push(cb.n_codes);
            arities.push(cb.n_codes);
        }
    }
    let cpts = fit_cpts(&combined, &columns, &arities, config.smoothing)?;
    let fit_ms = t.elapsed().as_secs_f64() * 1e3;

    let model = BlockModel {
        variables: data.names().to_vec(),
        arities: data.arities().to_vec(),
        clustering,
        local_dags,
        local_scores,
        codebooks,
        global_dag,
        global_score,
        combined,
        cpts,
        provenance: Provenance {
            score: config.search.score,
            threshold_requested: config.threshold,
            threshold_used,
            compression: config.compression,
            smoothing: config.smoothing,
            seed: config.seed,
        },
    };
    let timings = StageTimings {
        divergence_ms,
        clustering_ms,
        local_ms,
        compression_ms,
        global_ms,
        connect_ms,
        fit_ms,
    };
    Ok((model, timings))
}
