//! Single-variable gap recovery on fitted networks: separated per-cluster
//! models versus the connected combined network with tied support nodes.

use serde::{Deserialize, Serialize};

use crate::blockpipeline::{fit_cpts, BlockModel, ColumnSource, Cpt};
use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::varcluster::VariableClustering;

/// A per-cluster fitted network used for separated-mode recovery.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub cluster: usize,
    /// Global variable indexes of the cluster members, ascending; member `k`
    /// is node `k` of `dag`.
    pub members: Vec<usize>,
    pub dag: Dag,
    pub cpts: Vec<Cpt>,
}

/// Fits one local model per cluster from the same data and smoothing the
/// connected model was fitted with.
pub fn fit_separated(
    clustering: &VariableClustering,
    local_dags: &[Dag],
    data: &DiscreteDataset,
    smoothing: f64,
) -> Result<Vec<LocalModel>> {
    if clustering.n_clusters() != local_dags.len() {
        return Err(Error::contract(
            "clustering and local DAGs disagree on cluster count",
        ));
    }
    clustering
        .clusters
        .iter()
        .zip(local_dags)
        .enumerate()
        .map(|(c, (members, dag))| {
            let columns: Vec<&[u32]> = members.iter().map(|&m| data.column(m)).collect();
            let arities: Vec<u32> = members.iter().map(|&m| data.arity(m)).collect();
            let cpts = fit_cpts(dag, &columns, &arities, smoothing)?;
            Ok(LocalModel {
                cluster: c,
                members: members.clone(),
                dag: dag.clone(),
                cpts,
            })
        })
        .collect()
}

/// Separated-mode recovery: the target's full conditional inside its own
/// cluster network — argmax over target states of
/// `P(target | parents) · Π_children P(child | parents)` with every other
/// member observed. Ties break toward the smallest state index.
pub fn impute_one_separated(
    local: &LocalModel,
    row: &[u32],
    target: usize,
) -> Result<u32> {
    let Some(t_local) = local.members.iter().position(|&m| m == target) else {
        return Err(Error::contract(format!(
            "variable {target} is not part of cluster {}",
            local.cluster
        )));
    };
    let mut assign: Vec<u32> = local.members.iter().map(|&m| row[m]).collect();
    let mut relevant: Vec<usize> = vec![t_local];
    relevant.extend(local.dag.children_of(t_local));

    let arity = local.cpts[t_local].child_arity;
    let mut best_state = 0u32;
    let mut best_score = f64::NEG_INFINITY;
    for t in 0..arity {
        assign[t_local] = t;
        let score = factor_product(&local.cpts, &relevant, |node| assign[node]);
        if score > best_score {
            best_score = score;
            best_state = t;
        }
    }
    Ok(best_state)
}

/// Connected-mode recovery: joint argmax over (target state, cluster code)
/// of the combined-network factors touching the target or its support nodes,
/// with top and bottom constrained to the same code value. For singleton
/// (pass-through) targets only the target itself is hidden.
pub fn impute_one_connected(model: &BlockModel, row: &[u32], target: usize) -> Result<u32> {
    if target >= model.variables.len() {
        return Err(Error::contract(format!(
            "variable index {target} out of range"
        )));
    }
    let codes = row_cluster_codes(model, row);
    connected_argmax(model, row, &codes, target)
}

/// Per-cluster code values for one fully observed row (`u32::MAX` marks
/// uncoded clusters).
fn row_cluster_codes(model: &BlockModel, row: &[u32]) -> Vec<u32> {
    model
        .codebooks
        .iter()
        .enumerate()
        .map(|(c, cb)| match cb {
            Some(cb) => {
                let combo: Vec<u32> = model.clustering.clusters[c]
                    .iter()
                    .map(|&m| row[m])
                    .collect();
                cb.code_with_fallback(&combo)
            }
            None => u32::MAX,
        })
        .collect()
}

fn connected_argmax(
    model: &BlockModel,
    row: &[u32],
    cluster_codes: &[u32],
    target: usize,
) -> Result<u32> {
    let assignment_of = model.clustering.assignment(model.variables.len());
    let cluster = assignment_of[target];
    let support = model.support_indexes(cluster);

    // Base assignment over combined nodes.
    let sources = model.column_sources();
    let mut assign: Vec<u32> = sources
        .iter()
        .map(|s| match *s {
            ColumnSource::Variable(j) => row[j],
            ColumnSource::Code(c) => cluster_codes[c],
        })
        .collect();

    // Factors touching any hidden node.
    let mut hidden: Vec<usize> = vec![target];
    if let Some((top, bot)) = support {
        hidden.push(top);
        hidden.push(bot);
    }
    let mut relevant: Vec<usize> = hidden.clone();
    for &h in &hidden {
        relevant.extend(model.combined.children_of(h));
    }
    relevant.sort_unstable();
    relevant.dedup();

    let arity = model.arities[target];
    let n_codes = support
        .map(|_| model.codebooks[cluster].as_ref().expect("coded").n_codes)
        .unwrap_or(1);

    let mut best = (0u32, f64::NEG_INFINITY);
    for t in 0..arity {
        assign[target] = t;
        for v in 0..n_codes {
            if let Some((top, bot)) = support {
                assign[top] = v;
                assign[bot] = v;
            }
            let score = factor_product(&model.cpts, &relevant, |node| assign[node]);
            if score > best.1 {
                best = (t, score);
            }
        }
    }
    Ok(best.0)
}

fn factor_product(cpts: &[Cpt], nodes: &[usize], value_of: impl Fn(usize) -> u32) -> f64 {
    let mut p = 1.0;
    for &x in nodes {
        let cpt = &cpts[x];
        let cfg = cpt.config_of(&value_of);
        p *= cpt.prob(cfg, value_of(x));
    }
    p
}

/// Per-variable recovery accuracy for both modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableAccuracy {
    pub name: String,
    pub connected: f64,
    pub separated: f64,
}

/// Outcome of the connected-versus-separated recovery experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub rows_evaluated: usize,
    pub per_variable: Vec<VariableAccuracy>,
    pub overall_connected: f64,
    pub overall_separated: f64,
    /// `connected/separated − 1`; `None` when the separated accuracy is 0.
    pub accuracy_ratio: Option<f64>,
}

/// Hides every variable of every row in turn (plus its cluster code in
/// connected mode), recovers it from both model families, and reports the
/// accuracies and their ratio-minus-one.
pub fn evaluate_imputation(
    model: &BlockModel,
    separated: &[LocalModel],
    data: &DiscreteDataset,
    max_rows: Option<usize>,
) -> Result<ImputationReport> {
    if separated.len() != model.clustering.n_clusters() {
        return Err(Error::contract(
            "separated models must cover every cluster",
        ));
    }
    if data.names() != model.variables.as_slice() {
        return Err(Error::contract("dataset does not match the model variables"));
    }
    let p = data.n_vars();
    let rows = max_rows.unwrap_or(data.n_rows()).min(data.n_rows());
    if rows == 0 {
        return Err(Error::contract("no rows to evaluate"));
    }

    let cluster_of = model.clustering.assignment(p);
    let mut correct_con = vec![0u64; p];
    let mut correct_sep = vec![0u64; p];
    let mut row = vec![0u32; p];
    for r in 0..rows {
        for j in 0..p {
            row[j] = data.column(j)[r];
        }
        let codes = row_cluster_codes(model, &row);
        for j in 0..p {
            let truth = row[j];
            let sep = impute_one_separated(&separated[cluster_of[j]], &row, j)?;
            let con = connected_argmax(model, &row, &codes, j)?;
            if sep == truth {
                correct_sep[j] += 1;
            }
            if con == truth {
                correct_con[j] += 1;
            }
        }
    }

    let per_variable: Vec<VariableAccuracy> = (0..p)
        .map(|j| VariableAccuracy {
            name: data.name(j).to_string(),
            connected: correct_con[j] as f64 / rows as f64,
            separated: correct_sep[j] as f64 / rows as f64,
        })
        .collect();
    let total = (rows * p) as f64;
    let overall_connected = correct_con.iter().sum::<u64>() as f64 / total;
    let overall_separated = correct_sep.iter().sum::<u64>() as f64 / total;
    let accuracy_ratio = if overall_separated > 0.0 {
        Some(overall_connected / overall_separated - 1.0)
    } else {
        None
    };
    Ok(ImputationReport {
        rows_evaluated: rows,
        per_variable,
        overall_connected,
        overall_separated,
        accuracy_ratio,
    })
}
