//! The model document: a single structured text file holding a learned
//! model. Byte-identical for identical models; stage wall-times are only
//! embedded when explicitly requested, so default documents are reproducible.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blockpipeline::{BlockModel, ClassicOutcome, Provenance, StageTimings};
use crate::compress::Codebook;
use crate::error::Result;
use crate::graph::Dag;
use crate::search::{ScoreKind, SearchConfig};

/// CPT of one combined-network node, with parent names resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptDocument {
    pub node: String,
    pub parents: Vec<String>,
    pub child_arity: u32,
    pub n_configs: u64,
    pub default_row: Vec<f64>,
    /// Observed parent configurations only, sorted by configuration index.
    pub rows: Vec<(u64, Vec<f64>)>,
}

/// Document for a classical whole-graph model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicDocument {
    pub variables: Vec<String>,
    pub arities: Vec<u32>,
    pub score_kind: ScoreKind,
    pub max_parents: usize,
    pub edges: Vec<(String, String)>,
    pub score_total: f64,
    pub score_locals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elapsed_ms: Option<f64>,
}

/// Document for a block model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDocument {
    pub variables: Vec<String>,
    pub arities: Vec<u32>,
    pub provenance: Provenance,
    /// Clusters as variable-name lists, canonical order.
    pub clusters: Vec<Vec<String>>,
    pub local_dags: Vec<Vec<(String, String)>>,
    pub codebooks: Vec<Option<Codebook>>,
    pub global_nodes: Vec<String>,
    pub global_edges: Vec<(String, String)>,
    pub combined_nodes: Vec<String>,
    pub combined_edges: Vec<(String, String)>,
    pub global_score_total: f64,
    pub cpts: Vec<CptDocument>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings_ms: Option<StageTimings>,
}

/// A learned model on disk: either mode, distinguished by a tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModelDocument {
    Classic(Box<ClassicDocument>),
    Block(Box<BlockDocument>),
}

impl ModelDocument {
    pub fn from_classic(
        data_arities: &[u32],
        outcome: &ClassicOutcome,
        config: &SearchConfig,
        seed: Option<u64>,
        include_elapsed: bool,
    ) -> Self {
        ModelDocument::Classic(Box::new(ClassicDocument {
            variables: outcome.dag.names().to_vec(),
            arities: data_arities.to_vec(),
            score_kind: config.score,
            max_parents: config.max_parents,
            edges: outcome.dag.named_edges(),
            score_total: outcome.score.total,
            score_locals: outcome.score.locals.clone(),
            seed,
            elapsed_ms: include_elapsed.then_some(outcome.stats.elapsed_ms),
        }))
    }

    pub fn from_block(model: &BlockModel, timings: Option<&StageTimings>) -> Self {
        let cpts = model
            .cpts
            .iter()
            .enumerate()
            .map(|(v, cpt)| CptDocument {
                node: model.combined.names()[v].clone(),
                parents: cpt
                    .parents
                    .iter()
                    .map(|&p| model.combined.names()[p].clone())
                    .collect(),
                child_arity: cpt.child_arity,
                n_configs: cpt.n_configs,
                default_row: cpt.default_row.clone(),
                rows: cpt.rows.clone(),
            })
            .collect();
        ModelDocument::Block(Box::new(BlockDocument {
            variables: model.variables.clone(),
            arities: model.arities.clone(),
            provenance: model.provenance,
            clusters: model
                .clustering
                .clusters
                .iter()
                .map(|c| c.iter().map(|&m| model.variables[m].clone()).collect())
                .collect(),
            local_dags: model.local_dags.iter().map(|d| d.named_edges()).collect(),
            codebooks: model.codebooks.clone(),
            global_nodes: model.global_dag.names().to_vec(),
            global_edges: model.global_dag.named_edges(),
            combined_nodes: model.combined.names().to_vec(),
            combined_edges: model.combined.named_edges(),
            global_score_total: model.global_score.total,
            cpts,
            timings_ms: timings.copied(),
        }))
    }

    /// The structure used for comparisons against ground truth: the classic
    /// DAG itself, or the combined network restricted to the original
    /// variables (support nodes removed).
    pub fn comparison_dag(&self) -> Result<Dag> {
        match self {
            ModelDocument::Classic(doc) => {
                Dag::from_named_edges(doc.variables.clone(), &doc.edges)
            }
            ModelDocument::Block(doc) => {
                let combined =
                    Dag::from_named_edges(doc.combined_nodes.clone(), &doc.combined_edges)?;
                combined.restrict_to(&doc.variables)
            }
        }
    }

    /// Stable pretty-printed JSON; identical models serialize to identical
    /// bytes.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes a model document.
pub fn save_model_document(doc: &ModelDocument, path: &Path) -> Result<()> {
    std::fs::write(path, doc.to_json()?)?;
    Ok(())
}

/// Reads a model document.
pub fn load_model_document(path: &Path) -> Result<ModelDocument> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
