//! Ground-truth network files and forward sampling.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};
use crate::graph::Dag;

/// One node of a ground-truth network: states, parent names, and a CPT with
/// one probability row per parent-state combination. Rows are laid out
/// row-major over the parents in declared order, last parent fastest-varying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

/// A serializable discrete Bayesian network used as sampling ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthNetwork {
    pub nodes: Vec<NetworkNode>,
}

impl GroundTruthNetwork {
    /// Validates names, parent references, acyclicity, CPT dimensions, and
    /// row normalization (1 ± 1e-6).
    pub fn validate(&self) -> Result<()> {
        let mut index = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate node name '{}'",
                    node.name
                )));
            }
            if node.states.is_empty() {
                return Err(Error::InvalidNetwork(format!(
                    "node '{}' has no states",
                    node.name
                )));
            }
        }
        for node in &self.nodes {
            let mut seen = std::collections::HashSet::new();
            for p in &node.parents {
                if !index.contains_key(p) {
                    return Err(Error::InvalidNetwork(format!(
                        "node '{}' lists unknown parent '{p}'",
                        node.name
                    )));
                }
                if p == &node.name {
                    return Err(Error::InvalidNetwork(format!(
                        "node '{}' is its own parent",
                        node.name
                    )));
                }
                if !seen.insert(p.as_str()) {
                    return Err(Error::InvalidNetwork(format!(
                        "node '{}' lists parent '{p}' twice",
                        node.name
                    )));
                }
            }
        }
        // Acyclicity via the DAG constructor.
        self.dag()
            .map_err(|_| Error::InvalidNetwork("parent structure contains a cycle".into()))?;

        for node in &self.nodes {
            let expected_rows: usize = node
                .parents
                .iter()
                .map(|p| self.nodes[index[p]].states.len())
                .product();
            if node.cpt.len() != expected_rows {
                return Err(Error::InvalidNetwork(format!(
                    "node '{}' has {} CPT rows, expected {expected_rows}",
                    node.name,
                    node.cpt.len()
                )));
            }
            for (r, row) in node.cpt.iter().enumerate() {
                if row.len() != node.states.len() {
                    return Err(Error::InvalidNetwork(format!(
                        "node '{}' CPT row {r} has {} entries, expected {}",
                        node.name,
                        row.len(),
                        node.states.len()
                    )));
                }
                if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                    return Err(Error::InvalidNetwork(format!(
                        "node '{}' CPT row {r} has a negative or non-finite entry",
                        node.name
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidNetwork(format!(
                        "node '{}' CPT row {r} sums to {sum}, expected 1",
                        node.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// The parent structure as a [`Dag`] over declared node order.
    pub fn dag(&self) -> Result<Dag> {
        let names: Vec<String> = self.nodes.iter().map(|n| n.name.clone()).collect();
        let edges: Vec<(String, String)> = self
            .nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(|p| (p.clone(), n.name.clone())))
            .collect();
        Dag::from_named_edges(names, &edges)
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }
}

/// Reads and validates a network file.
pub fn read_network(path: &Path) -> Result<GroundTruthNetwork> {
    let file = std::fs::File::open(path)?;
    let net: GroundTruthNetwork = serde_json::from_reader(std::io::BufReader::new(file))?;
    net.validate()?;
    Ok(net)
}

/// Writes a network file. `read_network(write_network(net))` is the identity
/// on valid networks (serde preserves every f64 exactly).
pub fn write_network(net: &GroundTruthNetwork, path: &Path) -> Result<()> {
    net.validate()?;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, net)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

/// Ancestral sampling in topological order. Deterministic for a fixed seed;
/// the dataset's column order follows the network's declared node order.
pub fn forward_sample(net: &GroundTruthNetwork, n: usize, seed: u64) -> Result<DiscreteDataset> {
    net.validate()?;
    if n == 0 {
        return Err(Error::contract("sample count must be ≥ 1"));
    }
    let dag = net.dag()?;
    let order = dag.topological_order();
    let index: HashMap<&str, usize> = net
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| (node.name.as_str(), i))
        .collect();
    // Parent indices and arities per node, in declared parent order.
    let parent_info: Vec<(Vec<usize>, Vec<usize>)> = net
        .nodes
        .iter()
        .map(|node| {
            let ids: Vec<usize> = node.parents.iter().map(|p| index[p.as_str()]).collect();
            let ars: Vec<usize> = ids.iter().map(|&i| net.nodes[i].states.len()).collect();
            (ids, ars)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<u32>> = net
        .nodes
        .iter()
        .map(|_| Vec::with_capacity(n))
        .collect();
    let mut row = vec![0u32; net.nodes.len()];
    for _ in 0..n {
        for &j in &order {
            let node = &net.nodes[j];
            let (ref pids, ref pars) = parent_info[j];
            let mut cfg = 0usize;
            for (k, &pid) in pids.iter().enumerate() {
                cfg = cfg * pars[k] + row[pid] as usize;
            }
            let probs = &node.cpt[cfg];
            let u: f64 = rng.random();
            let mut cum = 0.0;
            let mut state = probs.len() - 1;
            for (s, &p) in probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    state = s;
                    break;
                }
            }
            row[j] = state as u32;
        }
        for (j, &v) in row.iter().enumerate() {
            columns[j].push(v);
        }
    }

    let names = net.nodes.iter().map(|node| node.name.clone()).collect();
    let arities = net
        .nodes
        .iter()
        .map(|node| node.states.len() as u32)
        .collect();
    DiscreteDataset::new(names, columns, arities)
}
