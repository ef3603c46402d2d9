//! Data ingestion: CSV reading, equal-frequency discretization, ground-truth
//! network files, and forward sampling.

mod csvio;
mod discretize;
mod network;

pub use csvio::{read_csv, read_csv_reader, write_dataset_csv, ColumnKind, RawColumn, RawTable};
pub use discretize::{discretize, BinningSpec, Discretized};
pub use network::{forward_sample, read_network, write_network, GroundTruthNetwork, NetworkNode};

use crate::error::{Error, Result};

/// A column-oriented table of category codes with per-variable arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteDataset {
    names: Vec<String>,
    /// One code vector per variable; `columns[j][r] < arities[j]`.
    columns: Vec<Vec<u32>>,
    arities: Vec<u32>,
    n_rows: usize,
}

impl DiscreteDataset {
    /// Validates the type invariants: rectangular columns, codes within
    /// arity, arity ≥ 1, unique names.
    pub fn new(names: Vec<String>, columns: Vec<Vec<u32>>, arities: Vec<u32>) -> Result<Self> {
        if names.len() != columns.len() || names.len() != arities.len() {
            return Err(Error::contract(format!(
                "inconsistent dataset shape: {} names, {} columns, {} arities",
                names.len(),
                columns.len(),
                arities.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::contract(format!("duplicate variable name '{n}'")));
            }
        }
        let n_rows = columns.first().map(|c| c.len()).unwrap_or(0);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n_rows {
                return Err(Error::contract(format!(
                    "column '{}' has {} rows, expected {}",
                    names[j],
                    col.len(),
                    n_rows
                )));
            }
            if arities[j] < 1 {
                return Err(Error::contract(format!(
                    "variable '{}' has arity 0",
                    names[j]
                )));
            }
            if let Some(&bad) = col.iter().find(|&&c| c >= arities[j]) {
                return Err(Error::contract(format!(
                    "code {bad} out of range for variable '{}' (arity {})",
                    names[j], arities[j]
                )));
            }
        }
        Ok(DiscreteDataset {
            names,
            columns,
            arities,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn arity(&self, j: usize) -> u32 {
        self.arities[j]
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Row `r` restricted to the given variables, in their listed order.
    pub fn row_values(&self, r: usize, vars: &[usize]) -> Vec<u32> {
        vars.iter().map(|&j| self.columns[j][r]).collect()
    }

    /// A new dataset holding the given columns of `self`, in listed order.
    pub fn select(&self, vars: &[usize]) -> Result<DiscreteDataset> {
        let names = vars.iter().map(|&j| self.names[j].clone()).collect();
        let columns = vars.iter().map(|&j| self.columns[j].clone()).collect();
        let arities = vars.iter().map(|&j| self.arities[j]).collect();
        DiscreteDataset::new(names, columns, arities)
    }
}
