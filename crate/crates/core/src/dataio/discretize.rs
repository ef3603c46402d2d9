//! Equal-frequency discretization of raw tables.

use crate::dataio::{DiscreteDataset, RawColumn, RawTable};
use crate::error::{Error, Result};

/// Bin edges used to discretize the originally continuous columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningSpec {
    /// Requested number of bins.
    pub bin_count: usize,
    /// Strictly increasing edges per variable; `None` for columns that were
    /// categorical in the input.
    pub edges: Vec<Option<Vec<f64>>>,
}

/// Result of [`discretize`].
#[derive(Debug, Clone)]
pub struct Discretized {
    pub data: DiscreteDataset,
    pub binning: BinningSpec,
    /// Names of columns that collapsed to a single category.
    pub constant_columns: Vec<String>,
}

/// Replaces numeric columns by equal-frequency bin labels (lower-interpolation
/// empirical quantiles at k/bins levels, duplicate edges merged) and maps
/// categorical columns to dense codes in first-appearance order.
///
/// The actual arity of a binned column may come out below `bins` when
/// quantile edges coincide. A column with a single distinct value becomes an
/// arity-1 column and is reported in `constant_columns` rather than erroring.
pub fn discretize(table: &RawTable, bins: usize) -> Result<Discretized> {
    if bins < 2 {
        return Err(Error::contract(format!("bins must be ≥ 2, got {bins}")));
    }
    if table.n_rows == 0 {
        return Err(Error::contract("cannot discretize an empty table"));
    }

    let mut columns = Vec::with_capacity(table.columns.len());
    let mut arities = Vec::with_capacity(table.columns.len());
    let mut edges_per_var = Vec::with_capacity(table.columns.len());
    let mut constant_columns = Vec::new();

    for (j, col) in table.columns.iter().enumerate() {
        match col {
            RawColumn::Numeric(values) => {
                let edges = quantile_edges(values, bins);
                let codes: Vec<u32> = values
                    .iter()
                    .map(|&x| edges.iter().filter(|&&e| x >= e).count() as u32)
                    .collect();
                let arity = edges.len() as u32 + 1;
                if arity == 1 {
                    constant_columns.push(table.names[j].clone());
                }
                columns.push(codes);
                arities.push(arity);
                edges_per_var.push(Some(edges));
            }
            RawColumn::Categorical(values) => {
                let mut code_of = std::collections::HashMap::new();
                let mut codes = Vec::with_capacity(values.len());
                for v in values {
                    let next = code_of.len() as u32;
                    let code = *code_of.entry(v.as_str()).or_insert(next);
                    codes.push(code);
                }
                let arity = code_of.len() as u32;
                if arity == 1 {
                    constant_columns.push(table.names[j].clone());
                }
                columns.push(codes);
                arities.push(arity);
                edges_per_var.push(None);
            }
        }
    }

    let data = DiscreteDataset::new(table.names.clone(), columns, arities)?;
    Ok(Discretized {
        data,
        binning: BinningSpec {
            bin_count: bins,
            edges: edges_per_var,
        },
        constant_columns,
    })
}

/// Lower-interpolation empirical quantile edges at levels k/bins, k=1..bins-1.
/// Duplicates and edges equal to the minimum (which would leave the bottom
/// bin empty) are dropped, so every remaining cell holds at least one value.
fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mut edges = Vec::new();
    for k in 1..bins {
        let idx = (k as f64 / bins as f64 * n as f64).floor() as usize;
        let idx = idx.min(n - 1);
        let e = sorted[idx];
        if e > sorted[0] && edges.last().is_none_or(|&last| e > last) {
            edges.push(e);
        }
    }
    edges
}
