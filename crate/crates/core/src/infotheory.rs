//! Plug-in entropy, mutual information, normalized mutual information, and
//! the pairwise divergence matrix d(X,Y) = 1 − NMI(X,Y).
//!
//! All estimators are plain plug-in frequencies in natural log, no bias
//! correction. NMI is a ratio, so the log base cancels for clustering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};

/// Plug-in entropy of a code column, in nats. `0 ≤ entropy ≤ ln(arity)`.
pub fn entropy(column: &[u32], arity: u32) -> f64 {
    debug_assert!(!column.is_empty());
    let mut counts = vec![0u64; arity as usize];
    for &c in column {
        counts[c as usize] += 1;
    }
    entropy_from_counts(&counts, column.len() as u64)
}

fn entropy_from_counts(counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let q = c as f64 / n;
            h -= q * q.ln();
        }
    }
    h.max(0.0)
}

/// Plug-in mutual information between two equal-length code columns, in nats.
/// Tiny negatives from rounding are clamped to zero; `MI(X,X) = E(X)`.
pub fn mutual_information(x: &[u32], ax: u32, y: &[u32], ay: u32) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::contract(format!(
            "column lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::contract("columns must be non-empty"));
    }
    let (ax, ay) = (ax as usize, ay as usize);
    let mut joint = vec![0u64; ax * ay];
    let mut mx = vec![0u64; ax];
    let mut my = vec![0u64; ay];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize * ay + b as usize] += 1;
        mx[a as usize] += 1;
        my[b as usize] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for a in 0..ax {
        for b in 0..ay {
            let c = joint[a * ay + b];
            if c > 0 {
                let pxy = c as f64 / n;
                let px = mx[a] as f64 / n;
                let py = my[b] as f64 / n;
                mi += pxy * (pxy / (px * py)).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Normalized mutual information (symmetric uncertainty):
/// `2·MI / (E(X)+E(Y))`, in [0,1]. When both columns are constant the
/// denominator vanishes and the result is 0 by convention, so constant
/// variables never cluster with anything.
pub fn nmi(x: &[u32], ax: u32, y: &[u32], ay: u32) -> Result<f64> {
    let ex = entropy(x, ax);
    let ey = entropy(y, ay);
    if ex + ey == 0.0 {
        return Ok(0.0);
    }
    let mi = mutual_information(x, ax, y, ay)?;
    Ok((2.0 * mi / (ex + ey)).clamp(0.0, 1.0))
}

/// Symmetric p×p matrix of divergences `d(i,j) = 1 − NMI(col_i, col_j)`,
/// zero diagonal, entries in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMatrix {
    names: Vec<String>,
    size: usize,
    /// Row-major full matrix.
    values: Vec<f64>,
}

impl DivergenceMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// Square CSV with a header row and a leading name column, 12
    /// significant digits per entry.
    pub fn export_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("variable");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for i in 0..self.size {
            s.push_str(&self.names[i]);
            for j in 0..self.size {
                s.push(',');
                s.push_str(&format!("{:.11e}", self.get(i, j)));
            }
            s.push('\n');
        }
        s
    }
}

/// Computes all pairwise divergences. Pairs are evaluated in parallel into
/// fixed slots, so the result is bit-identical regardless of schedule.
pub fn divergence_matrix(data: &DiscreteDataset) -> Result<DivergenceMatrix> {
    let p = data.n_vars();
    if p == 0 {
        return Err(Error::contract("dataset has no variables"));
    }
    if data.n_rows() == 0 {
        return Err(Error::contract("dataset has no rows"));
    }
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    let computed: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = 1.0
                - nmi(data.column(i), data.arity(i), data.column(j), data.arity(j))
                    .expect("columns share the dataset's row count");
            d.clamp(0.0, 1.0)
        })
        .collect();
    let mut values = vec![0.0; p * p];
    for (&(i, j), &d) in pairs.iter().zip(&computed) {
        values[i * p + j] = d;
        values[j * p + i] = d;
    }
    Ok(DivergenceMatrix {
        names: data.names().to_vec(),
        size: p,
        values,
    })
}
