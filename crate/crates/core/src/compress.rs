//! Lossy compression of per-cluster value combinations into a single code
//! column: most-frequent coding with a Hamming fallback, and Hamming-distance
//! agglomerative coding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};
use crate::varcluster::complete_linkage_partition;

/// The tuple of values a cluster's variables take in one observation.
pub type Combination = Vec<u32>;

/// One distinct observed combination with its empirical frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationCount {
    pub combo: Combination,
    pub count: u64,
    pub prob: f64,
}

/// Which coding scheme built a codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMethod {
    MostFrequent,
    Hamming,
}

/// A combination together with its assigned code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookEntry {
    pub combo: Combination,
    pub count: u64,
    pub prob: f64,
    pub code: u32,
}

/// Mapping from a cluster's observed value combinations to dense integer
/// codes. Entries are sorted by descending probability, ties broken by
/// ascending combination tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub method: CodebookMethod,
    pub members: Vec<String>,
    pub entries: Vec<CodebookEntry>,
    pub n_codes: u32,
    /// Most-frequent coding: the prefix-selection coverage level α;
    /// `None` for Hamming codebooks.
    pub alpha: Option<f64>,
    /// Most-frequent coding: how many leading combinations are frequent.
    pub n_frequent: Option<usize>,
    /// Hamming coding: the normalized-distance merge threshold.
    pub hd_threshold: Option<f64>,
}

/// Why most-frequent compression failed for a cluster: one of the frequent
/// combinations does not have enough observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleCluster {
    pub members: Vec<String>,
    pub combination: Combination,
    pub count: u64,
    pub min_count: u64,
}

impl InfeasibleCluster {
    pub fn describe(&self) -> String {
        format!(
            "cluster [{}]: frequent combination {:?} has {} observation(s), needs {}",
            self.members.join(","),
            self.combination,
            self.count,
            self.min_count
        )
    }
}

/// Outcome of most-frequent codebook construction. Infeasibility is an
/// ordinary value so callers can aggregate per-cluster reports.
#[derive(Debug, Clone)]
pub enum MostFrequentOutcome {
    Built(Codebook),
    Infeasible(InfeasibleCluster),
}

/// Number of positions where two equal-length combinations differ.
pub fn hamming(a: &[u32], b: &[u32]) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "combination lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u32)
}

/// Counts the distinct combinations taken by `members` across all rows, and
/// sorts them by descending count (ties: ascending combination tuple).
pub fn enumerate_combinations(
    data: &DiscreteDataset,
    members: &[usize],
) -> Result<Vec<CombinationCount>> {
    if members.is_empty() {
        return Err(Error::contract("cluster must be non-empty"));
    }
    if data.n_rows() == 0 {
        return Err(Error::contract("dataset has no rows"));
    }
    let mut counts: HashMap<Combination, u64> = HashMap::new();
    for r in 0..data.n_rows() {
        *counts.entry(data.row_values(r, members)).or_insert(0) += 1;
    }
    let n = data.n_rows() as f64;
    let mut out: Vec<CombinationCount> = counts
        .into_iter()
        .map(|(combo, count)| CombinationCount {
            prob: count as f64 / n,
            combo,
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.combo.cmp(&b.combo)));
    Ok(out)
}

/// Most-frequent coding: the shortest prefix of descending-frequency
/// combinations whose mass reaches `1 − alpha` becomes the frequent set
/// (codes 0..l−1, in prefix order); every remaining combination maps to the
/// code of its Hamming-nearest frequent combination, ties going to the most
/// frequent of the nearest.
///
/// Infeasible (as a value, not an error) when any frequent combination has
/// fewer than `min_count` observations.
pub fn build_most_frequent_codebook(
    combos: &[CombinationCount],
    members: Vec<String>,
    alpha: f64,
    min_count: u64,
) -> Result<MostFrequentOutcome> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::contract(format!("alpha must be in (0,1), got {alpha}")));
    }
    validate_combos(combos, members.len())?;

    // Smallest l with Σ_{i≤l} P ≥ 1−α; the prefix sums are over the stored
    // probabilities so the selection is exactly reproducible from the
    // codebook itself.
    let target = 1.0 - alpha;
    let mut cum = 0.0;
    let mut n_frequent = combos.len();
    for (i, c) in combos.iter().enumerate() {
        cum += c.prob;
        if cum >= target {
            n_frequent = i + 1;
            break;
        }
    }

    for c in &combos[..n_frequent] {
        if c.count < min_count {
            return Ok(MostFrequentOutcome::Infeasible(InfeasibleCluster {
                members,
                combination: c.combo.clone(),
                count: c.count,
                min_count,
            }));
        }
    }

    let mut entries = Vec::with_capacity(combos.len());
    for (i, c) in combos.iter().enumerate() {
        let code = if i < n_frequent {
            i as u32
        } else {
            nearest_frequent(&c.combo, &combos[..n_frequent]) as u32
        };
        entries.push(CodebookEntry {
            combo: c.combo.clone(),
            count: c.count,
            prob: c.prob,
            code,
        });
    }

    Ok(MostFrequentOutcome::Built(Codebook {
        method: CodebookMethod::MostFrequent,
        members,
        entries,
        n_codes: n_frequent as u32,
        alpha: Some(alpha),
        n_frequent: Some(n_frequent),
        hd_threshold: None,
    }))
}

/// Index of the Hamming-nearest frequent combination; the frequent list is
/// in descending-probability order, so the first minimum is the most
/// frequent among equally near ones.
fn nearest_frequent(combo: &[u32], frequent: &[CombinationCount]) -> usize {
    let mut best = 0usize;
    let mut best_hd = u32::MAX;
    for (j, f) in frequent.iter().enumerate() {
        let hd = hamming(combo, &f.combo).expect("equal widths within a cluster");
        if hd < best_hd {
            best_hd = hd;
            best = j;
        }
    }
    best
}

/// Hamming coding: complete-linkage agglomerative clustering of the distinct
/// combinations under normalized Hamming distance (HD divided by the cluster
/// width), merging while the linkage is ≤ `threshold`. Groups are numbered
/// by descending total probability (ties: ascending smallest member
/// combination). Always feasible.
pub fn build_hamming_codebook(
    combos: &[CombinationCount],
    members: Vec<String>,
    threshold: f64,
) -> Result<Codebook> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::contract(format!(
            "threshold must be in [0,1], got {threshold}"
        )));
    }
    validate_combos(combos, members.len())?;
    let width = members.len() as f64;
    let k = combos.len();
    let dist: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    hamming(&combos[i].combo, &combos[j].combo).expect("equal widths") as f64
                        / width
                })
                .collect()
        })
        .collect();
    let groups = complete_linkage_partition(dist, threshold);

    // Order groups by descending total probability, then by smallest member
    // combination; item indexes follow the canonical combo ordering.
    let mut ranked: Vec<(f64, &Vec<usize>)> = groups
        .iter()
        .map(|g| (g.iter().map(|&i| combos[i].prob).sum::<f64>(), g))
        .collect();
    ranked.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| combos[a.1[0]].combo.cmp(&combos[b.1[0]].combo))
    });

    let mut code_of = vec![0u32; k];
    for (code, (_, group)) in ranked.iter().enumerate() {
        for &i in *group {
            code_of[i] = code as u32;
        }
    }
    let entries = combos
        .iter()
        .enumerate()
        .map(|(i, c)| CodebookEntry {
            combo: c.combo.clone(),
            count: c.count,
            prob: c.prob,
            code: code_of[i],
        })
        .collect();

    Ok(Codebook {
        method: CodebookMethod::Hamming,
        members,
        entries,
        n_codes: ranked.len() as u32,
        alpha: None,
        n_frequent: None,
        hd_threshold: Some(threshold),
    })
}

fn validate_combos(combos: &[CombinationCount], width: usize) -> Result<()> {
    if combos.is_empty() {
        return Err(Error::contract("no combinations to code"));
    }
    for c in combos {
        if c.combo.len() != width {
            return Err(Error::contract(format!(
                "combination width {} does not match cluster size {width}",
                c.combo.len()
            )));
        }
    }
    let total: f64 = combos.iter().map(|c| c.prob).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::contract(format!(
            "combination probabilities sum to {total}, expected 1"
        )));
    }
    for w in combos.windows(2) {
        if w[0].prob < w[1].prob {
            return Err(Error::contract(
                "combinations must be sorted by descending probability",
            ));
        }
    }
    Ok(())
}

impl Codebook {
    /// Exact lookup of an observed combination.
    pub fn code_of(&self, combo: &[u32]) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.combo.as_slice() == combo)
            .map(|e| e.code)
    }

    /// Codes a combination, falling back for tuples never seen at build
    /// time: most-frequent books use the nearest-frequent rule; Hamming
    /// books map to the group of the nearest observed combination, ties
    /// going to the most probable (entries are scanned in canonical order).
    pub fn code_with_fallback(&self, combo: &[u32]) -> u32 {
        if let Some(c) = self.code_of(combo) {
            return c;
        }
        match self.method {
            CodebookMethod::MostFrequent => {
                let l = self.n_frequent.unwrap_or(self.entries.len());
                let mut best = 0u32;
                let mut best_hd = u32::MAX;
                for e in &self.entries[..l] {
                    let hd = hamming(combo, &e.combo).expect("widths checked by caller");
                    if hd < best_hd {
                        best_hd = hd;
                        best = e.code;
                    }
                }
                best
            }
            CodebookMethod::Hamming => {
                let mut best = 0u32;
                let mut best_hd = u32::MAX;
                for e in &self.entries {
                    let hd = hamming(combo, &e.combo).expect("widths checked by caller");
                    if hd < best_hd {
                        best_hd = hd;
                        best = e.code;
                    }
                }
                best
            }
        }
    }

    /// Fraction of probability mass carried by combinations that keep their
    /// own code (for most-frequent books, the frequent prefix).
    pub fn frequent_coverage(&self) -> f64 {
        match self.n_frequent {
            Some(l) => self.entries[..l].iter().map(|e| e.prob).sum(),
            None => 1.0,
        }
    }
}

/// Applies a codebook to every row of the cluster columns, producing the
/// synthetic code column (arity = `n_codes`).
pub fn encode_column(
    data: &DiscreteDataset,
    members: &[usize],
    codebook: &Codebook,
) -> Result<Vec<u32>> {
    if members.len() != codebook.members.len() {
        return Err(Error::contract(
            "cluster size does not match codebook members",
        ));
    }
    for (&m, name) in members.iter().zip(&codebook.members) {
        if data.name(m) != name {
            return Err(Error::contract(format!(
                "codebook member '{name}' does not match column '{}'",
                data.name(m)
            )));
        }
    }
    // Index the exact map once; fall back per unseen row.
    let exact: HashMap<&[u32], u32> = codebook
        .entries
        .iter()
        .map(|e| (e.combo.as_slice(), e.code))
        .collect();
    let mut out = Vec::with_capacity(data.n_rows());
    let mut key = Vec::with_capacity(members.len());
    for r in 0..data.n_rows() {
        key.clear();
        key.extend(members.iter().map(|&j| data.column(j)[r]));
        let code = match exact.get(key.as_slice()) {
            Some(&c) => c,
            None => codebook.code_with_fallback(&key),
        };
        out.push(code);
    }
    Ok(out)
}
