//! Decomposable score functions (BIC, MI) with caching, and greedy
//! Hill-Climbing over DAG space.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataio::DiscreteDataset;
use crate::error::{Error, Result};
use crate::graph::Dag;

/// Which local score drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Bic,
    Mi,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreKind::Bic => write!(f, "bic"),
            ScoreKind::Mi => write!(f, "mi"),
        }
    }
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(ScoreKind::Bic),
            "mi" => Ok(ScoreKind::Mi),
            other => Err(Error::contract(format!("unknown score kind '{other}'"))),
        }
    }
}

/// Search parameters. The parent cap is mandatory for the MI score, which
/// never penalizes added parents; it also bounds BIC's move-evaluation cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub score: ScoreKind,
    pub max_parents: usize,
    /// Minimum score gain for a move to be applied (absolute).
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            score: ScoreKind::Bic,
            max_parents: 4,
            epsilon: 1e-9,
            max_iterations: 5000,
        }
    }
}

impl SearchConfig {
    pub fn with_score(score: ScoreKind) -> Self {
        SearchConfig {
            score,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 {
            return Err(Error::contract("epsilon must be positive"));
        }
        if self.max_parents < 1 {
            return Err(Error::contract("max_parents must be ≥ 1"));
        }
        if self.max_iterations < 1 {
            return Err(Error::contract("max_iterations must be ≥ 1"));
        }
        Ok(())
    }
}

/// A total score with its per-node decomposition; the total is the exact sum
/// of the locals in node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub total: f64,
    pub locals: Vec<f64>,
}

impl ScoreValue {
    fn from_locals(locals: Vec<f64>) -> Self {
        let total = locals.iter().sum();
        ScoreValue { total, locals }
    }
}

/// One applied hill-climbing move, for the optional search trace.
#[derive(Debug, Clone, Serialize)]
pub struct AppliedMove {
    pub iteration: usize,
    pub kind: &'static str,
    pub parent: String,
    pub child: String,
    pub gain: f64,
}

/// Search bookkeeping returned alongside the learned DAG.
#[derive(Debug, Clone)]
pub struct SearchStats {
    /// Number of applied moves.
    pub iterations: usize,
    pub moves_evaluated: u64,
    pub elapsed_ms: f64,
    pub applied: Vec<AppliedMove>,
}

// ---------------------------------------------------------------------------
// Counting and local scores
// ---------------------------------------------------------------------------

const DENSE_CELL_LIMIT: u64 = 1 << 16;

enum CountStore {
    /// `cells[cfg * r_child + state]`, for small parent-configuration spaces.
    Dense(Vec<u64>),
    Sparse(HashMap<u64, Vec<u64>>),
}

struct JointCounts {
    n_configs: u64,
    child_arity: u64,
    store: CountStore,
}

impl JointCounts {
    fn for_each_config(&self, mut f: impl FnMut(&[u64])) {
        match &self.store {
            CountStore::Dense(cells) => {
                let r = self.child_arity as usize;
                for cfg in 0..self.n_configs as usize {
                    f(&cells[cfg * r..(cfg + 1) * r]);
                }
            }
            CountStore::Sparse(map) => {
                // Deterministic order: sorted config ids.
                let mut keys: Vec<&u64> = map.keys().collect();
                keys.sort_unstable();
                for k in keys {
                    f(&map[k]);
                }
            }
        }
    }
}

fn tally(data: &DiscreteDataset, child: usize, parents: &[usize]) -> JointCounts {
    let r_child = data.arity(child) as u64;
    let mut n_configs: u64 = 1;
    for &p in parents {
        n_configs = n_configs.saturating_mul(data.arity(p) as u64);
    }
    let n = data.n_rows();
    let child_col = data.column(child);
    let cells = n_configs.saturating_mul(r_child);
    if cells <= DENSE_CELL_LIMIT {
        let mut dense = vec![0u64; cells as usize];
        match parents {
            [] => {
                for &s in child_col {
                    dense[s as usize] += 1;
                }
            }
            [p] => {
                let pc = data.column(*p);
                let r = r_child as usize;
                for i in 0..n {
                    dense[pc[i] as usize * r + child_col[i] as usize] += 1;
                }
            }
            _ => {
                let pcols: Vec<&[u32]> = parents.iter().map(|&p| data.column(p)).collect();
                let pars: Vec<u64> = parents.iter().map(|&p| data.arity(p) as u64).collect();
                for i in 0..n {
                    let mut cfg = 0u64;
                    for (k, col) in pcols.iter().enumerate() {
                        cfg = cfg * pars[k] + col[i] as u64;
                    }
                    dense[(cfg * r_child + child_col[i] as u64) as usize] += 1;
                }
            }
        }
        JointCounts {
            n_configs,
            child_arity: r_child,
            store: CountStore::Dense(dense),
        }
    } else {
        let pcols: Vec<&[u32]> = parents.iter().map(|&p| data.column(p)).collect();
        let pars: Vec<u64> = parents.iter().map(|&p| data.arity(p) as u64).collect();
        let mut map: HashMap<u64, Vec<u64>> = HashMap::new();
        for i in 0..n {
            let mut cfg = 0u64;
            for (k, col) in pcols.iter().enumerate() {
                cfg = cfg * pars[k] + col[i] as u64;
            }
            map.entry(cfg)
                .or_insert_with(|| vec![0; r_child as usize])[child_col[i] as usize] += 1;
        }
        JointCounts {
            n_configs,
            child_arity: r_child,
            store: CountStore::Sparse(map),
        }
    }
}

/// Discrete BIC local score, maximized:
/// `LL(child | parents) − (ln N / 2) · (r_child − 1) · Π r_parent`.
///
/// Parent configurations with zero count contribute nothing to the
/// likelihood but still count in the dimension penalty.
pub fn bic_local(data: &DiscreteDataset, child: usize, parents: &[usize]) -> f64 {
    debug_assert!(!parents.contains(&child));
    let counts = tally(data, child, parents);
    let mut ll = 0.0;
    counts.for_each_config(|states| {
        let total: u64 = states.iter().sum();
        if total == 0 {
            return;
        }
        let total_f = total as f64;
        for &c in states {
            if c > 0 {
                let cf = c as f64;
                ll += cf * (cf / total_f).ln();
            }
        }
    });
    let n = data.n_rows() as f64;
    let k = (counts.child_arity - 1) as f64 * counts.n_configs as f64;
    ll - 0.5 * n.ln() * k
}

/// MI local score, maximized: `N · MI(child ; joint parent configuration)`.
/// The joint parent variable is the product of the parent state spaces; an
/// empty parent set scores 0.
pub fn mi_local(data: &DiscreteDataset, child: usize, parents: &[usize]) -> f64 {
    debug_assert!(!parents.contains(&child));
    if parents.is_empty() {
        return 0.0;
    }
    let counts = tally(data, child, parents);
    let n = data.n_rows() as f64;
    let mut child_marginal = vec![0u64; counts.child_arity as usize];
    counts.for_each_config(|states| {
        for (s, &c) in states.iter().enumerate() {
            child_marginal[s] += c;
        }
    });
    let mut mi = 0.0;
    counts.for_each_config(|states| {
        let cfg_total: u64 = states.iter().sum();
        if cfg_total == 0 {
            return;
        }
        let p_cfg = cfg_total as f64 / n;
        for (s, &c) in states.iter().enumerate() {
            if c > 0 {
                let p_joint = c as f64 / n;
                let p_s = child_marginal[s] as f64 / n;
                mi += p_joint * (p_joint / (p_cfg * p_s)).ln();
            }
        }
    });
    n * mi.max(0.0)
}

/// Dispatches to the configured local score.
pub fn local_score(data: &DiscreteDataset, kind: ScoreKind, child: usize, parents: &[usize]) -> f64 {
    match kind {
        ScoreKind::Bic => bic_local(data, child, parents),
        ScoreKind::Mi => mi_local(data, child, parents),
    }
}

/// Memo of `(child, parent set) → local score` for one dataset and score
/// kind. Purely an evaluation cache: results are identical with or without
/// it.
pub struct ScoreCache {
    kind: ScoreKind,
    map: HashMap<(usize, Vec<usize>), f64>,
    pub lookups: u64,
    pub misses: u64,
}

impl ScoreCache {
    pub fn new(kind: ScoreKind) -> Self {
        ScoreCache {
            kind,
            map: HashMap::new(),
            lookups: 0,
            misses: 0,
        }
    }

    /// `parents` must be sorted ascending (the canonical key form).
    pub fn get(&mut self, data: &DiscreteDataset, child: usize, parents: &[usize]) -> f64 {
        self.lookups += 1;
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        if let Some(&v) = self.map.get(&(child, parents.to_vec())) {
            return v;
        }
        self.misses += 1;
        let v = local_score(data, self.kind, child, parents);
        self.map.insert((child, parents.to_vec()), v);
        v
    }
}

/// Total score of a DAG whose node names refer to dataset variables.
pub fn score_total(data: &DiscreteDataset, dag: &Dag, kind: ScoreKind) -> Result<ScoreValue> {
    let var_of: Vec<usize> = dag
        .names()
        .iter()
        .map(|n| {
            data.variable_index(n)
                .ok_or_else(|| Error::contract(format!("dag node '{n}' not in dataset")))
        })
        .collect::<Result<_>>()?;
    let mut locals = Vec::with_capacity(dag.node_count());
    for node in 0..dag.node_count() {
        let parents: Vec<usize> = {
            let mut p: Vec<usize> = dag.parents_of(node).iter().map(|&q| var_of[q]).collect();
            p.sort_unstable();
            p
        };
        locals.push(local_score(data, kind, var_of[node], &parents));
    }
    Ok(ScoreValue::from_locals(locals))
}

// ---------------------------------------------------------------------------
// Hill climbing
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum MoveKindRank {
    Add,
    Delete,
    Reverse,
}

/// Greedy Hill-Climbing over the DAG space of the given dataset variables.
///
/// Starts from the empty DAG; each iteration evaluates every legal
/// add/delete/reverse move (respecting acyclicity and the parent cap) and
/// applies the single best move when its gain exceeds `config.epsilon`.
/// Ties break by move kind (add < delete < reverse), then lexicographically
/// by (parent name, child name), so the search is deterministic.
pub fn hill_climb(
    data: &DiscreteDataset,
    nodes: &[usize],
    config: &SearchConfig,
) -> Result<(Dag, ScoreValue, SearchStats)> {
    config.validate()?;
    if nodes.is_empty() {
        return Err(Error::contract("hill_climb needs a non-empty node set"));
    }
    for &j in nodes {
        if j >= data.n_vars() {
            return Err(Error::contract(format!("variable index {j} out of range")));
        }
    }
    let start = Instant::now();
    let k = nodes.len();
    let names: Vec<String> = nodes.iter().map(|&j| data.name(j).to_string()).collect();
    {
        let mut uniq = names.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != k {
            return Err(Error::contract("duplicate variables in hill_climb node set"));
        }
    }

    // Local indexes sorted by node name, for deterministic tie-breaking.
    let mut by_name: Vec<usize> = (0..k).collect();
    by_name.sort_by(|&a, &b| names[a].cmp(&names[b]));

    let mut cache = ScoreCache::new(config.score);
    let mut parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    let mut children: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    let locals_of = |cache: &mut ScoreCache, parents: &BTreeSet<usize>, child: usize| -> f64 {
        let key: Vec<usize> = {
            let mut v: Vec<usize> = parents.iter().map(|&q| nodes[q]).collect();
            v.sort_unstable();
            v
        };
        cache.get(data, nodes[child], &key)
    };
    let mut locals: Vec<f64> = (0..k)
        .map(|c| locals_of(&mut cache, &BTreeSet::new(), c))
        .collect();

    // Reusable DFS scratch for cycle checks.
    let mut visit_stamp: Vec<u64> = vec![0; k];
    let mut stamp: u64 = 0;
    let mut dfs_stack: Vec<usize> = Vec::with_capacity(k);
    let reaches = |children: &Vec<BTreeSet<usize>>,
                       from: usize,
                       to: usize,
                       skip: Option<(usize, usize)>,
                       visit_stamp: &mut Vec<u64>,
                       stamp: &mut u64,
                       dfs_stack: &mut Vec<usize>|
     -> bool {
        *stamp += 1;
        dfs_stack.clear();
        dfs_stack.push(from);
        visit_stamp[from] = *stamp;
        while let Some(u) = dfs_stack.pop() {
            for &c in &children[u] {
                if skip == Some((u, c)) {
                    continue;
                }
                if c == to {
                    return true;
                }
                if visit_stamp[c] != *stamp {
                    visit_stamp[c] = *stamp;
                    dfs_stack.push(c);
                }
            }
        }
        false
    };

    let mut stats = SearchStats {
        iterations: 0,
        moves_evaluated: 0,
        elapsed_ms: 0.0,
        applied: Vec::new(),
    };

    while stats.iterations < config.max_iterations {
        let mut best: Option<(f64, MoveKindRank, usize, usize)> = None;
        let consider = |gain: f64, rank: MoveKindRank, u: usize, v: usize,
                            best: &mut Option<(f64, MoveKindRank, usize, usize)>| {
            // Scan order already realizes the tie-break, so strictly-greater
            // comparisons keep the first of any tied set.
            if best.is_none_or(|(bg, _, _, _)| gain > bg) {
                *best = Some((gain, rank, u, v));
            }
        };

        // Additions.
        for &u in &by_name {
            for &v in &by_name {
                if u == v || parents[v].contains(&u) || parents[u].contains(&v) {
                    continue;
                }
                if parents[v].len() >= config.max_parents {
                    continue;
                }
                if reaches(&children, v, u, None, &mut visit_stamp, &mut stamp, &mut dfs_stack) {
                    continue;
                }
                let mut with_u = parents[v].clone();
                with_u.insert(u);
                let gain = locals_of(&mut cache, &with_u, v) - locals[v];
                stats.moves_evaluated += 1;
                consider(gain, MoveKindRank::Add, u, v, &mut best);
            }
        }
        // Deletions.
        for &u in &by_name {
            for &v in &by_name {
                if !parents[v].contains(&u) {
                    continue;
                }
                let mut without_u = parents[v].clone();
                without_u.remove(&u);
                let gain = locals_of(&mut cache, &without_u, v) - locals[v];
                stats.moves_evaluated += 1;
                consider(gain, MoveKindRank::Delete, u, v, &mut best);
            }
        }
        // Reversals.
        for &u in &by_name {
            for &v in &by_name {
                if !parents[v].contains(&u) {
                    continue;
                }
                if parents[u].len() >= config.max_parents {
                    continue;
                }
                if reaches(
                    &children,
                    u,
                    v,
                    Some((u, v)),
                    &mut visit_stamp,
                    &mut stamp,
                    &mut dfs_stack,
                ) {
                    continue;
                }
                let mut u_with_v = parents[u].clone();
                u_with_v.insert(v);
                let mut v_without_u = parents[v].clone();
                v_without_u.remove(&u);
                let gain = (locals_of(&mut cache, &u_with_v, u) - locals[u])
                    + (locals_of(&mut cache, &v_without_u, v) - locals[v]);
                stats.moves_evaluated += 1;
                consider(gain, MoveKindRank::Reverse, u, v, &mut best);
            }
        }

        let Some((gain, rank, u, v)) = best else { break };
        if gain <= config.epsilon {
            break;
        }
        stats.iterations += 1;
        match rank {
            MoveKindRank::Add => {
                parents[v].insert(u);
                children[u].insert(v);
                locals[v] = locals_of(&mut cache, &parents[v], v);
            }
            MoveKindRank::Delete => {
                parents[v].remove(&u);
                children[u].remove(&v);
                locals[v] = locals_of(&mut cache, &parents[v], v);
            }
            MoveKindRank::Reverse => {
                parents[v].remove(&u);
                children[u].remove(&v);
                parents[u].insert(v);
                children[v].insert(u);
                locals[v] = locals_of(&mut cache, &parents[v], v);
                locals[u] = locals_of(&mut cache, &parents[u], u);
            }
        }
        stats.applied.push(AppliedMove {
            iteration: stats.iterations,
            kind: match rank {
                MoveKindRank::Add => "add",
                MoveKindRank::Delete => "delete",
                MoveKindRank::Reverse => "reverse",
            },
            parent: names[u].clone(),
            child: names[v].clone(),
            gain,
        });
    }

    let edges: Vec<(usize, usize)> = (0..k)
        .flat_map(|v| parents[v].iter().map(move |&u| (u, v)).collect::<Vec<_>>())
        .collect();
    let dag = Dag::from_edges(names, &edges)?;
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((dag, ScoreValue::from_locals(locals), stats))
}
