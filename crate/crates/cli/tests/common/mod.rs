//! Test support: seeded generators for community-structured ground-truth
//! networks, used by the CLI and acceptance suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blockbn::dataio::{GroundTruthNetwork, NetworkNode};

/// Knobs for [`community_network`].
#[derive(Debug, Clone, Copy)]
pub struct CommunitySpec {
    /// State count for every node.
    pub arity: u32,
    /// Chance that a non-root node takes a second within-community parent.
    pub extra_parent_prob: f64,
    /// Total number of cross-community edges.
    pub inter_edges: usize,
    /// Peak weight added to the state preferred by the within-community
    /// parents (1.0 base weight per state).
    pub intra_weight: f64,
    /// Peak weight added to the state preferred by cross-community parents.
    pub inter_weight: f64,
    /// Chance that a non-root node is "weak": its parents only get
    /// `weak_weight`, putting the edge near the detection limit.
    pub weak_node_prob: f64,
    pub weak_weight: f64,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        CommunitySpec {
            arity: 3,
            extra_parent_prob: 0.35,
            inter_edges: 2,
            intra_weight: 10.0,
            inter_weight: 1.2,
            weak_node_prob: 0.0,
            weak_weight: 1.5,
        }
    }
}

/// Builds a network whose variables form communities: dense, strongly
/// coupled edges inside each block and a handful of weaker edges across
/// blocks. Community `k` occupies a contiguous index range.
pub fn community_network(
    seed: u64,
    community_sizes: &[usize],
    spec: CommunitySpec,
) -> GroundTruthNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: usize = community_sizes.iter().sum();
    let names: Vec<String> = (0..p).map(|i| format!("V{i:03}")).collect();

    // Community id and index range per node.
    let mut community_of = Vec::with_capacity(p);
    let mut starts = Vec::with_capacity(community_sizes.len());
    {
        let mut start = 0;
        for (k, &size) in community_sizes.iter().enumerate() {
            starts.push(start);
            for _ in 0..size {
                community_of.push(k);
            }
            start += size;
        }
    }

    // Within-community parents: hub-shaped, so every member stays within two
    // hops of the community root and pairwise dependence does not decay away.
    let mut intra_parents: Vec<Vec<usize>> = vec![Vec::new(); p];
    for (k, &size) in community_sizes.iter().enumerate() {
        let start = starts[k];
        for l in 1..size {
            let g = start + l;
            intra_parents[g].push(start + rng.random_range(0..l.min(2)));
            if l >= 2 && rng.random_bool(spec.extra_parent_prob) {
                let extra = start + rng.random_range(0..l);
                if !intra_parents[g].contains(&extra) {
                    intra_parents[g].push(extra);
                }
            }
            intra_parents[g].sort_unstable();
        }
    }

    // Cross-community parents: from any node of an earlier community into a
    // non-root node of a later one.
    let mut inter_parents: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut placed = 0;
    let mut guard = 0;
    while placed < spec.inter_edges && guard < 1000 {
        guard += 1;
        let target_comm = rng.random_range(1..community_sizes.len());
        let t_start = starts[target_comm];
        let target = t_start + rng.random_range(0..community_sizes[target_comm]);
        let source = rng.random_range(0..t_start);
        if inter_parents[target].contains(&source)
            || intra_parents[target].len() + inter_parents[target].len() >= 3
        {
            continue;
        }
        inter_parents[target].push(source);
        inter_parents[target].sort_unstable();
        placed += 1;
    }

    // Weak nodes sit near the detection limit of score-based search.
    let weak: Vec<bool> = (0..p)
        .map(|g| !intra_parents[g].is_empty() && rng.random_bool(spec.weak_node_prob))
        .collect();

    let arity = spec.arity;
    let nodes = (0..p)
        .map(|g| {
            let parents: Vec<usize> = intra_parents[g]
                .iter()
                .chain(&inter_parents[g])
                .copied()
                .collect();
            let cpt = if parents.is_empty() {
                vec![random_marginal(&mut rng, arity)]
            } else {
                peaked_cpt(
                    g,
                    &intra_parents[g],
                    &inter_parents[g],
                    arity,
                    if weak[g] { spec.weak_weight } else { spec.intra_weight },
                    spec.inter_weight,
                )
            };
            NetworkNode {
                name: names[g].clone(),
                states: (0..arity).map(|s| format!("s{s}")).collect(),
                parents: parents.iter().map(|&q| names[q].clone()).collect(),
                cpt,
            }
        })
        .collect();

    let net = GroundTruthNetwork { nodes };
    net.validate().expect("generated network is valid");
    net
}

fn random_marginal(rng: &mut ChaCha8Rng, arity: u32) -> Vec<f64> {
    let weights: Vec<f64> = (0..arity).map(|_| 0.6 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Rows over the declared parent order (intra first, then inter), last
/// parent fastest-varying. Each parent pushes weight onto a cyclic shift of
/// its own value, so every edge stays visible in the pairwise marginals: the
/// first intra parent dominates, further intra parents contribute mildly,
/// and inter parents add the weakest peak.
fn peaked_cpt(
    node: usize,
    intra: &[usize],
    inter: &[usize],
    arity: u32,
    intra_weight: f64,
    inter_weight: f64,
) -> Vec<Vec<f64>> {
    let n_parents = intra.len() + inter.len();
    let n_rows = (arity as usize).pow(n_parents as u32);
    let shift = |v: u32, salt: usize| (v as usize + salt) % arity as usize;
    (0..n_rows)
        .map(|row| {
            // Decode the row into parent values, last parent fastest.
            let mut values = vec![0u32; n_parents];
            let mut rest = row;
            for slot in (0..n_parents).rev() {
                values[slot] = (rest % arity as usize) as u32;
                rest /= arity as usize;
            }
            let (intra_vals, inter_vals) = values.split_at(intra.len());
            let mut weights = vec![1.0f64; arity as usize];
            for (k, &v) in intra_vals.iter().enumerate() {
                let w = if k == 0 { intra_weight } else { intra_weight * 0.3 };
                weights[shift(v, node + k)] += w;
            }
            for (k, &v) in inter_vals.iter().enumerate() {
                weights[shift(v, node + 7 * (k + 1))] += inter_weight;
            }
            let total: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / total).collect()
        })
        .collect()
}

/// A small fully random network: random acyclic edges over an index order,
/// random rows. Used for oracle comparisons.
#[allow(dead_code)] // not every test target uses both generators
pub fn random_network(seed: u64, p: usize, max_arity: u32, edge_prob: f64) -> GroundTruthNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..p).map(|i| format!("V{i:03}")).collect();
    let arities: Vec<u32> = (0..p).map(|_| rng.random_range(2..=max_arity)).collect();
    let nodes = (0..p)
        .map(|g| {
            let parents: Vec<usize> = (0..g).filter(|_| rng.random_bool(edge_prob)).collect();
            let n_rows: usize = parents.iter().map(|&q| arities[q] as usize).product();
            let cpt = (0..n_rows)
                .map(|_| {
                    let weights: Vec<f64> =
                        (0..arities[g]).map(|_| 0.25 + rng.random::<f64>()).collect();
                    let total: f64 = weights.iter().sum();
                    weights.into_iter().map(|w| w / total).collect()
                })
                .collect();
            NetworkNode {
                name: names[g].clone(),
                states: (0..arities[g]).map(|s| format!("s{s}")).collect(),
                parents: parents.iter().map(|&q| names[q].clone()).collect(),
                cpt,
            }
        })
        .collect();
    let net = GroundTruthNetwork { nodes };
    net.validate().expect("generated network is valid");
    net
}
