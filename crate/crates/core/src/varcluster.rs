//! Agglomerative variable clustering on the divergence matrix, the uniform
//! threshold grid, and the recommended-threshold rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::DivergenceMatrix;

/// A partition of variable indices into disjoint non-empty blocks, in
/// canonical form: members ascending, blocks ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableClustering {
    pub threshold: f64,
    pub clusters: Vec<Vec<usize>>,
}

impl VariableClustering {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn largest_cluster(&self) -> usize {
        self.clusters.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    /// Index of the cluster containing each variable.
    pub fn assignment(&self, n_vars: usize) -> Vec<usize> {
        let mut a = vec![usize::MAX; n_vars];
        for (ci, members) in self.clusters.iter().enumerate() {
            for &m in members {
                a[m] = ci;
            }
        }
        a
    }

    /// Text export: one `cluster_id: name1,name2,...` line per cluster.
    pub fn export_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (ci, members) in self.clusters.iter().enumerate() {
            let line: Vec<&str> = members.iter().map(|&m| names[m].as_str()).collect();
            s.push_str(&format!("{ci}: {}\n", line.join(",")));
        }
        s
    }
}

/// Complete-linkage agglomerative clustering: repeatedly merge the pair of
/// clusters with minimal complete-linkage distance (max pairwise divergence
/// between members) while that distance is ≤ `threshold`.
///
/// Ties are broken toward the pair with the smallest (min-index, min-index)
/// representatives, so the result is deterministic. Complete linkage keeps
/// every cluster's diameter ≤ `threshold`, which caps the combination
/// blow-up the compression stage has to absorb.
pub fn agglomerate(div: &DivergenceMatrix, threshold: f64) -> Result<VariableClustering> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::contract(format!(
            "threshold must be in [0,1], got {threshold}"
        )));
    }
    let p = div.size();
    let dist: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| div.get(i, j)).collect())
        .collect();
    Ok(VariableClustering {
        threshold,
        clusters: complete_linkage_partition(dist, threshold),
    })
}

/// The shared complete-linkage merge loop over `p` items with a precomputed
/// distance matrix. Merges the closest pair while its linkage is ≤
/// `threshold`; among equally close pairs the one with the smallest
/// (min-index, min-index) representatives wins. Returns the partition in
/// canonical form (members ascending, blocks ordered by smallest member).
///
/// Each slot caches its forward nearest neighbor (the smallest-index slot at
/// minimal distance among higher slots). Complete-linkage distances only
/// grow under merges, so a cached entry goes stale only when it points at a
/// merged slot; that keeps the loop near O(p²) instead of the naive O(p³).
pub(crate) fn complete_linkage_partition(
    mut dist: Vec<Vec<f64>>,
    threshold: f64,
) -> Vec<Vec<usize>> {
    let p = dist.len();
    // Slot id = smallest member index of the cluster living there.
    let mut members: Vec<Option<Vec<usize>>> = (0..p).map(|i| Some(vec![i])).collect();
    let mut alive: Vec<usize> = (0..p).collect();

    // nn[i] = (distance, j) with j > i: the tie-break-minimal partner.
    let forward_nn = |dist: &Vec<Vec<f64>>, alive: &[usize], i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for &j in alive {
            if j > i {
                let d = dist[i][j];
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
        }
        best
    };
    let mut nn: Vec<Option<(f64, usize)>> = (0..p).map(|i| forward_nn(&dist, &alive, i)).collect();

    while alive.len() >= 2 {
        // Global best pair: scan slots ascending, strict < keeps the
        // smallest (i, j) among ties.
        let mut best: Option<(f64, usize, usize)> = None;
        for &i in &alive {
            if let Some((d, j)) = nn[i] {
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((d, a, b)) = best else { break };
        if d > threshold {
            break;
        }
        let taken = members[b].take().expect("slot b alive");
        members[a].as_mut().expect("slot a alive").extend(taken);
        alive.retain(|&x| x != b);
        for &x in &alive {
            if x != a {
                let m = dist[a][x].max(dist[b][x]);
                dist[a][x] = m;
                dist[x][a] = m;
            }
        }
        // Refresh stale caches: slot a changed all its distances, and any
        // slot pointing at a or b must rescan. Distances never shrink, so
        // everything else stays valid.
        nn[a] = forward_nn(&dist, &alive, a);
        for &x in &alive {
            if x != a {
                if let Some((_, j)) = nn[x] {
                    if j == a || j == b {
                        nn[x] = forward_nn(&dist, &alive, x);
                    }
                } else {
                    nn[x] = forward_nn(&dist, &alive, x);
                }
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = members.into_iter().flatten().collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// The uniform threshold grid `{step, 2·step, …}` strictly inside (0, 1).
/// Values are rounded to 12 decimal places so grid points print cleanly.
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::contract(format!(
            "grid step must satisfy 0 < step < 1, got {step}"
        )));
    }
    let mut grid = Vec::new();
    let mut k = 1u32;
    loop {
        let t = ((k as f64 * step) * 1e12).round() / 1e12;
        if t >= 1.0 {
            break;
        }
        grid.push(t);
        k += 1;
    }
    Ok(grid)
}

/// Picks the grid threshold minimizing `max(#clusters, size of largest
/// cluster)`. Ties go to the threshold whose cluster count and largest size
/// are closest to each other, then to the smaller threshold. The ideal
/// profile is √p clusters of size √p, which minimizes the downstream
/// search-space blow-up on both sides.
pub fn recommend_threshold(
    div: &DivergenceMatrix,
    grid: &[f64],
) -> Result<(f64, VariableClustering)> {
    if grid.is_empty() {
        return Err(Error::contract("threshold grid must be non-empty"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut best: Option<(usize, usize, f64, VariableClustering)> = None;
    for &t in &sorted {
        let clustering = agglomerate(div, t)?;
        let k = clustering.n_clusters();
        let largest = clustering.largest_cluster();
        let objective = k.max(largest);
        let balance = k.abs_diff(largest);
        let better = match &best {
            None => true,
            Some((bo, bb, _, _)) => objective < *bo || (objective == *bo && balance < *bb),
        };
        if better {
            best = Some((objective, balance, t, clustering));
        }
    }
    let (_, _, t, clustering) = best.expect("non-empty grid");
    Ok((t, clustering))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::DiscreteDataset;
    use crate::infotheory::divergence_matrix;

    /// Builds a DivergenceMatrix from an explicit symmetric matrix by
    /// serializing through the public type.
    pub(crate) fn matrix_from(values: Vec<Vec<f64>>) -> DivergenceMatrix {
        let p = values.len();
        let names: Vec<String> = (0..p).map(|i| format!("v{i}")).collect();
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        serde_json::from_value(serde_json::json!({
            "names": names,
            "size": p,
            "values": flat,
        }))
        .unwrap()
    }

    #[test]
    fn threshold_zero_keeps_singletons() {
        let m = matrix_from(vec![
            vec![0.0, 0.4, 0.5],
            vec![0.4, 0.0, 0.6],
            vec![0.5, 0.6, 0.0],
        ]);
        let c = agglomerate(&m, 0.0).unwrap();
        assert_eq!(c.clusters, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn threshold_one_merges_all() {
        let m = matrix_from(vec![
            vec![0.0, 0.4, 0.5],
            vec![0.4, 0.0, 0.6],
            vec![0.5, 0.6, 0.0],
        ]);
        let c = agglomerate(&m, 1.0).unwrap();
        assert_eq!(c.clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn complete_linkage_hand_trace() {
        let m = matrix_from(vec![
            vec![0.0, 0.1, 0.9],
            vec![0.1, 0.0, 0.9],
            vec![0.9, 0.9, 0.0],
        ]);
        let c = agglomerate(&m, 0.5).unwrap();
        assert_eq!(c.clusters, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn grid_steps() {
        let g = threshold_grid(0.1).unwrap();
        assert_eq!(g.len(), 9);
        for (k, t) in g.iter().enumerate() {
            assert!((t - 0.1 * (k as f64 + 1.0)).abs() < 1e-9);
        }
        assert_eq!(threshold_grid(0.5).unwrap(), vec![0.5]);
        assert_eq!(threshold_grid(0.25).unwrap(), vec![0.25, 0.5, 0.75]);
        assert!(threshold_grid(0.0).is_err());
        assert!(threshold_grid(1.0).is_err());
    }

    #[test]
    fn recommendation_prefers_balanced_blocks() {
        // Block-diagonal: three groups of three, within-group divergence 0.2,
        // across-group 0.9. At 0.4 → 3 clusters of 3 (objective 3); at 0.1 →
        // 9 singletons (objective 9).
        let p = 9;
        let mut values = vec![vec![0.9; p]; p];
        for i in 0..p {
            values[i][i] = 0.0;
            for j in 0..p {
                if i != j && i / 3 == j / 3 {
                    values[i][j] = 0.2;
                }
            }
        }
        let m = matrix_from(values);
        let (t, c) = recommend_threshold(&m, &[0.1, 0.4]).unwrap();
        assert_eq!(t, 0.4);
        assert_eq!(c.clusters, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]]);
    }

    #[test]
    fn all_ones_matrix_ties_to_smallest_threshold() {
        let p = 4;
        let mut values = vec![vec![1.0; p]; p];
        for (i, row) in values.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        let m = matrix_from(values);
        let (t, c) = recommend_threshold(&m, &threshold_grid(0.1).unwrap()).unwrap();
        assert_eq!(t, 0.1);
        assert_eq!(c.n_clusters(), p);
    }

    #[test]
    fn single_variable_degenerate() {
        let m = matrix_from(vec![vec![0.0]]);
        let (_, c) = recommend_threshold(&m, &[0.3]).unwrap();
        assert_eq!(c.clusters, vec![vec![0]]);
    }

    #[test]
    fn export_lines() {
        let m = matrix_from(vec![
            vec![0.0, 0.1, 0.9],
            vec![0.1, 0.0, 0.9],
            vec![0.9, 0.9, 0.0],
        ]);
        let c = agglomerate(&m, 0.5).unwrap();
        let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        assert_eq!(c.export_text(&names), "0: a,b\n1: c\n");
    }

    #[test]
    fn works_on_real_divergence_matrix() {
        let d = DiscreteDataset::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec![0, 1, 0, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]],
            vec![2, 2, 2],
        )
        .unwrap();
        let m = divergence_matrix(&d).unwrap();
        let c = agglomerate(&m, 0.5).unwrap();
        // x and y identical → merged; z independent → alone.
        assert_eq!(c.clusters, vec![vec![0, 1], vec![2]]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix() -> impl Strategy<Value = DivergenceMatrix> {
            (2usize..8).prop_flat_map(|p| {
                prop::collection::vec(0.0f64..=1.0, p * (p - 1) / 2).prop_map(move |upper| {
                    let mut values = vec![vec![0.0; p]; p];
                    let mut it = upper.into_iter();
                    for i in 0..p {
                        for j in (i + 1)..p {
                            let d = it.next().unwrap();
                            values[i][j] = d;
                            values[j][i] = d;
                        }
                    }
                    matrix_from(values)
                })
            })
        }

        /// Distances quantized to multiples of 0.25: forces heavy ties so the
        /// tie-break path gets exercised.
        fn arb_tied_matrix() -> impl Strategy<Value = DivergenceMatrix> {
            (2usize..8).prop_flat_map(|p| {
                prop::collection::vec(0u8..=4, p * (p - 1) / 2).prop_map(move |upper| {
                    let mut values = vec![vec![0.0; p]; p];
                    let mut it = upper.into_iter();
                    for i in 0..p {
                        for j in (i + 1)..p {
                            let d = it.next().unwrap() as f64 * 0.25;
                            values[i][j] = d;
                            values[j][i] = d;
                        }
                    }
                    matrix_from(values)
                })
            })
        }

        /// Naive reference merge loop: full pair scan every round, the
        /// definitionally obvious form of the same tie-break.
        fn naive_partition(m: &DivergenceMatrix, threshold: f64) -> Vec<Vec<usize>> {
            let p = m.size();
            let mut members: Vec<Option<Vec<usize>>> = (0..p).map(|i| Some(vec![i])).collect();
            let mut dist: Vec<Vec<f64>> =
                (0..p).map(|i| (0..p).map(|j| m.get(i, j)).collect()).collect();
            loop {
                let alive: Vec<usize> = (0..p).filter(|&i| members[i].is_some()).collect();
                if alive.len() < 2 {
                    break;
                }
                let mut best: Option<(f64, usize, usize)> = None;
                for (ai, &a) in alive.iter().enumerate() {
                    for &b in &alive[ai + 1..] {
                        if best.is_none_or(|(bd, _, _)| dist[a][b] < bd) {
                            best = Some((dist[a][b], a, b));
                        }
                    }
                }
                let (d, a, b) = best.unwrap();
                if d > threshold {
                    break;
                }
                let taken = members[b].take().unwrap();
                members[a].as_mut().unwrap().extend(taken);
                for &x in &alive {
                    if x != a && x != b {
                        let mx = dist[a][x].max(dist[b][x]);
                        dist[a][x] = mx;
                        dist[x][a] = mx;
                    }
                }
            }
            let mut clusters: Vec<Vec<usize>> = members.into_iter().flatten().collect();
            for c in &mut clusters {
                c.sort_unstable();
            }
            clusters.sort_by_key(|c| c[0]);
            clusters
        }

        proptest! {
            #[test]
            fn matches_naive_reference(m in arb_matrix(), t in 0.0f64..=1.0) {
                let fast = agglomerate(&m, t).unwrap();
                prop_assert_eq!(fast.clusters, naive_partition(&m, t));
            }

            #[test]
            fn matches_naive_reference_with_ties(m in arb_tied_matrix(), t in 0.0f64..=1.0) {
                let fast = agglomerate(&m, t).unwrap();
                prop_assert_eq!(fast.clusters, naive_partition(&m, t));
            }

            #[test]
            fn output_is_partition(m in arb_matrix(), t in 0.0f64..=1.0) {
                let c = agglomerate(&m, t).unwrap();
                let mut seen = vec![false; m.size()];
                for block in &c.clusters {
                    prop_assert!(!block.is_empty());
                    for &v in block {
                        prop_assert!(!seen[v]);
                        seen[v] = true;
                    }
                }
                prop_assert!(seen.iter().all(|&s| s));
            }

            #[test]
            fn cluster_count_monotone_in_threshold(
                m in arb_matrix(),
                t1 in 0.0f64..=1.0,
                t2 in 0.0f64..=1.0,
            ) {
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                let a = agglomerate(&m, lo).unwrap();
                let b = agglomerate(&m, hi).unwrap();
                prop_assert!(a.n_clusters() >= b.n_clusters());
            }

            #[test]
            fn diameter_bounded_by_threshold(m in arb_matrix(), t in 0.0f64..=1.0) {
                let c = agglomerate(&m, t).unwrap();
                for block in &c.clusters {
                    for (i, &a) in block.iter().enumerate() {
                        for &b in &block[i + 1..] {
                            prop_assert!(m.get(a, b) <= t);
                        }
                    }
                }
            }

            #[test]
            fn recommended_objective_is_grid_minimum(m in arb_matrix()) {
                let grid = threshold_grid(0.1).unwrap();
                let (_, best) = recommend_threshold(&m, &grid).unwrap();
                let best_obj = best.n_clusters().max(best.largest_cluster());
                for &t in &grid {
                    let c = agglomerate(&m, t).unwrap();
                    prop_assert!(best_obj <= c.n_clusters().max(c.largest_cluster()));
                }
            }
        }
    }
}
