//! Directed acyclic graphs over named nodes: edge moves with acyclicity
//! checks, deterministic topological order, and structural Hamming distance.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An edge move considered by hill climbing. `parent` and `child` are node
/// indices within the DAG they are applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    Add { parent: usize, child: usize },
    Delete { parent: usize, child: usize },
    Reverse { parent: usize, child: usize },
}

impl Move {
    pub fn parent(&self) -> usize {
        match *self {
            Move::Add { parent, .. } | Move::Delete { parent, .. } | Move::Reverse { parent, .. } => parent,
        }
    }

    pub fn child(&self) -> usize {
        match *self {
            Move::Add { child, .. } | Move::Delete { child, .. } | Move::Reverse { child, .. } => child,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Move::Add { .. } => "add",
            Move::Delete { .. } => "delete",
            Move::Reverse { .. } => "reverse",
        }
    }
}

/// Result of attempting a move: either a new DAG or a rejection because the
/// move would introduce a cycle. Rejection is an ordinary value.
#[derive(Debug, Clone)]
pub enum MoveOutcome {
    Applied(Dag),
    RejectedCycle,
}

impl MoveOutcome {
    pub fn applied(self) -> Option<Dag> {
        match self {
            MoveOutcome::Applied(d) => Some(d),
            MoveOutcome::RejectedCycle => None,
        }
    }
}

/// A directed acyclic graph over named nodes. Values are immutable after
/// construction; mutations go through [`Dag::apply_move`], which returns a
/// new value and preserves acyclicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dag {
    names: Vec<String>,
    /// Parent sets, indexed by child.
    parents: Vec<BTreeSet<usize>>,
}

impl Dag {
    /// An edgeless DAG over the given node names. Names must be unique.
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if seen.insert(n.clone(), i).is_some() {
                return Err(Error::contract(format!("duplicate node name '{n}'")));
            }
        }
        let parents = vec![BTreeSet::new(); names.len()];
        Ok(Dag { names, parents })
    }

    /// Builds a DAG from an edge list of `(parent, child)` index pairs.
    /// Fails on self-loops, duplicate edges, out-of-range nodes, or cycles.
    pub fn from_edges(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut dag = Dag::new(names)?;
        for &(u, v) in edges {
            dag.check_nodes(u, v)?;
            if u == v {
                return Err(Error::contract(format!(
                    "self-loop on node '{}'",
                    dag.names[u]
                )));
            }
            if !dag.parents[v].insert(u) {
                return Err(Error::contract(format!(
                    "duplicate edge {} -> {}",
                    dag.names[u], dag.names[v]
                )));
            }
        }
        if dag.has_cycle() {
            return Err(Error::contract("edge list contains a cycle".to_string()));
        }
        Ok(dag)
    }

    /// Same as [`Dag::from_edges`] but with `(parent, child)` name pairs.
    pub fn from_named_edges(names: Vec<String>, edges: &[(String, String)]) -> Result<Self> {
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (p, c) in edges {
            let pi = *index
                .get(p.as_str())
                .ok_or_else(|| Error::contract(format!("unknown node '{p}'")))?;
            let ci = *index
                .get(c.as_str())
                .ok_or_else(|| Error::contract(format!("unknown node '{c}'")))?;
            idx_edges.push((pi, ci));
        }
        Dag::from_edges(names, &idx_edges)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents_of(&self, node: usize) -> &BTreeSet<usize> {
        &self.parents[node]
    }

    pub fn children_of(&self, node: usize) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&c| self.parents[c].contains(&node))
            .collect()
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.parents[child].contains(&parent)
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    /// All edges as `(parent, child)` index pairs, sorted by index pair.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((p, child));
            }
        }
        out.sort_unstable();
        out
    }

    /// Edges as name pairs, sorted by `(parent name, child name)`.
    pub fn named_edges(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .edges()
            .into_iter()
            .map(|(p, c)| (self.names[p].clone(), self.names[c].clone()))
            .collect();
        out.sort();
        out
    }

    /// Plain-text export: one `parent -> child` line, sorted by name pair.
    pub fn export_edge_list(&self) -> String {
        let mut s = String::new();
        for (p, c) in self.named_edges() {
            s.push_str(&p);
            s.push_str(" -> ");
            s.push_str(&c);
            s.push('\n');
        }
        s
    }

    fn check_nodes(&self, u: usize, v: usize) -> Result<()> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::contract(format!(
                "node index out of range: ({u}, {v}) with {n} nodes"
            )));
        }
        Ok(())
    }

    /// True if a directed path `from ⇝ to` exists. O(V+E) depth-first walk.
    fn reaches(&self, from: usize, to: usize, skip_edge: Option<(usize, usize)>) -> bool {
        if from == to {
            return true;
        }
        let children: Vec<Vec<usize>> = {
            let mut ch = vec![Vec::new(); self.node_count()];
            for (child, ps) in self.parents.iter().enumerate() {
                for &p in ps {
                    if skip_edge == Some((p, child)) {
                        continue;
                    }
                    ch[p].push(child);
                }
            }
            ch
        };
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &c in &children[u] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    fn has_cycle(&self) -> bool {
        // Kahn peel; leftovers mean a cycle.
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut queue: Vec<usize> = (0..self.node_count()).filter(|&i| indeg[i] == 0).collect();
        let mut removed = 0;
        while let Some(u) = queue.pop() {
            removed += 1;
            for c in 0..self.node_count() {
                if self.parents[c].contains(&u) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        queue.push(c);
                    }
                }
            }
        }
        removed != self.node_count()
    }

    /// Applies an edge move, returning the new DAG or a cycle rejection.
    ///
    /// Precondition violations (unknown nodes, adding an existing edge,
    /// deleting or reversing a missing edge, self-loops) are contract errors;
    /// only acyclicity failures are reported as [`MoveOutcome::RejectedCycle`].
    pub fn apply_move(&self, mv: Move) -> Result<MoveOutcome> {
        let (u, v) = (mv.parent(), mv.child());
        self.check_nodes(u, v)?;
        if u == v {
            return Err(Error::contract(format!(
                "self-loop move on node '{}'",
                self.names[u]
            )));
        }
        match mv {
            Move::Add { .. } => {
                if self.has_edge(u, v) {
                    return Err(Error::contract(format!(
                        "edge {} -> {} already present",
                        self.names[u], self.names[v]
                    )));
                }
                // u -> v closes a cycle iff v already reaches u.
                if self.reaches(v, u, None) {
                    return Ok(MoveOutcome::RejectedCycle);
                }
                let mut next = self.clone();
                next.parents[v].insert(u);
                Ok(MoveOutcome::Applied(next))
            }
            Move::Delete { .. } => {
                if !self.has_edge(u, v) {
                    return Err(Error::contract(format!(
                        "edge {} -> {} not present",
                        self.names[u], self.names[v]
                    )));
                }
                let mut next = self.clone();
                next.parents[v].remove(&u);
                Ok(MoveOutcome::Applied(next))
            }
            Move::Reverse { .. } => {
                if !self.has_edge(u, v) {
                    return Err(Error::contract(format!(
                        "edge {} -> {} not present",
                        self.names[u], self.names[v]
                    )));
                }
                // v -> u closes a cycle iff some other path u ⇝ v survives
                // the removal of the direct edge.
                if self.reaches(u, v, Some((u, v))) {
                    return Ok(MoveOutcome::RejectedCycle);
                }
                let mut next = self.clone();
                next.parents[v].remove(&u);
                next.parents[u].insert(v);
                Ok(MoveOutcome::Applied(next))
            }
        }
    }

    /// Kahn's topological order with min-name tie-break among ready nodes.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let children: Vec<Vec<usize>> = {
            let mut ch = vec![Vec::new(); self.node_count()];
            for (child, ps) in self.parents.iter().enumerate() {
                for &p in ps {
                    ch[p].push(child);
                }
            }
            ch
        };
        let mut ready: BTreeSet<(&str, usize)> = (0..self.node_count())
            .filter(|&i| indeg[i] == 0)
            .map(|i| (self.names[i].as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(self.node_count());
        while let Some(&(name, u)) = ready.iter().next() {
            ready.remove(&(name, u));
            order.push(u);
            for &c in &children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert((self.names[c].as_str(), c));
                }
            }
        }
        debug_assert_eq!(order.len(), self.node_count());
        order
    }

    /// Restriction to a subset of nodes (given by name): keeps exactly the
    /// edges with both endpoints in the subset.
    pub fn restrict_to(&self, keep: &[String]) -> Result<Dag> {
        let mut idx_of = HashMap::new();
        for (i, n) in keep.iter().enumerate() {
            idx_of.insert(n.as_str(), i);
        }
        let mut edges = Vec::new();
        for (p, c) in self.edges() {
            if let (Some(&pi), Some(&ci)) = (
                idx_of.get(self.names[p].as_str()),
                idx_of.get(self.names[c].as_str()),
            ) {
                edges.push((pi, ci));
            }
        }
        Dag::from_edges(keep.to_vec(), &edges)
    }
}

/// Structural Hamming distance between two DAGs on the same node set.
///
/// For each unordered node pair: +1 if an edge is present in exactly one
/// graph, +1 if present in both but oppositely oriented. A reversal counts
/// as a single operation.
pub fn shd(a: &Dag, b: &Dag) -> Result<usize> {
    if a.node_count() != b.node_count() {
        return Err(Error::contract(format!(
            "node sets differ: {} vs {} nodes",
            a.node_count(),
            b.node_count()
        )));
    }
    // Map b's indices onto a's by name.
    let mut b_index = HashMap::new();
    for (i, n) in b.names.iter().enumerate() {
        b_index.insert(n.as_str(), i);
    }
    let mut a_to_b = Vec::with_capacity(a.node_count());
    for n in &a.names {
        match b_index.get(n.as_str()) {
            Some(&i) => a_to_b.push(i),
            None => {
                return Err(Error::contract(format!(
                    "node '{n}' missing from second graph"
                )))
            }
        }
    }
    let n = a.node_count();
    let mut dist = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (bi, bj) = (a_to_b[i], a_to_b[j]);
            let fwd = (a.has_edge(i, j), b.has_edge(bi, bj));
            let rev = (a.has_edge(j, i), b.has_edge(bj, bi));
            let in_a = fwd.0 || rev.0;
            let in_b = fwd.1 || rev.1;
            // Present in exactly one graph, or present in both with
            // opposite orientation: one operation either way.
            if in_a != in_b || (in_a && in_b && fwd.0 != fwd.1) {
                dist += 1;
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn add_edge_to_empty_graph() {
        let d = Dag::new(names(&["A", "B"])).unwrap();
        let d = d
            .apply_move(Move::Add { parent: 0, child: 1 })
            .unwrap()
            .applied()
            .expect("acyclic add");
        assert_eq!(d.edge_count(), 1);
        assert!(d.has_edge(0, 1));
    }

    #[test]
    fn two_cycle_rejected() {
        let d = Dag::from_edges(names(&["A", "B"]), &[(0, 1)]).unwrap();
        match d.apply_move(Move::Add { parent: 1, child: 0 }).unwrap() {
            MoveOutcome::RejectedCycle => {}
            MoveOutcome::Applied(_) => panic!("2-cycle must be rejected"),
        }
    }

    #[test]
    fn reverse_cycle_cases() {
        // A→B→C plus A→C: reversing A→B is fine, reversing A→C closes
        // the cycle A→B→C→A.
        let d = Dag::from_edges(names(&["A", "B", "C"]), &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let ok = d.apply_move(Move::Reverse { parent: 0, child: 1 }).unwrap();
        assert!(matches!(ok, MoveOutcome::Applied(_)));
        let rej = d.apply_move(Move::Reverse { parent: 0, child: 2 }).unwrap();
        assert!(matches!(rej, MoveOutcome::RejectedCycle));
    }

    #[test]
    fn contract_errors() {
        let d = Dag::from_edges(names(&["A", "B"]), &[(0, 1)]).unwrap();
        assert!(d.apply_move(Move::Add { parent: 0, child: 1 }).is_err());
        assert!(d.apply_move(Move::Delete { parent: 1, child: 0 }).is_err());
        assert!(d.apply_move(Move::Add { parent: 0, child: 5 }).is_err());
        assert!(d.apply_move(Move::Add { parent: 0, child: 0 }).is_err());
    }

    #[test]
    fn topological_order_simple_and_tiebreak() {
        let d = Dag::from_edges(names(&["A", "B"]), &[(0, 1)]).unwrap();
        assert_eq!(d.topological_order(), vec![0, 1]);

        // Edgeless {B, A}: name order wins.
        let d = Dag::new(names(&["B", "A"])).unwrap();
        let order = d.topological_order();
        assert_eq!(order, vec![1, 0]);
    }

    #[test]
    fn topological_order_diamond() {
        let d = Dag::from_edges(
            names(&["A", "B", "C", "D"]),
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        assert_eq!(d.topological_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn shd_examples() {
        let a = Dag::from_edges(names(&["A", "B"]), &[(0, 1)]).unwrap();
        assert_eq!(shd(&a, &a).unwrap(), 0);

        let rev = Dag::from_edges(names(&["A", "B"]), &[(1, 0)]).unwrap();
        assert_eq!(shd(&a, &rev).unwrap(), 1);

        let chain = Dag::from_edges(names(&["A", "B", "C"]), &[(0, 1), (1, 2)]).unwrap();
        let shorter = Dag::from_edges(names(&["A", "B", "C"]), &[(0, 1)]).unwrap();
        assert_eq!(shd(&chain, &shorter).unwrap(), 1);
    }

    #[test]
    fn shd_node_set_mismatch() {
        let a = Dag::new(names(&["A", "B"])).unwrap();
        let b = Dag::new(names(&["A", "C"])).unwrap();
        assert!(shd(&a, &b).is_err());
    }

    #[test]
    fn shd_handles_permuted_node_order() {
        let a = Dag::from_edges(names(&["A", "B", "C"]), &[(0, 1), (1, 2)]).unwrap();
        let b = Dag::from_edges(names(&["C", "A", "B"]), &[(1, 2), (2, 0)]).unwrap();
        // Same edges A→B, B→C under the permutation.
        assert_eq!(shd(&a, &b).unwrap(), 0);
    }

    #[test]
    fn inverse_move_restores() {
        let d = Dag::from_edges(names(&["A", "B", "C"]), &[(0, 1)]).unwrap();
        let added = d
            .apply_move(Move::Add { parent: 1, child: 2 })
            .unwrap()
            .applied()
            .unwrap();
        let back = added
            .apply_move(Move::Delete { parent: 1, child: 2 })
            .unwrap()
            .applied()
            .unwrap();
        assert_eq!(back, d);

        let rev = d
            .apply_move(Move::Reverse { parent: 0, child: 1 })
            .unwrap()
            .applied()
            .unwrap();
        let back = rev
            .apply_move(Move::Reverse { parent: 1, child: 0 })
            .unwrap()
            .applied()
            .unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn from_edges_rejects_cycle() {
        let err = Dag::from_edges(names(&["A", "B"]), &[(0, 1), (1, 0)]);
        assert!(err.is_err());
    }

    #[test]
    fn restriction_keeps_inner_edges() {
        let d = Dag::from_edges(
            names(&["A", "B", "X"]),
            &[(0, 2), (2, 1)],
        )
        .unwrap();
        let r = d.restrict_to(&names(&["A", "B"])).unwrap();
        assert_eq!(r.edge_count(), 0);
        let d2 = Dag::from_edges(names(&["A", "B", "X"]), &[(0, 1), (0, 2)]).unwrap();
        let r2 = d2.restrict_to(&names(&["A", "B"])).unwrap();
        assert_eq!(r2.named_edges(), vec![("A".to_string(), "B".to_string())]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_dag(n: usize, moves: usize) -> impl Strategy<Value = Dag> {
            prop::collection::vec((0..n, 0..n), moves).prop_map(move |pairs| {
                let mut dag = Dag::new((0..n).map(|i| format!("N{i}")).collect()).unwrap();
                for (u, v) in pairs {
                    if u == v {
                        continue;
                    }
                    let mv = if dag.has_edge(u, v) {
                        Move::Delete { parent: u, child: v }
                    } else {
                        Move::Add { parent: u, child: v }
                    };
                    if let Ok(MoveOutcome::Applied(next)) = dag.apply_move(mv) {
                        dag = next;
                    }
                }
                dag
            })
        }

        proptest! {
            #[test]
            fn accepted_move_streams_stay_acyclic(dag in arb_dag(6, 25)) {
                prop_assert!(!dag.has_cycle());
            }

            #[test]
            fn shd_symmetry_and_identity(a in arb_dag(5, 15), b in arb_dag(5, 15)) {
                prop_assert_eq!(shd(&a, &b).unwrap(), shd(&b, &a).unwrap());
                prop_assert_eq!(shd(&a, &a).unwrap(), 0);
            }

            #[test]
            fn shd_triangle_inequality(
                a in arb_dag(5, 15),
                b in arb_dag(5, 15),
                c in arb_dag(5, 15),
            ) {
                let ab = shd(&a, &b).unwrap();
                let bc = shd(&b, &c).unwrap();
                let ac = shd(&a, &c).unwrap();
                prop_assert!(ac <= ab + bc);
            }
        }
    }
}
