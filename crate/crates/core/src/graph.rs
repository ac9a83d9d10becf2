//! Finite subnetworks and reachability structure.

use alloc::vec;
use alloc::vec::Vec;

use crate::network::Network;
use crate::subset::FiniteSubset;

/// A directed edge between local indices.
pub type LocalEdge = (usize, usize, f64);

/// The edges of `net` with both endpoints in `f`, relabeled to local indices
/// and sorted by source, then target. Parallel edges are summed.
pub fn subnetwork_edges<N: Network + ?Sized>(net: &N, f: &FiniteSubset) -> Vec<LocalEdge> {
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut row: Vec<(usize, f64)> = Vec::new();
    for (j, &state) in f.members().iter().enumerate() {
        net.out_edges_into(state, &mut buf);
        row.clear();
        row.extend(
            buf.iter()
                .filter_map(|(t, r)| f.index_of(t).map(|i| (i, *r)))
                .filter(|&(i, _)| i != j),
        );
        row.sort_by_key(|&(i, _)| i);
        for &(i, r) in &row {
            match out.last_mut() {
                Some((s, d, acc)) if *s == j && *d == i => *acc += r,
                _ => out.push((j, i, r)),
            }
        }
    }
    out
}

/// Forward adjacency lists.
pub fn adjacency(edges: &[LocalEdge], n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(s, d, _) in edges {
        adj[s].push(d);
    }
    adj
}

fn transpose(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (s, targets) in adj.iter().enumerate() {
        for &d in targets {
            rev[d].push(s);
        }
    }
    rev
}

/// Strongly connected components (Kosaraju). Returns the component id of
/// every node and the number of components.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        stack.push((root, 0));
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&w) = adj[*v].get(*next) {
                *next += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }
    let rev = transpose(adj);
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut todo = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = count;
        todo.push(root);
        while let Some(v) = todo.pop() {
            for &w in &rev[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    todo.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// True iff every node reaches every other node.
pub fn is_strongly_connected(edges: &[LocalEdge], n_states: usize) -> bool {
    if n_states <= 1 {
        return true;
    }
    let adj = adjacency(edges, n_states);
    reachable(&adj, 0).iter().all(|&r| r) && reachable(&transpose(&adj), 0).iter().all(|&r| r)
}

/// Nodes reachable from `start`, itself included.
pub fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut todo = vec![start];
    while let Some(v) = todo.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                todo.push(w);
            }
        }
    }
    seen
}

/// Closed communicating classes: components with no edge leaving them.
/// Each class is sorted; classes are ordered by their smallest member.
pub fn closed_classes(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let (comp, count) = strongly_connected_components(adj);
    let mut open = vec![false; count];
    for (s, targets) in adj.iter().enumerate() {
        for &d in targets {
            if comp[s] != comp[d] {
                open[comp[s]] = true;
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        if !open[c] {
            classes[c].push(v);
        }
    }
    classes.retain(|c| !c.is_empty());
    classes.sort_by_key(|c| c[0]);
    classes
}
