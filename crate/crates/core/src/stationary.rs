//! Stationary vectors of finite windows.
//!
//! Three independent routes: a direct kernel solve, the path-product
//! candidate for networks with detailed balance, and brute-force in-tree
//! enumeration for tiny windows.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::evolution::ProbVec;
use crate::generator::{truncate_subnetwork, Scheme, SparseGenerator};
use crate::graph::{closed_classes, is_strongly_connected, reachable, subnetwork_edges, LocalEdge};
use crate::label::StateLabel;
use crate::linalg::{l1_norm, log_sum_exp, solve_refined};
use crate::network::{Network, WindowKind};
use crate::subset::FiniteSubset;

/// Largest window handled by the dense kernel solve.
pub const KERNEL_LIMIT: usize = 5000;
/// Largest window handled by in-tree enumeration.
pub const IN_TREE_LIMIT: usize = 9;
/// Tolerance on log cycle ratios.
pub const CYCLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryMethod {
    KernelSolve,
    DetailedBalanceProduct,
    InTreeOracle,
}

impl StationaryMethod {
    pub fn name(&self) -> &'static str {
        match self {
            StationaryMethod::KernelSolve => "kernel",
            StationaryMethod::DetailedBalanceProduct => "detailed-balance",
            StationaryMethod::InTreeOracle => "in-tree",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub vector: ProbVec,
    /// Dimension of the kernel of the generator.
    pub kernel_dim: usize,
    /// `‖Γ x‖₁`.
    pub residual: f64,
    pub method: StationaryMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetailedBalanceCertificate {
    pub holds: bool,
    /// A directed cycle `ω₀ → ω₁ → … → ω₀` (start not repeated) whose
    /// forward and backward weights differ.
    pub witness_cycle: Option<Vec<StateLabel>>,
    /// Largest `|ln(forward weight / backward weight)|` over fundamental cycles.
    pub max_cycle_ratio_error: f64,
}

fn residual(g: &SparseGenerator, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    g.mul_vec(x, &mut y);
    l1_norm(&y)
}

fn adjacency_of(g: &SparseGenerator) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.dim()];
    for (i, j, v) in g.triplets() {
        if i != j && v > 0.0 {
            adj[j].push(i);
        }
    }
    adj
}

/// Solves `Γ x = 0, Σ x = 1`, using the closed class reached from local
/// index 0 when the window is reducible.
pub fn stationary_kernel(g: &SparseGenerator) -> Result<StationaryResult> {
    stationary_kernel_from(g, 0)
}

/// Like [`stationary_kernel`], selecting among several closed classes the
/// one with the smallest member reachable from `reference`.
pub fn stationary_kernel_from(g: &SparseGenerator, reference: usize) -> Result<StationaryResult> {
    if g.scheme() == Scheme::SharpCutoff {
        return Err(Error::SchemeMismatch {
            expected: Scheme::Subnetwork,
            found: g.scheme(),
        });
    }
    let n = g.dim();
    if n > KERNEL_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: KERNEL_LIMIT,
        });
    }
    if reference >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: reference + 1,
        });
    }
    let adj = adjacency_of(g);
    let classes = closed_classes(&adj);
    let reach = reachable(&adj, reference);
    let class = classes
        .iter()
        .find(|c| reach[c[0]])
        .expect("every state reaches a closed class");

    let m = class.len();
    let mut local = vec![usize::MAX; n];
    for (k, &v) in class.iter().enumerate() {
        local[v] = k;
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (k, &j) in class.iter().enumerate() {
        for (i, v) in g.column(j) {
            if local[i] != usize::MAX {
                a[(local[i], k)] = v;
            }
        }
    }
    // The rows of a closed class are linearly dependent; one is replaced by
    // the normalization.
    a.row_mut(0).fill(1.0);
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;
    let sol = solve_refined(&a, &rhs, 2).ok_or(Error::SingularBeyondKernel)?;
    let mut x = vec![0.0; n];
    for (k, &v) in class.iter().enumerate() {
        let s = sol[k];
        if s < -1e-9 {
            return Err(Error::SingularBeyondKernel);
        }
        x[v] = s.max(0.0);
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    let vector = if g.has_remainder() {
        ProbVec::with_remainder(g.subset().clone(), x)?
    } else {
        ProbVec::new(g.subset().clone(), x)?
    };
    Ok(StationaryResult {
        residual: residual(g, vector.values()),
        vector,
        kernel_dim: classes.len(),
        method: StationaryMethod::KernelSolve,
    })
}

fn find_rate(edges: &[LocalEdge], from: usize, to: usize) -> Option<f64> {
    let lo = edges.partition_point(|e| e.0 < from);
    let hi = edges.partition_point(|e| e.0 <= from);
    edges[lo..hi]
        .binary_search_by_key(&to, |e| e.1)
        .ok()
        .map(|k| edges[lo + k].2)
}

fn require_reverse_edges(f: &FiniteSubset, edges: &[LocalEdge]) -> Result<()> {
    for &(s, d, _) in edges {
        if find_rate(edges, d, s).is_none() {
            return Err(Error::MissingReverseEdge {
                from: f.label(s),
                to: f.label(d),
            });
        }
    }
    Ok(())
}

/// Breadth-first spanning forest over bidirectional edges, with log path
/// products `ln X*`. Roots are `first_root` then the smallest unvisited
/// index. Returns `(parent, depth, log_x, roots)`.
fn log_forest(n: usize, edges: &[LocalEdge], first_root: usize) -> (Vec<usize>, Vec<usize>, Vec<f64>, usize) {
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut log_x = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    let mut roots = 0;
    let mut queue = VecDeque::new();
    for root in core::iter::once(first_root).chain(0..n) {
        if seen[root] {
            continue;
        }
        roots += 1;
        seen[root] = true;
        log_x[root] = 0.0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let lo = edges.partition_point(|e| e.0 < u);
            for &(_, v, r) in edges[lo..].iter().take_while(|e| e.0 == u) {
                if seen[v] {
                    continue;
                }
                let back = find_rate(edges, v, u).expect("reverse edges checked");
                seen[v] = true;
                parent[v] = u;
                depth[v] = depth[u] + 1;
                log_x[v] = log_x[u] + libm::log(r) - libm::log(back);
                queue.push_back(v);
            }
        }
    }
    (parent, depth, log_x, roots)
}

/// `X*(ω) = Π γ_{parent→child}/γ_{child→parent}` along a breadth-first tree
/// from `root` (default: the smallest state of `f`), normalized. Path
/// independence is not checked here; see [`kolmogorov_check`].
pub fn detailed_balance_candidate<N: Network + ?Sized>(
    net: &N,
    f: &FiniteSubset,
    root: Option<StateLabel>,
) -> Result<StationaryResult> {
    let root = match root {
        Some(l) => f.index_of(&l).ok_or(Error::StateNotInSubset(l))?,
        None => 0,
    };
    let edges = subnetwork_edges(net, f);
    require_reverse_edges(f, &edges)?;
    let (_, _, log_x, roots) = log_forest(f.len(), &edges, root);
    if roots > 1 {
        return Err(Error::NotConnected);
    }
    let z = log_sum_exp(&log_x);
    let values = log_x.iter().map(|&l| libm::exp(l - z)).collect();
    let vector = ProbVec::new(f.clone(), values)?.normalized()?;
    let g = truncate_subnetwork(net, f);
    Ok(StationaryResult {
        residual: residual(&g, vector.values()),
        vector,
        kernel_dim: 1,
        method: StationaryMethod::DetailedBalanceProduct,
    })
}

/// Tests every fundamental cycle of a spanning forest of `f` for equal
/// forward and backward weights.
pub fn kolmogorov_check<N: Network + ?Sized>(net: &N, f: &FiniteSubset) -> Result<DetailedBalanceCertificate> {
    let edges = subnetwork_edges(net, f);
    require_reverse_edges(f, &edges)?;
    let (parent, depth, log_x, _) = log_forest(f.len(), &edges, 0);
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for &(u, v, r) in &edges {
        if u > v || parent[v] == u || parent[u] == v {
            continue;
        }
        let back = find_rate(&edges, v, u).expect("reverse edges checked");
        let err = (log_x[u] + libm::log(r) - libm::log(back) - log_x[v]).abs();
        worst = worst.max(err);
        if err > CYCLE_TOL && witness.is_none() {
            witness = Some(fundamental_cycle(&parent, &depth, u, v, f));
        }
    }
    Ok(DetailedBalanceCertificate {
        holds: worst <= CYCLE_TOL,
        witness_cycle: witness,
        max_cycle_ratio_error: worst,
    })
}

/// The cycle `u → v → … → lca → … → u` closed by the non-tree edge `(u, v)`.
fn fundamental_cycle(parent: &[usize], depth: &[usize], u: usize, v: usize, f: &FiniteSubset) -> Vec<StateLabel> {
    let (mut a, mut b) = (u, v);
    let mut up_from_u = Vec::new();
    let mut up_from_v = Vec::new();
    while a != b {
        if depth[a] >= depth[b] {
            up_from_u.push(a);
            a = parent[a];
        } else {
            up_from_v.push(b);
            b = parent[b];
        }
    }
    let lca = a;
    let mut cycle = Vec::new();
    cycle.push(u);
    cycle.extend(up_from_v.iter().copied());
    if lca != u {
        cycle.push(lca);
    }
    cycle.extend(up_from_u.iter().skip(1).rev().copied());
    cycle.into_iter().map(|i| f.label(i)).collect()
}

/// `ln(weight of the closed walk) − ln(weight of its reversal)`.
pub fn cycle_log_ratio<N: Network + ?Sized>(net: &N, cycle: &[StateLabel]) -> Result<f64> {
    let rate = |a: StateLabel, b: StateLabel| -> Result<f64> {
        net.out_edges(a)
            .iter()
            .find(|e| e.0 == b)
            .map(|e| e.1)
            .ok_or(Error::MissingReverseEdge { from: a, to: b })
    };
    let mut total = 0.0;
    for k in 0..cycle.len() {
        let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
        total += libm::log(rate(a, b)?) - libm::log(rate(b, a)?);
    }
    Ok(total)
}

/// Streaming `ln Σ exp`.
#[derive(Clone, Copy)]
struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl LogAccumulator {
    fn new() -> Self {
        LogAccumulator {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x <= self.max {
            self.scaled += libm::exp(x - self.max);
        } else {
            self.scaled = self.scaled * libm::exp(self.max - x) + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + libm::log(self.scaled)
        }
    }
}

/// Markov chain tree theorem by exhaustive enumeration: the stationary
/// weight of `ω` is the total weight of spanning in-trees rooted at `ω`.
pub fn in_tree_oracle(g: &SparseGenerator) -> Result<StationaryResult> {
    let n = g.dim();
    if n > IN_TREE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: IN_TREE_LIMIT,
        });
    }
    let out: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|j| {
            g.column(j)
                .filter(|&(i, v)| i != j && v > 0.0)
                .map(|(i, v)| (i, libm::log(v)))
                .collect()
        })
        .collect();
    let edges: Vec<LocalEdge> = (0..n)
        .flat_map(|j| out[j].iter().map(move |&(i, _)| (j, i, 1.0)))
        .collect();
    if !is_strongly_connected(&edges, n) {
        return Err(Error::NotConnected);
    }
    let mut log_w = vec![f64::NEG_INFINITY; n];
    let mut pointer = vec![usize::MAX; n];
    for root in 0..n {
        let mut acc = LogAccumulator::new();
        let order: Vec<usize> = (0..n).filter(|&v| v != root).collect();
        enumerate_trees(&out, &order, 0, root, &mut pointer, 0.0, &mut acc);
        log_w[root] = acc.value();
    }
    let z = log_sum_exp(&log_w);
    let values = log_w.iter().map(|&l| libm::exp(l - z)).collect();
    let vector = if g.has_remainder() {
        ProbVec::with_remainder(g.subset().clone(), values)?
    } else {
        ProbVec::new(g.subset().clone(), values)?
    }
    .normalized()?;
    Ok(StationaryResult {
        residual: residual(g, vector.values()),
        vector,
        kernel_dim: 1,
        method: StationaryMethod::InTreeOracle,
    })
}

fn enumerate_trees(
    out: &[Vec<(usize, f64)>],
    order: &[usize],
    depth: usize,
    root: usize,
    pointer: &mut [usize],
    log_weight: f64,
    acc: &mut LogAccumulator,
) {
    let Some(&v) = order.get(depth) else {
        acc.add(log_weight);
        return;
    };
    for &(target, lr) in &out[v] {
        pointer[v] = target;
        // Any cycle created now passes through v.
        let mut w = target;
        let mut closes = false;
        for _ in 0..order.len() {
            if w == root || pointer[w] == usize::MAX {
                break;
            }
            if w == v {
                closes = true;
                break;
            }
            w = pointer[w];
        }
        if !closes {
            enumerate_trees(out, order, depth + 1, root, pointer, log_weight + lr, acc);
        }
        pointer[v] = usize::MAX;
    }
}

/// `ln X*` on a window by breadth-first search over the oracle, checking
/// reverse rates along the tree only.
fn log_candidate_on_window<N: Network + ?Sized>(net: &N, f: &FiniteSubset, root: usize) -> Result<Vec<f64>> {
    let n = f.len();
    let mut log_x = vec![f64::NAN; n];
    let mut queue = VecDeque::new();
    let mut buf = Vec::new();
    let mut back_buf = Vec::new();
    log_x[root] = 0.0;
    queue.push_back(root);
    let mut visited = 1;
    while let Some(u) = queue.pop_front() {
        let lu = f.label(u);
        net.out_edges_into(lu, &mut buf);
        for &(t, r) in &buf {
            let Some(v) = f.index_of(&t) else { continue };
            if !log_x[v].is_nan() {
                continue;
            }
            net.out_edges_into(t, &mut back_buf);
            let back = back_buf
                .iter()
                .find(|e| e.0 == lu)
                .map(|e| e.1)
                .ok_or(Error::MissingReverseEdge { from: lu, to: t })?;
            log_x[v] = log_x[u] + libm::log(r) - libm::log(back);
            visited += 1;
            queue.push_back(v);
        }
    }
    if visited < n {
        return Err(Error::NotConnected);
    }
    Ok(log_x)
}

/// Partial sums `Σ_{ω ∈ F_n} X*(ω)` over a window sequence, with `X*(root) = 1`.
/// Bounded growth indicates a normalizable candidate.
pub fn candidate_norm_test<N: Network + ?Sized>(
    net: &N,
    root: StateLabel,
    kind: WindowKind,
    sizes: &[u64],
) -> Result<Vec<(u64, f64)>> {
    let mut table = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let f = net.window(kind, n)?;
        let r = f.index_of(&root).ok_or(Error::StateNotInSubset(root))?;
        let log_x = log_candidate_on_window(net, &f, r)?;
        table.push((n, libm::exp(log_sum_exp(&log_x))));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::truncate_subnetwork;
    use crate::label::StateLabel::Nat;
    use crate::linalg::l1_diff;
    use crate::network::EdgeListNetwork;

    fn net(edges: &[(u64, u64, f64)]) -> EdgeListNetwork {
        EdgeListNetwork::new("t", edges.iter().map(|&(a, b, r)| (Nat(a), Nat(b), r))).unwrap()
    }

    fn three_state() -> EdgeListNetwork {
        net(&[(1, 2, 2.0), (2, 1, 3.0), (1, 3, 5.0), (3, 2, 7.0)])
    }

    fn set(xs: &[u64]) -> FiniteSubset {
        FiniteSubset::new(xs.iter().map(|&x| Nat(x))).unwrap()
    }

    #[test]
    fn kernel_of_two_state_window() {
        let g = truncate_subnetwork(&three_state(), &set(&[1, 2]));
        let s = stationary_kernel(&g).unwrap();
        assert!(l1_diff(s.vector.values(), &[0.6, 0.4]) < 1e-15);
        assert_eq!(s.kernel_dim, 1);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn kernel_of_absorbing_windows() {
        let g = truncate_subnetwork(&three_state(), &set(&[1, 3]));
        assert_eq!(stationary_kernel(&g).unwrap().vector.values(), &[0.0, 1.0]);
        let g = truncate_subnetwork(&three_state(), &set(&[2, 3]));
        assert_eq!(stationary_kernel(&g).unwrap().vector.values(), &[1.0, 0.0]);
    }

    #[test]
    fn kernel_dimension_counts_closed_classes() {
        let n = net(&[
            (0, 1, 1.0),
            (1, 0, 1.0),
            (2, 3, 1.0),
            (3, 2, 1.0),
            (4, 0, 1.0),
            (4, 2, 1.0),
        ]);
        let g = truncate_subnetwork(&n, &n.all_states());
        let s = stationary_kernel_from(&g, 4).unwrap();
        assert_eq!(s.kernel_dim, 2);
        assert!(l1_diff(s.vector.values(), &[0.5, 0.5, 0.0, 0.0, 0.0]) < 1e-15);
        let s = stationary_kernel_from(&g, 2).unwrap();
        assert!(l1_diff(s.vector.values(), &[0.0, 0.0, 0.5, 0.5, 0.0]) < 1e-15);
    }

    #[test]
    fn candidate_on_chain() {
        let n = net(&[(0, 1, 2.0), (1, 0, 1.0), (1, 2, 3.0), (2, 1, 6.0)]);
        let s = detailed_balance_candidate(&n, &n.all_states(), None).unwrap();
        assert!(l1_diff(s.vector.values(), &[0.25, 0.5, 0.25]) < 1e-15);
        let single = detailed_balance_candidate(&n, &set(&[1]), None).unwrap();
        assert_eq!(single.vector.values(), &[1.0]);
    }

    #[test]
    fn candidate_needs_reverse_edges() {
        assert_eq!(
            detailed_balance_candidate(&three_state(), &set(&[1, 2, 3]), None).unwrap_err(),
            Error::MissingReverseEdge {
                from: Nat(1),
                to: Nat(3)
            }
        );
        let n = net(&[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]);
        assert_eq!(
            detailed_balance_candidate(&n, &n.all_states(), None).unwrap_err(),
            Error::NotConnected
        );
    }

    #[test]
    fn kolmogorov_on_triangles() {
        let even = net(&[
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 0, 1.0),
            (0, 2, 1.0),
        ]);
        let c = kolmogorov_check(&even, &even.all_states()).unwrap();
        assert!(c.holds && c.witness_cycle.is_none());

        let skew = net(&[
            (0, 1, 2.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 0, 1.0),
            (0, 2, 1.0),
        ]);
        let c = kolmogorov_check(&skew, &skew.all_states()).unwrap();
        assert!(!c.holds);
        let cycle = c.witness_cycle.unwrap();
        assert_eq!(cycle.len(), 3);
        assert!((cycle_log_ratio(&skew, &cycle).unwrap().abs() - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn witness_on_four_cycle_with_chord_free_tree() {
        let n = net(&[
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 3, 1.0),
            (3, 2, 1.0),
            (3, 0, 3.0),
            (0, 3, 1.0),
        ]);
        let c = kolmogorov_check(&n, &n.all_states()).unwrap();
        assert!(!c.holds);
        let cycle = c.witness_cycle.unwrap();
        assert_eq!(cycle.len(), 4);
        assert!((cycle_log_ratio(&n, &cycle).unwrap().abs() - libm::log(3.0)).abs() < 1e-12);
    }

    #[test]
    fn in_tree_two_state_and_three_cycle() {
        let n = net(&[(0, 1, 2.0), (1, 0, 5.0)]);
        let s = in_tree_oracle(&truncate_subnetwork(&n, &n.all_states())).unwrap();
        assert!(l1_diff(s.vector.values(), &[5.0 / 7.0, 2.0 / 7.0]) < 1e-15);

        let cyc = net(&[(0, 1, 1.0), (1, 2, 2.0), (2, 0, 4.0)]);
        let g = truncate_subnetwork(&cyc, &cyc.all_states());
        let a = in_tree_oracle(&g).unwrap();
        let b = stationary_kernel(&g).unwrap();
        assert!(a.vector.l1_distance(&b.vector).unwrap() < 1e-14);
        let big = net(&(0..10).map(|i| (i, (i + 1) % 10, 1.0)).collect::<Vec<_>>());
        assert!(matches!(
            in_tree_oracle(&truncate_subnetwork(&big, &big.all_states())),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn norm_test_on_constant_chain_grows_linearly() {
        let n = net(&(0..30)
            .flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)])
            .collect::<Vec<_>>());
        let t = candidate_norm_test(&n, Nat(0), WindowKind::Prefixes, &[3, 9]).unwrap();
        assert!((t[0].1 - 4.0).abs() < 1e-12 && (t[1].1 - 10.0).abs() < 1e-12);
    }
}
