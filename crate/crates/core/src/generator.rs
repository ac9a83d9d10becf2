//! Truncated generators in compressed sparse column form.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::subnetwork_edges;
use crate::label::StateLabel;
use crate::network::Network;
use crate::subset::FiniteSubset;

/// How the complement of the window is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Links leaving the window are dropped and the diagonal repaired.
    Subnetwork,
    /// The full exit rate stays on the diagonal, so probability leaks out.
    SharpCutoff,
    /// The complement is merged into one extra state.
    Condense,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Subnetwork => "subnetwork",
            Scheme::SharpCutoff => "sharp",
            Scheme::Condense => "condense",
        }
    }

    pub fn from_name(s: &str) -> Option<Scheme> {
        match s {
            "subnetwork" => Some(Scheme::Subnetwork),
            "sharp" => Some(Scheme::SharpCutoff),
            "condense" => Some(Scheme::Condense),
            _ => None,
        }
    }
}

/// Relative tolerance on column sums.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// A finite generator `Γ` with `Γ[i][j] = γ_{j→i}` off the diagonal.
///
/// Diagonal entries are stored explicitly in every column. Under
/// [`Scheme::Condense`] the last index is the merged remainder state.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGenerator {
    subset: FiniteSubset,
    scheme: Scheme,
    remainder: bool,
    network: String,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<f64>,
}

/// Norms used by the approximation bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorNorms {
    /// Maximum absolute column sum.
    pub op1: f64,
    /// Sum of all absolute entries.
    pub op11: f64,
    /// Largest absolute diagonal entry.
    pub max_exit_rate: f64,
}

impl SparseGenerator {
    /// Assembles a generator from per-column entry lists. Entries in a column
    /// may come in any order; duplicates are summed.
    fn assemble(
        subset: FiniteSubset,
        scheme: Scheme,
        remainder: bool,
        network: String,
        mut columns: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut rows = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (j, col) in columns.iter_mut().enumerate() {
            if !col.iter().any(|&(i, _)| i == j) {
                col.push((j, 0.0));
            }
            col.sort_by_key(|&(i, _)| i);
            for &(i, v) in col.iter() {
                if rows.len() > col_ptr[j] && rows[rows.len() - 1] == i {
                    *values.last_mut().unwrap() += v;
                } else {
                    rows.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        SparseGenerator {
            subset,
            scheme,
            remainder,
            network,
            col_ptr,
            rows,
            values,
        }
    }

    /// Rebuilds a generator from `(row, col, value)` triplets and validates it.
    pub fn from_triplets(
        subset: FiniteSubset,
        scheme: Scheme,
        network: impl Into<String>,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let remainder = scheme == Scheme::Condense;
        let dim = subset.len() + remainder as usize;
        let mut columns = vec![Vec::new(); dim];
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i.max(j) + 1,
                });
            }
            columns[j].push((i, v));
        }
        let g = Self::assemble(subset, scheme, remainder, network.into(), columns);
        g.validate()?;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn subset(&self) -> &FiniteSubset {
        &self.subset
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn has_remainder(&self) -> bool {
        self.remainder
    }

    pub fn network_name(&self) -> &str {
        &self.network
    }

    /// Label of local index `i`; `None` for the remainder state.
    pub fn label(&self, i: usize) -> Option<StateLabel> {
        (i < self.subset.len()).then(|| self.subset.label(i))
    }

    /// Nonzero pattern of column `j` as `(row, value)` pairs, diagonal included.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.rows[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.rows[r.clone()].binary_search(&i) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self, j: usize) -> f64 {
        self.get(j, j)
    }

    /// `y = Γ x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.column(j) {
                y[i] += v * xj;
            }
        }
    }

    /// Entries in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |j| self.column(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Checks sign and column-sum invariants for the generator's scheme.
    pub fn validate(&self) -> Result<()> {
        for j in 0..self.dim() {
            let mut sum = 0.0;
            let mut abs = 0.0;
            for (i, v) in self.column(j) {
                if !v.is_finite() {
                    return Err(Error::GeneratorInvariant {
                        column: j,
                        reason: "non-finite entry",
                    });
                }
                if i != j && v < 0.0 {
                    return Err(Error::GeneratorInvariant {
                        column: j,
                        reason: "negative off-diagonal entry",
                    });
                }
                sum += v;
                abs += v.abs();
            }
            let slack = COLUMN_SUM_TOL * abs;
            let ok = match self.scheme {
                Scheme::SharpCutoff => sum <= slack,
                Scheme::Subnetwork | Scheme::Condense => sum.abs() <= slack,
            };
            if !ok {
                return Err(Error::GeneratorInvariant {
                    column: j,
                    reason: "column sum out of range",
                });
            }
        }
        Ok(())
    }

    pub fn norms(&self) -> GeneratorNorms {
        let mut op1: f64 = 0.0;
        let mut op11 = 0.0;
        let mut max_exit_rate: f64 = 0.0;
        for j in 0..self.dim() {
            let col: f64 = self.column(j).map(|(_, v)| v.abs()).sum();
            op1 = op1.max(col);
            op11 += col;
            max_exit_rate = max_exit_rate.max(self.diagonal(j).abs());
        }
        GeneratorNorms {
            op1,
            op11,
            max_exit_rate,
        }
    }
}

/// Column lists from the internal edges of `f`.
fn internal_columns<N: Network + ?Sized>(net: &N, f: &FiniteSubset, dim: usize) -> Vec<Vec<(usize, f64)>> {
    let mut columns = vec![Vec::new(); dim];
    for (j, i, r) in subnetwork_edges(net, f) {
        columns[j].push((i, r));
    }
    columns
}

fn repair_diagonal(columns: &mut [Vec<(usize, f64)>]) {
    for (j, col) in columns.iter_mut().enumerate() {
        let out: f64 = col.iter().map(|&(_, r)| r).sum();
        col.push((j, -out));
    }
}

/// `Γ^[F]`: internal links of `f` with the diagonal repaired.
pub fn truncate_subnetwork<N: Network + ?Sized>(net: &N, f: &FiniteSubset) -> SparseGenerator {
    let mut columns = internal_columns(net, f, f.len());
    repair_diagonal(&mut columns);
    SparseGenerator::assemble(f.clone(), Scheme::Subnetwork, false, net.name().into(), columns)
}

/// The full generator restricted to `f`, keeping the complete exit rates on
/// the diagonal.
pub fn truncate_sharp<N: Network + ?Sized>(net: &N, f: &FiniteSubset) -> SparseGenerator {
    let mut columns = internal_columns(net, f, f.len());
    for (j, col) in columns.iter_mut().enumerate() {
        col.push((j, -net.exit_rate(f.label(j))));
    }
    SparseGenerator::assemble(f.clone(), Scheme::SharpCutoff, false, net.name().into(), columns)
}

/// `f` plus one extra state standing for `horizon ∖ f`. Rates into and out
/// of the extra state are the summed rates across the cut; links inside
/// `horizon ∖ f` and beyond `horizon` are ignored.
pub fn truncate_condense<N: Network + ?Sized>(
    net: &N,
    f: &FiniteSubset,
    horizon: &FiniteSubset,
) -> Result<SparseGenerator> {
    if let Some(l) = f.members().iter().find(|l| !horizon.contains(l)) {
        return Err(Error::StateNotInSubset(*l));
    }
    if horizon.len() == f.len() {
        return Err(Error::EmptyRemainder);
    }
    let rem = f.len();
    let mut columns = internal_columns(net, f, rem + 1);
    let mut buf = Vec::new();
    for &state in horizon.members() {
        net.out_edges_into(state, &mut buf);
        match f.index_of(&state) {
            Some(j) => {
                for (t, r) in &buf {
                    if !f.contains(t) && horizon.contains(t) {
                        columns[j].push((rem, *r));
                    }
                }
            }
            None => {
                for (t, r) in &buf {
                    if let Some(i) = f.index_of(t) {
                        columns[rem].push((i, *r));
                    }
                }
            }
        }
    }
    repair_diagonal(&mut columns);
    Ok(SparseGenerator::assemble(
        f.clone(),
        Scheme::Condense,
        true,
        net.name().into(),
        columns,
    ))
}

/// Column `j` of `g` re-indexed into `union`.
fn aligned_column(g: &SparseGenerator, union: &FiniteSubset, j: usize) -> Vec<(usize, f64)> {
    g.column(j)
        .map(|(i, v)| (union.index_of(&g.subset.label(i)).expect("subset of union"), v))
        .collect()
}

/// `‖Γ^[F1] − Γ^[F2]‖₁,₁` with both generators embedded in `F1 ∪ F2`.
pub fn generator_distance(g1: &SparseGenerator, g2: &SparseGenerator) -> Result<f64> {
    for g in [g1, g2] {
        if g.scheme != Scheme::Subnetwork {
            return Err(Error::SchemeMismatch {
                expected: Scheme::Subnetwork,
                found: g.scheme,
            });
        }
    }
    if g1.network != g2.network {
        return Err(Error::MixedNetworks);
    }
    let union = g1.subset.union(&g2.subset)?;
    let mut total = 0.0;
    for label in union.members() {
        let c1 = g1.subset.index_of(label).map(|j| aligned_column(g1, &union, j));
        let c2 = g2.subset.index_of(label).map(|j| aligned_column(g2, &union, j));
        let (a, b) = (c1.unwrap_or_default(), c2.unwrap_or_default());
        let (mut p, mut q) = (0, 0);
        while p < a.len() || q < b.len() {
            let ia = a.get(p).map_or(usize::MAX, |e| e.0);
            let ib = b.get(q).map_or(usize::MAX, |e| e.0);
            if ia == ib {
                total += (a[p].1 - b[q].1).abs();
                p += 1;
                q += 1;
            } else if ia < ib {
                total += a[p].1.abs();
                p += 1;
            } else {
                total += b[q].1.abs();
                q += 1;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::StateLabel::Nat;
    use crate::network::EdgeListNetwork;

    fn three_state(g12: f64, g21: f64, g13: f64, g32: f64) -> EdgeListNetwork {
        EdgeListNetwork::new(
            "three",
            [
                (Nat(1), Nat(2), g12),
                (Nat(2), Nat(1), g21),
                (Nat(1), Nat(3), g13),
                (Nat(3), Nat(2), g32),
            ],
        )
        .unwrap()
    }

    fn chain(rates: &[(f64, f64)]) -> EdgeListNetwork {
        let mut e = Vec::new();
        for (n, &(up, down)) in rates.iter().enumerate() {
            e.push((Nat(n as u64), Nat(n as u64 + 1), up));
            e.push((Nat(n as u64 + 1), Nat(n as u64), down));
        }
        EdgeListNetwork::new("chain", e).unwrap()
    }

    fn set(xs: &[u64]) -> FiniteSubset {
        FiniteSubset::new(xs.iter().map(|&x| Nat(x))).unwrap()
    }

    #[test]
    fn subnetwork_of_three_state() {
        let net = three_state(2.0, 3.0, 5.0, 7.0);
        let g = truncate_subnetwork(&net, &set(&[1, 2]));
        let d = g.to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[-2.0, 3.0, 2.0, -3.0]));
        g.validate().unwrap();
    }

    #[test]
    fn sharp_keeps_full_exit_rate() {
        let net = three_state(2.0, 3.0, 5.0, 7.0);
        let g = truncate_sharp(&net, &set(&[1, 2]));
        assert_eq!(g.to_dense(), DMatrix::from_row_slice(2, 2, &[-7.0, 3.0, 2.0, -3.0]));
        g.validate().unwrap();
        let sums: Vec<f64> = (0..2).map(|j| g.column(j).map(|e| e.1).sum()).collect();
        assert_eq!(sums, [-5.0, 0.0]);
    }

    #[test]
    fn singleton_is_zero() {
        let net = three_state(1.0, 1.0, 1.0, 1.0);
        let g = truncate_subnetwork(&net, &set(&[3]));
        assert_eq!(g.to_dense(), DMatrix::zeros(1, 1));
        let n = g.norms();
        assert_eq!((n.op1, n.op11, n.max_exit_rate), (0.0, 0.0, 0.0));
    }

    #[test]
    fn chain_column_sums_vanish() {
        let net = chain(&[(1.0, 2.0), (3.0, 4.0)]);
        let g = truncate_subnetwork(&net, &FiniteSubset::nat_range(0, 2).unwrap());
        for j in 0..3 {
            assert_eq!(g.column(j).map(|e| e.1).sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn sharp_chain_leaks_only_at_the_edge() {
        let net = chain(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        let g = truncate_sharp(&net, &FiniteSubset::nat_range(0, 2).unwrap());
        let sums: Vec<f64> = (0..3).map(|j| g.column(j).map(|e| e.1).sum()).collect();
        assert_eq!(sums, [0.0, 0.0, -5.0]);
    }

    #[test]
    fn condense_on_chain() {
        let net = chain(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        let f = FiniteSubset::nat_range(0, 1).unwrap();
        let h = FiniteSubset::nat_range(0, 3).unwrap();
        let g = truncate_condense(&net, &f, &h).unwrap();
        assert_eq!(g.dim(), 3);
        g.validate().unwrap();
        assert_eq!(g.get(2, 1), 3.0);
        assert_eq!(g.get(1, 2), 4.0);
        assert_eq!(g.get(2, 0), 0.0);
        assert_eq!(g.get(0, 2), 0.0);
        assert_eq!(truncate_condense(&net, &h, &h), Err(Error::EmptyRemainder));
    }

    #[test]
    fn norms_of_two_state() {
        let net = three_state(2.0, 5.0, 1.0, 1.0);
        let n = truncate_subnetwork(&net, &set(&[1, 2])).norms();
        assert_eq!(n.op1, 10.0);
        assert_eq!(n.op11, 14.0);
        assert_eq!(n.max_exit_rate, 5.0);
    }

    #[test]
    fn distance_of_consecutive_windows() {
        let net = chain(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        let g2 = truncate_subnetwork(&net, &FiniteSubset::nat_range(0, 2).unwrap());
        let g3 = truncate_subnetwork(&net, &FiniteSubset::nat_range(0, 3).unwrap());
        assert_eq!(generator_distance(&g2, &g3).unwrap(), 2.0 * (5.0 + 6.0));
        assert_eq!(generator_distance(&g3, &g3).unwrap(), 0.0);
        let other = EdgeListNetwork::new("other", [(Nat(0), Nat(1), 1.0)]).unwrap();
        let g = truncate_subnetwork(&other, &FiniteSubset::nat_range(0, 1).unwrap());
        assert_eq!(generator_distance(&g, &g2), Err(Error::MixedNetworks));
    }

    #[test]
    fn triplets_round_trip() {
        let net = three_state(2.0, 3.0, 5.0, 7.0);
        let f = set(&[1, 2, 3]);
        let g = truncate_subnetwork(&net, &f);
        let back = SparseGenerator::from_triplets(f, Scheme::Subnetwork, "three", g.triplets()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn validate_catches_broken_columns() {
        let f = set(&[1, 2]);
        let bad = SparseGenerator::from_triplets(f.clone(), Scheme::Subnetwork, "x", [(0, 0, -1.0), (1, 0, 2.0)]);
        assert!(matches!(bad, Err(Error::GeneratorInvariant { column: 0, .. })));
        let neg = SparseGenerator::from_triplets(f, Scheme::Subnetwork, "x", [(0, 0, 1.0), (1, 0, -1.0)]);
        assert!(matches!(neg, Err(Error::GeneratorInvariant { .. })));
    }
}
