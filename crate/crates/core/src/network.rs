//! Lazily evaluated countable networks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::{LabelKind, StateLabel};
use crate::subset::FiniteSubset;

/// Rates below this are treated as absent edges.
pub const MIN_RATE: f64 = 1e-300;

/// Nested window sequences `F_1 ⊆ F_2 ⊆ ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    /// `{-n..n}` on integer labels, `{0..n}` on naturals, the sub-cube on
    /// the first `n` sites for bit labels.
    Balls,
    /// `{-n..n+1}` on integer labels.
    ShiftedBalls,
    /// The `n + 1` states of smallest canonical index.
    Prefixes,
}

/// A countable directed weighted graph given by an out-edge oracle.
///
/// Implementations must be deterministic, must never report self-loops and
/// must report finitely many edges per state.
pub trait Network {
    fn name(&self) -> &str;

    fn label_kind(&self) -> LabelKind;

    /// Appends the out-edges of `state` to `out`.
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>);

    /// Out-edges with rates below [`MIN_RATE`] removed.
    fn out_edges_into(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        out.clear();
        self.push_out_edges(state, out);
        out.retain(|&(_, r)| r >= MIN_RATE);
    }

    fn out_edges(&self, state: StateLabel) -> Vec<(StateLabel, f64)> {
        let mut out = Vec::new();
        self.out_edges_into(state, &mut out);
        out
    }

    /// Total exit rate `γ_{state→}`.
    fn exit_rate(&self, state: StateLabel) -> f64 {
        self.out_edges(state).iter().map(|&(_, r)| r).sum()
    }

    fn window(&self, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
        default_window(self.label_kind(), kind, n)
    }
}

pub(crate) fn default_window(label_kind: LabelKind, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
    match (label_kind, kind) {
        (LabelKind::Int, WindowKind::Balls) => FiniteSubset::canonical_range(label_kind, 0, 2 * n),
        (LabelKind::Int, WindowKind::ShiftedBalls) => {
            let n = i64::try_from(n).map_err(|_| Error::LabelOverflow)?;
            FiniteSubset::int_range(-n, n + 1)
        }
        (LabelKind::Bits, WindowKind::Balls) => {
            if n > 63 {
                return Err(Error::DimensionTooLarge {
                    dim: usize::MAX,
                    limit: 1 << 20,
                });
            }
            FiniteSubset::canonical_range(label_kind, 0, (1u64 << n) - 1)
        }
        (_, WindowKind::ShiftedBalls) => Err(Error::UnsupportedWindow(kind)),
        (_, WindowKind::Balls | WindowKind::Prefixes) => FiniteSubset::canonical_range(label_kind, 0, n),
    }
}

impl<T: Network + ?Sized> Network for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn label_kind(&self) -> LabelKind {
        (**self).label_kind()
    }
    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        (**self).push_out_edges(state, out)
    }
    fn window(&self, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
        (**self).window(kind, n)
    }
}

/// A finite network given explicitly by its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeListNetwork {
    name: String,
    kind: LabelKind,
    states: Vec<StateLabel>,
    adjacency: BTreeMap<StateLabel, Vec<(StateLabel, f64)>>,
}

impl EdgeListNetwork {
    /// Builds the network, summing parallel edges and dropping negligible rates.
    pub fn new(
        name: impl Into<String>,
        edges: impl IntoIterator<Item = (StateLabel, StateLabel, f64)>,
    ) -> Result<Self> {
        let mut adjacency: BTreeMap<StateLabel, BTreeMap<StateLabel, f64>> = BTreeMap::new();
        let mut kind = None;
        let mut states = BTreeMap::new();
        for (from, to, rate) in edges {
            for l in [from, to] {
                match kind {
                    None => kind = Some(l.kind()),
                    Some(k) if k != l.kind() => {
                        return Err(Error::MixedLabelKinds {
                            expected: k,
                            found: l.kind(),
                        })
                    }
                    _ => {}
                }
                states.insert(l, ());
            }
            if from == to {
                return Err(Error::SelfLoop(from));
            }
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidRate { from, to, rate });
            }
            *adjacency.entry(from).or_default().entry(to).or_insert(0.0) += rate;
        }
        let kind = kind.ok_or(Error::EmptySubset)?;
        let adjacency = adjacency
            .into_iter()
            .map(|(s, targets)| {
                let list = targets.into_iter().filter(|&(_, r)| r >= MIN_RATE).collect();
                (s, list)
            })
            .collect();
        Ok(EdgeListNetwork {
            name: name.into(),
            kind,
            states: states.into_keys().collect(),
            adjacency,
        })
    }

    /// Every state mentioned by some edge, in canonical order.
    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn all_states(&self) -> FiniteSubset {
        FiniteSubset::new(self.states.iter().copied()).expect("network has at least one state")
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateLabel, StateLabel, f64)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&s, list)| list.iter().map(move |&(t, r)| (s, t, r)))
    }
}

impl Network for EdgeListNetwork {
    fn name(&self) -> &str {
        &self.name
    }

    fn label_kind(&self) -> LabelKind {
        self.kind
    }

    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        if let Some(list) = self.adjacency.get(&state) {
            out.extend_from_slice(list);
        }
    }

    /// Prefixes and balls both take the first `n + 1` listed states.
    fn window(&self, kind: WindowKind, n: u64) -> Result<FiniteSubset> {
        if kind == WindowKind::ShiftedBalls {
            return Err(Error::UnsupportedWindow(kind));
        }
        let take = (n as usize).saturating_add(1).min(self.states.len());
        FiniteSubset::new(self.states[..take].iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StateLabel::Nat;

    #[test]
    fn edge_list_validation() {
        assert_eq!(
            EdgeListNetwork::new("x", [(Nat(1), Nat(1), 1.0)]),
            Err(Error::SelfLoop(Nat(1)))
        );
        assert!(matches!(
            EdgeListNetwork::new("x", [(Nat(1), Nat(2), -1.0)]),
            Err(Error::InvalidRate { .. })
        ));
        assert!(matches!(
            EdgeListNetwork::new("x", [(Nat(1), Nat(2), f64::NAN)]),
            Err(Error::InvalidRate { .. })
        ));
        assert!(matches!(
            EdgeListNetwork::new("x", [(Nat(1), StateLabel::Int(2), 1.0)]),
            Err(Error::MixedLabelKinds { .. })
        ));
    }

    #[test]
    fn parallel_edges_sum_and_tiny_rates_vanish() {
        let net = EdgeListNetwork::new(
            "x",
            [(Nat(1), Nat(2), 1.0), (Nat(1), Nat(2), 0.5), (Nat(2), Nat(1), 1e-310)],
        )
        .unwrap();
        assert_eq!(net.out_edges(Nat(1)), [(Nat(2), 1.5)]);
        assert!(net.out_edges(Nat(2)).is_empty());
        assert_eq!(net.states(), &[Nat(1), Nat(2)]);
    }

    #[test]
    fn default_windows() {
        let b = default_window(LabelKind::Int, WindowKind::Balls, 2).unwrap();
        assert_eq!(b.len(), 5);
        assert!(b.contains(&StateLabel::Int(-2)) && b.contains(&StateLabel::Int(2)));
        let s = default_window(LabelKind::Int, WindowKind::ShiftedBalls, 2).unwrap();
        assert!(s.contains(&StateLabel::Int(3)) && !s.contains(&StateLabel::Int(-3)));
        let q = default_window(LabelKind::Bits, WindowKind::Balls, 3).unwrap();
        assert_eq!(q.len(), 8);
        assert!(default_window(LabelKind::Nat, WindowKind::ShiftedBalls, 2).is_err());
    }
}
