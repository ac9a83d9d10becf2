//! Finite truncation windows.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::{LabelKind, StateLabel};

/// An ordered finite set of states; local index `i` is the `i`-th smallest
/// canonical index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSubset {
    kind: LabelKind,
    members: Vec<StateLabel>,
    // Set when the canonical indices form one contiguous run.
    contiguous_from: Option<u64>,
}

impl FiniteSubset {
    pub fn new(labels: impl IntoIterator<Item = StateLabel>) -> Result<Self> {
        let mut members: Vec<StateLabel> = labels.into_iter().collect();
        let first = *members.first().ok_or(Error::EmptySubset)?;
        let kind = first.kind();
        if let Some(bad) = members.iter().find(|l| l.kind() != kind) {
            return Err(Error::MixedLabelKinds {
                expected: kind,
                found: bad.kind(),
            });
        }
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateState(w[0]));
        }
        Ok(Self::from_sorted(kind, members))
    }

    /// The states with canonical index in `lo..=hi`.
    pub fn canonical_range(kind: LabelKind, lo: u64, hi: u64) -> Result<Self> {
        if hi < lo {
            return Err(Error::EmptySubset);
        }
        let members = (lo..=hi).map(|i| StateLabel::from_canonical(kind, i)).collect();
        Ok(FiniteSubset {
            kind,
            members,
            contiguous_from: Some(lo),
        })
    }

    /// `{0, 1, ..., n}` over natural-number labels.
    pub fn nat_range(lo: u64, hi: u64) -> Result<Self> {
        Self::canonical_range(LabelKind::Nat, lo, hi)
    }

    /// `{lo, ..., hi}` over integer labels.
    pub fn int_range(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::EmptySubset);
        }
        Self::new((lo..=hi).map(StateLabel::Int))
    }

    fn from_sorted(kind: LabelKind, members: Vec<StateLabel>) -> Self {
        let lo = members[0].canonical();
        let hi = members[members.len() - 1].canonical();
        let contiguous_from = (hi - lo == members.len() as u64 - 1).then_some(lo);
        FiniteSubset {
            kind,
            members,
            contiguous_from,
        }
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Always false: subsets are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[StateLabel] {
        &self.members
    }

    pub fn label(&self, index: usize) -> StateLabel {
        self.members[index]
    }

    pub fn index_of(&self, label: &StateLabel) -> Option<usize> {
        if label.kind() != self.kind {
            return None;
        }
        match self.contiguous_from {
            Some(lo) => {
                let c = label.canonical();
                let off = c.checked_sub(lo)?;
                (off < self.members.len() as u64).then_some(off as usize)
            }
            None => self.members.binary_search(label).ok(),
        }
    }

    pub fn contains(&self, label: &StateLabel) -> bool {
        self.index_of(label).is_some()
    }

    pub fn is_subset_of(&self, other: &FiniteSubset) -> bool {
        self.kind == other.kind && self.members.iter().all(|l| other.contains(l))
    }

    pub fn union(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        if self.kind != other.kind {
            return Err(Error::MixedLabelKinds {
                expected: self.kind,
                found: other.kind,
            });
        }
        let (a, b) = (&self.members, &other.members);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(Self::from_sorted(self.kind, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_indexed() {
        let f = FiniteSubset::new([StateLabel::Nat(5), StateLabel::Nat(1), StateLabel::Nat(3)]).unwrap();
        assert_eq!(
            f.members(),
            &[StateLabel::Nat(1), StateLabel::Nat(3), StateLabel::Nat(5)]
        );
        assert_eq!(f.index_of(&StateLabel::Nat(5)), Some(2));
        assert_eq!(f.index_of(&StateLabel::Nat(4)), None);
        assert_eq!(f.index_of(&StateLabel::Int(1)), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(FiniteSubset::new([]), Err(Error::EmptySubset));
        assert_eq!(
            FiniteSubset::new([StateLabel::Nat(1), StateLabel::Nat(1)]),
            Err(Error::DuplicateState(StateLabel::Nat(1)))
        );
        assert!(matches!(
            FiniteSubset::new([StateLabel::Nat(1), StateLabel::Int(1)]),
            Err(Error::MixedLabelKinds { .. })
        ));
    }

    #[test]
    fn int_ball_is_contiguous() {
        let f = FiniteSubset::int_range(-2, 2).unwrap();
        assert_eq!(f.members()[1], StateLabel::Int(-1));
        assert_eq!(f.index_of(&StateLabel::Int(2)), Some(4));
        assert_eq!(f.index_of(&StateLabel::Int(3)), None);
        let shifted = FiniteSubset::int_range(-2, 3).unwrap();
        assert_eq!(shifted.index_of(&StateLabel::Int(3)), Some(5));
    }

    #[test]
    fn union_and_inclusion() {
        let a = FiniteSubset::nat_range(0, 3).unwrap();
        let b = FiniteSubset::new([StateLabel::Nat(2), StateLabel::Nat(7)]).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.len(), 5);
        assert!(a.is_subset_of(&u) && b.is_subset_of(&u));
        assert!(!u.is_subset_of(&a));
        assert_eq!(u.index_of(&StateLabel::Nat(7)), Some(4));
    }
}
