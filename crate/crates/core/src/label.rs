//! State labels and their canonical integer encoding.

use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Which family of labels a network uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKind {
    Nat,
    Int,
    Bits,
}

/// A network state.
///
/// `Bits` holds a bit-vector of at most 64 sites, bit `i` being site `i + 1`.
/// Every label maps bijectively onto a `u64` canonical index, and labels of a
/// single kind order by that index. For `Int` this interleaves as
/// `0, -1, 1, -2, 2, ...`, so the ball `{-n..n}` is a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    Nat(u64),
    Int(i64),
    Bits(u64),
}

impl StateLabel {
    pub fn kind(&self) -> LabelKind {
        match self {
            StateLabel::Nat(_) => LabelKind::Nat,
            StateLabel::Int(_) => LabelKind::Int,
            StateLabel::Bits(_) => LabelKind::Bits,
        }
    }

    pub fn canonical(&self) -> u64 {
        match *self {
            StateLabel::Nat(n) => n,
            StateLabel::Int(z) if z < 0 => 2 * (z.unsigned_abs() - 1) + 1,
            StateLabel::Int(z) => 2 * z as u64,
            StateLabel::Bits(w) => w,
        }
    }

    pub fn from_canonical(kind: LabelKind, index: u64) -> StateLabel {
        match kind {
            LabelKind::Nat => StateLabel::Nat(index),
            LabelKind::Int if index % 2 == 1 => StateLabel::Int(-((index / 2) as i64) - 1),
            LabelKind::Int => StateLabel::Int((index / 2) as i64),
            LabelKind::Bits => StateLabel::Bits(index),
        }
    }

    /// Number of set sites of a `Bits` label (Hamming weight); 0 otherwise.
    pub fn weight(&self) -> u32 {
        match self {
            StateLabel::Bits(w) => w.count_ones(),
            _ => 0,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match *self {
            StateLabel::Nat(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match *self {
            StateLabel::Int(z) => Some(z),
            _ => None,
        }
    }

    pub fn as_bits(&self) -> Option<u64> {
        match *self {
            StateLabel::Bits(w) => Some(w),
            _ => None,
        }
    }
}

impl Ord for StateLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.kind(), self.canonical()).cmp(&(other.kind(), other.canonical()))
    }
}

impl PartialOrd for StateLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateLabel::Nat(n) => write!(f, "{n}"),
            StateLabel::Int(z) => write!(f, "z:{z}"),
            StateLabel::Bits(0) => f.write_str("b:0"),
            StateLabel::Bits(w) => {
                f.write_str("b:")?;
                let len = 64 - w.leading_zeros();
                for i in 0..len {
                    f.write_str(if (w >> i) & 1 == 1 { "1" } else { "0" })?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    /// Parses `17`, `z:-3` or `b:0110` (little-endian: the first digit is site 1).
    /// Trailing zeros of a bit string are dropped; bits beyond 64 must be zero.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadLabel(s.into());
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("z:") {
            return rest.parse::<i64>().map(StateLabel::Int).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("b:") {
            if rest.is_empty() {
                return Err(bad());
            }
            let mut w = 0u64;
            for (i, ch) in rest.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' if i < 64 => w |= 1 << i,
                    '1' => return Err(Error::LabelOverflow),
                    _ => return Err(bad()),
                }
            }
            return Ok(StateLabel::Bits(w));
        }
        s.parse::<u64>().map(StateLabel::Nat).map_err(|_| bad())
    }
}
