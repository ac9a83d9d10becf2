use crate::label::{LabelKind, StateLabel};

/// Errors raised by truncation, evolution and stationary analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("finite subset must contain at least one state")]
    EmptySubset,
    #[error("state {0} appears more than once")]
    DuplicateState(StateLabel),
    #[error("state {0} is not a member of the subset")]
    StateNotInSubset(StateLabel),
    #[error("labels of kind {found:?} cannot be mixed with kind {expected:?}")]
    MixedLabelKinds { expected: LabelKind, found: LabelKind },
    #[error("label does not fit the 64-bit canonical index")]
    LabelOverflow,
    #[error("cannot parse state label `{0}`")]
    BadLabel(alloc::string::String),
    #[error("edge {from} -> {to} has invalid rate {rate}")]
    InvalidRate {
        from: StateLabel,
        to: StateLabel,
        rate: f64,
    },
    #[error("self-loop at state {0}")]
    SelfLoop(StateLabel),
    #[error("window carries zero initial probability mass")]
    ZeroMassWindow,
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("tolerance must lie in (0, 1e-3], got {0}")]
    InvalidTolerance(f64),
    #[error("dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vectors or generators live on different subsets")]
    SubsetMismatch,
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("LU factorization failed after row replacement")]
    SingularBeyondKernel,
    #[error("edge {from} -> {to} has no reverse edge")]
    MissingReverseEdge { from: StateLabel, to: StateLabel },
    #[error("subnetwork is not strongly connected")]
    NotConnected,
    #[error("horizon adds no states beyond the window")]
    EmptyRemainder,
    #[error("generators come from different networks")]
    MixedNetworks,
    #[error("operation requires a {expected:?} generator, got {found:?}")]
    SchemeMismatch {
        expected: crate::generator::Scheme,
        found: crate::generator::Scheme,
    },
    #[error("generator invariant violated in column {column}: {reason}")]
    GeneratorInvariant { column: usize, reason: &'static str },
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("network does not provide {0:?} windows")]
    UnsupportedWindow(crate::network::WindowKind),
    #[error("start state {0} has no outgoing rate")]
    NoExitRate(StateLabel),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
