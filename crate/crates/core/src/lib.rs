//! Finite-window analysis of continuous-time Markov chains on countable
//! state spaces.
//!
//! A [`Network`] is an out-edge oracle over [`StateLabel`]s. Finite windows
//! ([`FiniteSubset`]) cut it down to a [`SparseGenerator`], which can be
//! evolved, solved for stationary vectors and compared across window sizes.
//! The Monte Carlo routines in [`recurrence`] run on the untruncated network.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]
// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod evolution;
pub mod generator;
pub mod graph;
pub mod label;
pub mod limits;
pub mod linalg;
pub mod network;
pub mod presets;
pub mod recurrence;
pub mod stationary;
pub mod subset;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolveReport, ProbVec};
pub use generator::{
    generator_distance, truncate_condense, truncate_sharp, truncate_subnetwork, GeneratorNorms, Scheme, SparseGenerator,
};
pub use label::{LabelKind, StateLabel};
pub use network::{EdgeListNetwork, Network, WindowKind};
pub use subset::FiniteSubset;
