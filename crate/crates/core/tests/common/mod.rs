#![allow(dead_code)]

use ctmc_trunc_core::{EdgeListNetwork, StateLabel};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

/// A ring `0 → 1 → … → n−1 → 0` plus each other ordered pair with
/// probability `density`; rates log-uniform on `[e^-2, e^2]`.
pub fn random_strongly_connected(rng: &mut ChaCha8Rng, n: u64, density: f64) -> EdgeListNetwork {
    let mut edges = Vec::new();
    let rate = |rng: &mut ChaCha8Rng| (4.0 * uniform(rng) - 2.0).exp();
    for i in 0..n {
        edges.push((StateLabel::Nat(i), StateLabel::Nat((i + 1) % n), rate(rng)));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && j != (i + 1) % n && uniform(rng) < density {
                edges.push((StateLabel::Nat(i), StateLabel::Nat(j), rate(rng)));
            }
        }
    }
    EdgeListNetwork::new("random", edges).unwrap()
}
