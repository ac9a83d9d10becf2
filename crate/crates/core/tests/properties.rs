mod common;

use ctmc_trunc_core::evolution::dense_expm_oracle;
use ctmc_trunc_core::generator::{truncate_condense, truncate_sharp, truncate_subnetwork, Scheme, SparseGenerator};
use ctmc_trunc_core::presets::{ChainN0, ChainZ, Hypercube, RateSequence, Reshuffle, SiteExponent};
use ctmc_trunc_core::recurrence::{chunks, return_chunk, simulate_return, ReturnAccumulator};
use ctmc_trunc_core::stationary::{in_tree_oracle, stationary_kernel};
use ctmc_trunc_core::{evolve, LabelKind, Network, ProbVec, StateLabel, WindowKind};
use proptest::prelude::*;

fn network(seed: u64, n: u64) -> ctmc_trunc_core::EdgeListNetwork {
    let mut rng = common::rng(seed);
    common::random_strongly_connected(&mut rng, n, 0.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn int_labels_round_trip(z in any::<i64>()) {
        let l = StateLabel::Int(z);
        prop_assert_eq!(StateLabel::from_canonical(LabelKind::Int, l.canonical()), l);
        prop_assert_eq!(l.to_string().parse::<StateLabel>().unwrap(), l);
    }

    #[test]
    fn bits_and_nat_labels_round_trip(w in any::<u64>()) {
        for l in [StateLabel::Nat(w), StateLabel::Bits(w)] {
            prop_assert_eq!(StateLabel::from_canonical(l.kind(), l.canonical()), l);
            prop_assert_eq!(l.to_string().parse::<StateLabel>().unwrap(), l);
        }
    }

    #[test]
    fn label_order_follows_canonical(a in any::<i64>(), b in any::<i64>()) {
        let (x, y) = (StateLabel::Int(a), StateLabel::Int(b));
        prop_assert_eq!(x.cmp(&y), x.canonical().cmp(&y.canonical()));
    }

    #[test]
    fn subnetwork_generators_are_conservative(seed in any::<u64>(), n in 2u64..16) {
        let net = network(seed, n);
        let g = truncate_subnetwork(&net, &net.all_states());
        g.validate().unwrap();
        let norms = g.norms();
        prop_assert!(norms.op1 <= norms.op11);
        prop_assert!(norms.max_exit_rate <= norms.op1);
        for j in 0..g.dim() {
            let s: f64 = g.column(j).map(|(_, v)| v).sum();
            prop_assert!(s.abs() <= 1e-12 * (1.0 + norms.op1));
        }
        let rebuilt = SparseGenerator::from_triplets(g.subset().clone(), Scheme::Subnetwork, "random", g.triplets().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(rebuilt, g);
    }

    #[test]
    fn evolve_preserves_probability(seed in any::<u64>(), n in 2u64..14, t in 0.0f64..20.0) {
        let net = network(seed, n);
        let f = net.all_states();
        let g = truncate_subnetwork(&net, &f);
        let p0 = ProbVec::point_mass(f, &StateLabel::Nat(seed % n)).unwrap();
        let p = evolve(&g, &p0, t, 1e-12).unwrap().result;
        prop_assert!((p.mass() - 1.0).abs() <= 1e-12);
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
        let oracle = dense_expm_oracle(&g, &p0, t).unwrap();
        prop_assert!(p.l1_distance(&oracle).unwrap() <= 1e-9);
    }

    #[test]
    fn positive_on_irreducible_windows(seed in any::<u64>(), n in 2u64..20) {
        let net = network(seed, n);
        let f = net.all_states();
        let g = truncate_subnetwork(&net, &f);
        let p0 = ProbVec::point_mass(f, &StateLabel::Nat(0)).unwrap();
        let p = evolve(&g, &p0, 1.0, 1e-12).unwrap().result;
        prop_assert!(p.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn sharp_cutoff_only_loses_mass(n in 3u64..30, t in 0.1f64..50.0) {
        let net = ChainN0::new(0.45, RateSequence::Constant(1.0)).unwrap();
        let f = net.window(WindowKind::Prefixes, n).unwrap();
        let g = truncate_sharp(&net, &f);
        let p0 = ProbVec::point_mass(f, &StateLabel::Nat(0)).unwrap();
        let p = evolve(&g, &p0, t, 1e-12).unwrap().result;
        prop_assert!(p.mass() <= 1.0 + 1e-12);
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn condensed_generators_conserve_mass(n in 2u64..15, extra in 1u64..10, t in 0.1f64..10.0) {
        let net = ChainZ::new(0.4, 0.3, RateSequence::Geometric(0.9), RateSequence::Constant(1.0)).unwrap();
        let f = net.window(WindowKind::Balls, n).unwrap();
        let h = net.window(WindowKind::Balls, n + extra).unwrap();
        let g = truncate_condense(&net, &f, &h).unwrap();
        g.validate().unwrap();
        let mut values = vec![0.0; f.len() + 1];
        values[0] = 1.0;
        let p0 = ProbVec::with_remainder(f, values).unwrap();
        let p = evolve(&g, &p0, t, 1e-12).unwrap().result;
        prop_assert!((p.mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kernel_matches_in_tree_oracle(seed in any::<u64>(), n in 2u64..8) {
        let net = network(seed, n);
        let g = truncate_subnetwork(&net, &net.all_states());
        let k = stationary_kernel(&g).unwrap();
        let o = in_tree_oracle(&g).unwrap();
        prop_assert_eq!(k.kernel_dim, 1);
        prop_assert!(k.residual <= 1e-12);
        prop_assert!(k.vector.l1_distance(&o.vector).unwrap() <= 1e-10);
    }

    #[test]
    fn l1_distance_is_a_metric(seed in any::<u64>(), n in 2u64..10, t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let net = network(seed, n);
        let f = net.all_states();
        let g = truncate_subnetwork(&net, &f);
        let p0 = ProbVec::point_mass(f, &StateLabel::Nat(0)).unwrap();
        let a = evolve(&g, &p0, t1, 1e-12).unwrap().result;
        let b = evolve(&g, &p0, t2, 1e-12).unwrap().result;
        let ab = a.l1_distance(&b).unwrap();
        prop_assert_eq!(ab, b.l1_distance(&a).unwrap());
        prop_assert!(ab <= a.l1_distance(&p0).unwrap() + p0.l1_distance(&b).unwrap() + 1e-15);
        prop_assert!(ab <= 2.0 + 1e-12);
    }

    #[test]
    fn preset_windows_are_nested(n in 0u64..12) {
        let chain = ChainN0::new(0.3, RateSequence::Geometric(0.8)).unwrap();
        let reshuffle = Reshuffle::new(0.8, 1.0).unwrap();
        let cube = Hypercube::new(16, 0.5, SiteExponent::Linear).unwrap();
        for (small, large) in [
            (chain.window(WindowKind::Prefixes, n).unwrap(), chain.window(WindowKind::Prefixes, n + 1).unwrap()),
            (reshuffle.window(WindowKind::Balls, n).unwrap(), reshuffle.window(WindowKind::Balls, n + 1).unwrap()),
            (reshuffle.window(WindowKind::ShiftedBalls, n).unwrap(), reshuffle.window(WindowKind::ShiftedBalls, n + 1).unwrap()),
            (cube.window(WindowKind::Balls, n).unwrap(), cube.window(WindowKind::Balls, n + 1).unwrap()),
        ] {
            prop_assert!(small.is_subset_of(&large));
            prop_assert!(small.len() < large.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn chunked_simulation_is_schedule_independent(seed in any::<u64>(), n in 1u64..3000) {
        let net = network(seed, 4);
        let start = StateLabel::Nat(0);
        let serial = simulate_return(&net, start, 50.0, n, seed).unwrap();
        // Chunks computed out of order, merged in order.
        let mut parts: Vec<(usize, ReturnAccumulator)> = chunks(n)
            .enumerate()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|(i, r)| (i, return_chunk(&net, start, 50.0, seed, r, |_| {})))
            .collect();
        parts.sort_by_key(|(i, _)| *i);
        let mut total = ReturnAccumulator::default();
        for (_, p) in &parts {
            total.merge(p);
        }
        prop_assert_eq!(total.finish(start, 50.0), serial);
    }
}
