use outspace::fold::{standard_geodesic, StepPolicy};
use outspace::lipschitz::{distance_ratio, lipschitz_distance, marked_isometry};
use outspace::marked::MarkedGraph;
use outspace::random::{random_automorphism, random_marked_graph};
use outspace::word::random_cyclic_word;
use outspace::{Basis, Q};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graphs(seed: u64, rank: usize, count: usize) -> (ChaCha8Rng, Vec<MarkedGraph>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = Basis::new(rank).unwrap();
    let gs = (0..count).map(|_| {
        let twist = rng.gen_range(0..=3);
        random_marked_graph(basis, twist, &mut rng)
    }).collect();
    (rng, gs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ratios_satisfy_triangle_inequality(seed in any::<u64>(), rank in 2usize..=3) {
        let (_, gs) = graphs(seed, rank, 3);
        let d = |i: usize, j: usize| distance_ratio(&gs[i], &gs[j]).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) * d(1, 2));
        prop_assert!(d(0, 1) >= Q::from_integer(1.into()));
    }

    #[test]
    fn zero_distance_means_isometric(seed in any::<u64>()) {
        let (_, gs) = graphs(seed, 2, 2);
        let one = Q::from_integer(1.into());
        prop_assert_eq!(distance_ratio(&gs[0], &gs[0]).unwrap(), one.clone());
        prop_assert!(marked_isometry(&gs[0], &gs[0]).is_some());
        let zero = distance_ratio(&gs[0], &gs[1]).unwrap() == one;
        prop_assert_eq!(zero, marked_isometry(&gs[0], &gs[1]).is_some());
    }

    #[test]
    fn the_action_is_isometric(seed in any::<u64>(), rank in 2usize..=3) {
        let (mut rng, gs) = graphs(seed, rank, 2);
        let phi = random_automorphism(gs[0].basis(), 4, &mut rng);
        prop_assert_eq!(
            distance_ratio(&gs[0].act(&phi), &gs[1].act(&phi)).unwrap(),
            distance_ratio(&gs[0], &gs[1]).unwrap()
        );
        let alpha = random_cyclic_word(rank, 6, &mut rng);
        let inv = phi.invert().unwrap();
        prop_assert_eq!(
            gs[0].act(&phi).loop_length(&alpha).unwrap(),
            gs[0].loop_length(&inv.apply_cyclic(&alpha)).unwrap()
        );
    }

    #[test]
    fn witness_attains_the_ratio(seed in any::<u64>(), rank in 2usize..=3) {
        let (mut rng, gs) = graphs(seed, rank, 2);
        let d = lipschitz_distance(&gs[0], &gs[1]).unwrap();
        let ratio = |a: &outspace::CyclicWord| gs[1].loop_length(a).unwrap() / gs[0].loop_length(a).unwrap();
        prop_assert_eq!(ratio(&d.witness), d.ratio.ratio.clone());
        for _ in 0..20 {
            let len = rng.gen_range(1..=8);
            let alpha = random_cyclic_word(rank, len, &mut rng);
            prop_assert!(ratio(&alpha) <= d.ratio.ratio);
        }
    }

    #[test]
    fn standard_geodesics_add_up(seed in any::<u64>()) {
        let (_, gs) = graphs(seed, 2, 2);
        let sg = standard_geodesic(&gs[0], &gs[1], &StepPolicy::default()).unwrap();
        let f = &sg.folding;
        prop_assert!(marked_isometry(f.end(), &gs[1].normalized()).is_some());
        let total = &sg.rescaling.ratio * &f.span(0, f.len() - 1).ratio;
        prop_assert_eq!(total, distance_ratio(&gs[0], &gs[1]).unwrap());
        for i in 1..f.len() {
            prop_assert_eq!(distance_ratio(f.graph(i - 1), f.graph(i)).unwrap(), f.span(i - 1, i).ratio);
        }
    }
}
