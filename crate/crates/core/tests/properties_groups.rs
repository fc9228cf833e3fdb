use outspace::bundle::{bundle_ball, mj_sardar_sampler, BundleSpec, SamplerConfig};
use outspace::factors::{conjugate_into, cover_core, stallings_graph, FactorClass};
use outspace::flaring::{cayley_ball, out_order, stabilizer_census, SubgroupSpec};
use outspace::random::{random_automorphism, random_marked_graph};
use outspace::rational::q;
use outspace::word::random_word;
use outspace::{Automorphism, Basis, CyclicWord, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn words(rng: &mut ChaCha8Rng, count: usize, max_len: usize) -> Vec<Word> {
    (0..count).map(|_| {
        let len = rng.gen_range(1..=max_len);
        random_word(2, len, rng)
    }).collect()
}

fn fixed_a() -> SubgroupSpec {
    let b = Basis::new(2).unwrap();
    SubgroupSpec::new(b, vec![("phi".into(), Automorphism::from_texts(b, &["a", "ba"]).unwrap())]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn folded_graphs_accept_the_subgroup(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = words(&mut rng, 2, 5);
        let g = stallings_graph(&gens).unwrap();
        for x in &gens {
            prop_assert!(g.accepts(x));
            prop_assert!(g.accepts(&x.inverse()));
        }
        prop_assert!(g.accepts(&gens[0].mul(&gens[1].inverse()).mul(&gens[0])));
    }

    #[test]
    fn conjugacy_into_is_conjugation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = words(&mut rng, 2, 4);
        let Ok(a) = FactorClass::new(&gens) else { return Ok(()) };
        let w = random_word(2, 3, &mut rng);
        let moved: Vec<Word> = gens.iter().map(|x| w.conjugate(x)).collect();
        let b = FactorClass::new(&moved).unwrap();
        prop_assert_eq!(a.key(), b.key());
        prop_assert!(conjugate_into(&a, &b) && conjugate_into(&b, &a));
        let sub = FactorClass::new(&[gens[0].clone()]).unwrap();
        prop_assert!(conjugate_into(&sub, &b));
    }

    #[test]
    fn factor_classes_follow_automorphisms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Basis::new(2).unwrap();
        let (phi, psi) = (random_automorphism(b, 3, &mut rng), random_automorphism(b, 3, &mut rng));
        let Ok(f) = FactorClass::new(&words(&mut rng, 1, 4)) else { return Ok(()) };
        prop_assert_eq!(f.apply(&phi).apply(&psi), f.apply(&psi.compose(&phi)));
        prop_assert_eq!(f.apply(&Automorphism::inner(b, &random_word(2, 3, &mut rng))), f);
    }

    #[test]
    fn cover_cores_immerse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_marked_graph(Basis::new(2).unwrap(), 2, &mut rng);
        let sub = vec![random_word(2, rng.gen_range(1..=5), &mut rng)];
        let core = cover_core(&sub, &g).unwrap();
        prop_assert_eq!(core.rank(), 1);
        let lengths = g.graph().lengths();
        for (e, h) in core.immersion.iter().enumerate() {
            prop_assert_eq!(&core.graph.lengths()[e], &lengths[h.edge()]);
        }
        prop_assert_eq!(core.volume(), g.loop_length(&CyclicWord::new(&sub[0]).unwrap()).unwrap());
    }

    #[test]
    fn out_order_ignores_inner_twists(k in 0usize..4, w in "[abAB]{0,4}") {
        let b = Basis::new(2).unwrap();
        let rot = Automorphism::from_texts(b, &["b", "A"]).unwrap().pow(k as i64 + 1).unwrap();
        let twisted = Automorphism::inner(b, &Word::parse(&b, &w).unwrap()).compose(&rot);
        prop_assert_eq!(out_order(&twisted, 12).unwrap(), out_order(&rot, 12).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stabilizer_counts_grow_with_radius(r in 1usize..4, alpha in "[ab]{1,3}") {
        let spec = fixed_a();
        let b = Basis::new(2).unwrap();
        let alpha = CyclicWord::parse(&b, &alpha).unwrap();
        let small = cayley_ball(&spec, r, 10_000).unwrap();
        let large = cayley_ball(&spec, r + 1, 10_000).unwrap();
        prop_assert!(stabilizer_census(&small, &alpha) <= stabilizer_census(&large, &alpha));
    }

    #[test]
    fn fiber_points_round_trip(n in 1usize..3) {
        let spec = BundleSpec::new(fixed_a(), 3).unwrap();
        let ball = bundle_ball(&spec, 3, 50_000).unwrap();
        for (i, g) in ball.elements.iter().enumerate().step_by(n) {
            let p = spec.fiber_point(g).unwrap();
            prop_assert_eq!(&spec.to_element(&p), g);
            prop_assert_eq!(&p, &ball.points[i]);
        }
        prop_assert!(spec.check_conjugation().unwrap());
    }

    #[test]
    fn sampler_is_deterministic(seed in any::<u64>()) {
        let spec = BundleSpec::new(fixed_a(), 6).unwrap();
        let cfg = SamplerConfig { k: 1, n: 2, m: 1, samples: 6, seed, lambda_target: q(2, 1), central: vec![] };
        let a = serde_json::to_string(&mj_sardar_sampler(&spec, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&mj_sardar_sampler(&spec, &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
