use outspace::word::reduce;
use outspace::{Automorphism, Basis, Letter, Word};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn letters(rank: usize, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
    let r = rank as Letter;
    prop::collection::vec((1..=r, any::<bool>()).prop_map(|(x, s)| if s { x } else { -x }), 0..=max_len)
}

fn automorphism(rank: usize) -> impl Strategy<Value = Automorphism> {
    (any::<u64>(), 0usize..6).prop_map(move |(seed, steps)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        outspace::random::random_automorphism(Basis::new(rank).unwrap(), steps, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reduce_is_idempotent(raw in letters(3, 24)) {
        let once = reduce(&raw);
        prop_assert_eq!(reduce(&once), once.clone());
        prop_assert!(once.windows(2).all(|p| p[0] != -p[1]));
    }

    #[test]
    fn group_laws(u in letters(2, 10), v in letters(2, 10), w in letters(2, 10)) {
        let (u, v, w) = (Word::from_letters(&u), Word::from_letters(&v), Word::from_letters(&w));
        prop_assert_eq!(u.mul(&v).mul(&w), u.mul(&v.mul(&w)));
        prop_assert!(u.mul(&u.inverse()).is_empty());
    }

    #[test]
    fn conjugacy_length_is_a_class_function(u in letters(2, 12), w in letters(2, 8)) {
        let u = Word::from_letters(&u);
        prop_assume!(!u.is_empty());
        let w = Word::from_letters(&w);
        let c = u.conjugacy_length().unwrap();
        prop_assert!(c <= u.len());
        prop_assert_eq!(w.conjugate(&u).conjugacy_length().unwrap(), c);
    }

    #[test]
    fn automorphisms_are_homomorphisms(phi in automorphism(3), u in letters(3, 8), v in letters(3, 8)) {
        let (u, v) = (Word::from_letters(&u), Word::from_letters(&v));
        prop_assert_eq!(phi.apply(&u.mul(&v)), phi.apply(&u).mul(&phi.apply(&v)));
    }

    #[test]
    fn composition_and_inverse(phi in automorphism(2), psi in automorphism(2), u in letters(2, 8)) {
        let u = Word::from_letters(&u);
        prop_assert_eq!(phi.compose(&psi).apply(&u), phi.apply(&psi.apply(&u)));
        let inv = phi.invert().unwrap();
        prop_assert!(phi.compose(&inv).is_identity());
        prop_assert!(inv.compose(&phi).is_identity());
    }

    #[test]
    fn abelianization_is_multiplicative(phi in automorphism(3), psi in automorphism(3)) {
        prop_assert_eq!(phi.compose(&psi).abelianize(), phi.abelianize().mul(&psi.abelianize()));
        prop_assert!(phi.abelianize().is_unimodular());
    }

    #[test]
    fn out_equality_recovers_inner_twists(phi in automorphism(2), w in letters(2, 5)) {
        let b = phi.basis();
        let w = Word::from_letters(&w);
        let twisted = Automorphism::inner(b, &w).compose(&phi);
        prop_assert!(phi.out_equal(&phi).unwrap().is_some_and(|x| x.is_empty()));
        let found = phi.out_equal(&twisted).unwrap().unwrap();
        prop_assert_eq!(Automorphism::inner(b, &found).compose(&phi), twisted.clone());
        prop_assert!(twisted.out_equal(&phi).unwrap().is_some());
    }
}
