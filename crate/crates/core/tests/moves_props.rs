use openbook_core::moves::{
    destabilize, equivalent_up_to_moves, random_desc, random_move, stabilize, Equivalence, OpenBookDesc,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn moves_keep_labels_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = random_desc(&mut rng, 3, 3, 5);
        d.validate().unwrap();
        for _ in 0..8 {
            let (next, name) = random_move(&d, &mut rng);
            prop_assert!(next.validate().is_ok(), "{name} broke {next}");
            d = next;
        }
    }

    #[test]
    fn destabilize_undoes_stabilize(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_desc(&mut rng, 2, 3, 5);
        for disk in &d.page.disks {
            let s = stabilize(&d, &disk.label).unwrap();
            prop_assert_eq!(destabilize(&s).unwrap(), d.clone());
        }
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_desc(&mut rng, 3, 2, 4);
        prop_assert!(equivalent_up_to_moves(&d, &d, 0).is_equivalent());
        let mut e = d.clone();
        for _ in 0..rng.gen_range(1..=6) {
            e = random_move(&e, &mut rng).0;
        }
        let forward = equivalent_up_to_moves(&d, &e, 6);
        prop_assert!(forward.is_equivalent());
        prop_assert_eq!(equivalent_up_to_moves(&e, &d, 6), forward);
    }

    #[test]
    fn unknown_when_exponent_sums_differ(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_desc(&mut rng, 2, 1, 3);
        let mut e = d.clone();
        let s = e.page.spheres[0].label.clone();
        e.word.letters.push(openbook_core::moves::Letter::pos(s));
        prop_assert_eq!(equivalent_up_to_moves(&d, &e, 4), Equivalence::Unknown);
    }

    #[test]
    fn text_format_roundtrips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = random_desc(&mut rng, 3, 2, 6);
        for _ in 0..3 {
            d = random_move(&d, &mut rng).0;
        }
        let text = d.to_string();
        prop_assert_eq!(text.parse::<OpenBookDesc>().unwrap(), d);
    }

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_desc(&mut rng, 3, 2, 6).canonical();
        prop_assert_eq!(d.canonical(), d);
    }
}
