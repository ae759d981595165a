use openbook_core::forms::{contact_volume, pullback_eval, FdConfig};
use openbook_core::linalg::{basis_vector, distance, norm};
use openbook_core::openbook::{
    binding_form, binding_form_eval, binding_frame, collar_form, giroux_correction, giroux_test_maps, glue_map,
    mapping_torus_form, BindingProfile, ExactSymplecticDomain, GirouxConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit(raw: &[f64]) -> Option<Vec<f64>> {
    let n = norm(raw);
    (n > 0.1).then(|| raw.iter().map(|v| v / n).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn corrected_map_is_psi_outside_support(which in 0usize..3, seed in any::<u64>()) {
        let (_, domain, psi) = giroux_test_maps().swap_remove(which);
        let g = giroux_correction(&domain, &psi, &GirouxConfig::default(), &[psi.support_box.center()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tested = 0;
        while tested < 10 {
            let x = domain.sample_box().sample(&mut rng);
            if psi.support_box.contains(&x) {
                continue;
            }
            prop_assert!(distance(&g.psi_hat(&x).unwrap(), &psi.map.eval(&x)) < 1e-8);
            tested += 1;
        }
    }

    #[test]
    fn corrected_map_preserves_d_lambda(which in 0usize..3, seed in any::<u64>()) {
        let (_, domain, psi) = giroux_test_maps().swap_remove(which);
        let g = giroux_correction(&domain, &psi, &GirouxConfig::default(), &[psi.support_box.center()]).unwrap();
        let x = psi.support_box.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(g.symplectic_residual(&x) < 1e-5);
    }

    #[test]
    fn binding_and_collar_forms_agree_on_gluing_annulus(wide in any::<bool>(), raw in prop::collection::vec(-1.0..1.0f64, 4),
                                                        t in 0.0..1.0f64, phi in 0.0..std::f64::consts::TAU) {
        let bd = if wide { 4 } else { 2 };
        let x = unit(&raw[..bd]);
        prop_assume!(x.is_some());
        let x = x.unwrap();
        let profile = BindingProfile::default();
        let r = profile.matching_radius() + t * (0.999 - profile.matching_radius());
        let (glue, collar) = (glue_map(bd), collar_form(bd));
        let mut c = x.clone();
        c.extend([r, phi]);
        for i in 0..bd + 2 {
            let v = basis_vector(bd + 2, i);
            let a = pullback_eval(&glue, &collar, &c, &[&v]).unwrap();
            let b = binding_form_eval(&profile, &x, r, &v).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn binding_form_is_contact(wide in any::<bool>(), raw in prop::collection::vec(-1.0..1.0f64, 4),
                               r in 0.005..0.995f64, phi in 0.0..std::f64::consts::TAU) {
        let bd = if wide { 4 } else { 2 };
        let x = unit(&raw[..bd]);
        prop_assume!(x.is_some());
        let mut pt = x.unwrap();
        pt.extend([r * phi.cos(), r * phi.sin()]);
        let beta = binding_form(BindingProfile::default(), bd);
        let frame = binding_frame(&pt, bd);
        prop_assert!(contact_volume(&beta, &pt, &frame, FdConfig::default()).unwrap() > 0.0);
    }

    #[test]
    fn mapping_torus_form_is_contact(n in 1usize..=2, seed in any::<u64>(), phi in 0.0..std::f64::consts::TAU) {
        let d = ExactSymplecticDomain::standard_disk(n);
        let mut x = d.sample_box().sample(&mut ChaCha8Rng::seed_from_u64(seed));
        x.push(phi);
        let frame: Vec<Vec<f64>> = (0..2 * n + 1).map(|i| basis_vector(2 * n + 1, i)).collect();
        prop_assert!(contact_volume(&mapping_torus_form(&d), &x, &frame, FdConfig::default()).unwrap() > 0.0);
    }
}
