use openbook_core::flows::IntegratorConfig;
use openbook_core::linalg::{distance, norm};
use openbook_core::monodromy::{
    admissible_start, page_twist, post_surgery_closed_form, post_surgery_pipeline, recognize_dehn_twist,
};
use openbook_core::cotangent::project_to_bundle;
use openbook_core::weinstein::{theta_page, SurgeryConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 0.1;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_form_lands_on_the_next_page(l in 2usize..=4, seed in any::<u64>()) {
        let start = admissible_start(&mut ChaCha8Rng::seed_from_u64(seed), l, EPS, 0.05);
        let out = post_surgery_closed_form(&start, EPS).unwrap();
        prop_assert!((norm(&out.w) - 1.0).abs() < 1e-12);
        prop_assert!((theta_page(&out) - EPS).abs() < 1e-12);
    }

    #[test]
    fn pipeline_is_the_dehn_twist(l in 2usize..=4, seed in any::<u64>()) {
        let start = admissible_start(&mut ChaCha8Rng::seed_from_u64(seed), l, EPS, 0.05);
        let config = SurgeryConfig { delta: 0.05, ..SurgeryConfig::default() };
        let cfg = IntegratorConfig::new(1e-3, 10.0, 1e-13).unwrap();
        let res = post_surgery_pipeline(&start, &config, &cfg).unwrap();
        prop_assert!(res.deviation < 1e-6, "deviation {}", res.deviation);
        prop_assert!(res.residuals.page_speed < 1e-8);
        let rec = recognize_dehn_twist(&res, EPS).unwrap();
        prop_assert!(rec.residual < 1e-9 && rec.geodesic_residual < 1e-9);
        prop_assert!((rec.cos_g.powi(2) + rec.sin_g.powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_twist_undoes_twist(q in prop::collection::vec(-1.0..1.0f64, 3), p in prop::collection::vec(-1.0..1.0f64, 3)) {
        prop_assume!(norm(&q) > 0.1);
        let pt = project_to_bundle(&q, &p).unwrap();
        let back = page_twist(&page_twist(&pt, EPS, 1).unwrap(), EPS, -1).unwrap();
        prop_assert!(distance(&back.to_ambient(), &pt.to_ambient()) < 1e-12);
    }
}
