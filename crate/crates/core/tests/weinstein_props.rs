use openbook_core::cotangent::project_to_bundle;
use openbook_core::forms::pullback_eval;
use openbook_core::linalg::{dot, norm};
use openbook_core::weinstein::{
    alpha_form, lie_derivative_f, limit_transfer_to_s1, neighborhood_contact_form, phi_c_map, psi_w_map, sample_s1,
    theta_page, HandleProfile, ModelPoint, ModelShape, NeighborhoodPoint,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SHAPES: [(usize, usize); 3] = [(2, 1), (3, 1), (3, 2)];

fn raw(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, len)
}

fn neighborhood_point(shape: ModelShape, z: f64, c: &[f64]) -> Option<NeighborhoodPoint> {
    let l = shape.zw_len();
    let m = shape.m();
    if norm(&c[..l]) < 0.1 {
        return None;
    }
    let qp = project_to_bundle(&c[..l], &c[l..2 * l]).ok()?;
    NeighborhoodPoint::new(z, qp, c[2 * l..2 * l + m].to_vec(), c[2 * l + m..2 * l + 2 * m].to_vec()).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn psi_w_is_strict(which in 0usize..3, z in -1.0..1.0f64, c in raw(12)) {
        let shape = ModelShape::new(SHAPES[which].0, SHAPES[which].1).unwrap();
        let pt = neighborhood_point(shape, z, &c);
        prop_assume!(pt.is_some());
        let pt = pt.unwrap();
        let (map, alpha, target) = (psi_w_map(shape), alpha_form(shape), neighborhood_contact_form(shape));
        let x = pt.to_coords();
        for v in pt.tangent_basis() {
            let pulled = pullback_eval(&map, &alpha, &x, &[&v]).unwrap();
            prop_assert!((pulled - target.eval(&x, &[&v])).abs() < 1e-8);
        }
    }

    #[test]
    fn phi_c_is_conformal(which in 0usize..3, cc in 1.0..10.0f64, c in raw(13), v in raw(13)) {
        let shape = ModelShape::new(SHAPES[which].0, SHAPES[which].1).unwrap();
        let dim = shape.neighborhood_dim();
        let (x, v) = (&c[..dim], &v[..dim]);
        let form = neighborhood_contact_form(shape);
        let pulled = pullback_eval(&phi_c_map(shape, cc).unwrap(), &form, x, &[v]).unwrap();
        let orig = form.eval(x, &[v]);
        prop_assert!((pulled - cc * orig).abs() < 1e-10 * orig.abs().max(1.0));
    }

    #[test]
    fn liouville_field_is_transverse_to_s1(which in 0usize..3, wide in any::<bool>(), seed in any::<u64>()) {
        let shape = ModelShape::new(SHAPES[which].0, SHAPES[which].1).unwrap();
        let profile = HandleProfile::new(if wide { 0.1 } else { 0.05 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let p = sample_s1(shape, &profile, &mut rng);
            prop_assert!(lie_derivative_f(&p, &profile) > 0.0);
        }
    }

    #[test]
    fn limit_transfer_preserves_theta(z in raw(4), w in raw(4), x in raw(2), y in raw(2), l in 2usize..=4) {
        prop_assume!(norm(&w[..l]) > 0.1 && norm(&z[..l]) > 1e-3);
        let wn = norm(&w[..l]);
        let pt = ModelPoint { x: x.clone(), y: y.clone(), z: z[..l].to_vec(), w: w[..l].iter().map(|v| v / wn).collect() };
        let out = limit_transfer_to_s1(&pt).unwrap();
        prop_assert!((theta_page(&out) - theta_page(&pt)).abs() < 1e-15);
    }

    #[test]
    fn isotropic_sphere_is_isotropic(which in 0usize..3, w in raw(3), v in raw(3)) {
        let shape = ModelShape::new(SHAPES[which].0, SHAPES[which].1).unwrap();
        let l = shape.zw_len();
        prop_assume!(norm(&w[..l]) > 0.1);
        let mut pt = ModelPoint::zeros(shape);
        let wn = norm(&w[..l]);
        pt.w = w[..l].iter().map(|a| a / wn).collect();
        let c = dot(&v[..l], &pt.w);
        let mut tangent = ModelPoint::zeros(shape);
        tangent.w = v[..l].iter().zip(&pt.w).map(|(a, b)| a - c * b).collect();
        let value = alpha_form(shape).eval(&pt.to_ambient(), &[&tangent.to_ambient()]);
        prop_assert!(value.abs() < 1e-15);
    }
}
