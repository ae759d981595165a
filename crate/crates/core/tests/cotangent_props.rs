use openbook_core::cotangent::{
    canonical_symplectic_form, dehn_twist, dehn_twist_map, geodesic_flow, project_to_bundle, DehnTwistProfile, SpherePoint,
};
use openbook_core::forms::{pullback_eval, FdConfig};
use openbook_core::linalg::{dot, norm};
use proptest::prelude::*;

/// A point of `T*S^n` with `|p| = r`, from raw ambient vectors.
fn bundle_point(n: usize, qr: &[f64], pr: &[f64], r: f64) -> Option<SpherePoint> {
    if norm(&qr[..=n]) < 0.1 {
        return None;
    }
    let pt = project_to_bundle(&qr[..=n], &pr[..=n]).ok()?;
    let pn = pt.fiber_norm();
    if pn < 1e-2 {
        return None;
    }
    SpherePoint::new(pt.q().to_vec(), pt.p().iter().map(|v| r * v / pn).collect()).ok()
}

fn raw() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn twist_preserves_d_lambda(n in 1usize..=3, qr in raw(), pr in raw(), r in 0.01..2.0f64) {
        let pt = bundle_point(n, &qr, &pr, r);
        prop_assume!(pt.is_some());
        let pt = pt.unwrap();
        let profile = DehnTwistProfile::new(1.0, 1).unwrap();
        let map = dehn_twist_map(n, profile, FdConfig::default());
        let omega = canonical_symplectic_form(n);
        let x = pt.to_ambient();
        let basis = pt.tangent_basis();
        for i in 0..basis.len() {
            for j in i + 1..basis.len() {
                let pulled = pullback_eval(&map, &omega, &x, &[&basis[i], &basis[j]]).unwrap();
                let direct = omega.eval(&x, &[&basis[i], &basis[j]]);
                prop_assert!((pulled - direct).abs() < 1e-6, "residual {}", (pulled - direct).abs());
            }
        }
    }

    #[test]
    fn twist_is_identity_outside_support(n in 1usize..=3, qr in raw(), pr in raw(), r in 1.0..4.0f64, k in 1u32..=3) {
        let pt = bundle_point(n, &qr, &pr, r);
        prop_assume!(pt.is_some());
        let pt = pt.unwrap();
        let profile = DehnTwistProfile::new(1.0, k).unwrap();
        prop_assert_eq!(dehn_twist(&pt, &profile), pt);
    }

    #[test]
    fn twist_on_zero_section(n in 1usize..=3, qr in raw(), k in 1u32..=3) {
        prop_assume!(norm(&qr[..=n]) > 0.1);
        let pt = project_to_bundle(&qr[..=n], &vec![0.0; n + 1]).unwrap();
        let img = dehn_twist(&pt, &DehnTwistProfile::new(1.0, k).unwrap());
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let expected: Vec<f64> = pt.q().iter().map(|v| sign * v).collect();
        prop_assert_eq!(img.q(), expected.as_slice());
        prop_assert!(img.p().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn geodesic_flow_preserves_constraints(n in 1usize..=3, qr in raw(), pr in raw(), r in 0.01..3.0f64, t in -10.0..10.0f64) {
        let pt = bundle_point(n, &qr, &pr, r);
        prop_assume!(pt.is_some());
        let pt = pt.unwrap();
        let out = geodesic_flow(&pt, t).unwrap();
        prop_assert!((out.fiber_norm() - r).abs() < 1e-9);
        prop_assert!((norm(out.q()) - 1.0).abs() < 1e-9);
        prop_assert!(dot(out.q(), out.p()).abs() < 1e-9);
    }
}
