use nalgebra::DMatrix;
use openbook_core::forms::{exterior_derivative, pullback, pullback_eval, FdConfig, KForm, SmoothMap};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

/// A 1-form on R³ with polynomial and trigonometric coefficients.
fn one_form(c: [f64; 6]) -> KForm {
    KForm::one_form(3, move |x| {
        vec![
            c[0] * x[1] * x[2] + c[1] * x[0] * x[0],
            c[2] * x[0].sin() + c[3] * x[2],
            c[4] * x[0] * x[1] + c[5] * x[1].cos(),
        ]
    })
}

/// `x ↦ (sin x₀ · x₁, e^{x₁/2} + x₀³ + a x₂, x₂ + b x₀ x₁)` with its Jacobian.
fn smooth_map(a: f64, b: f64) -> SmoothMap {
    SmoothMap::analytic(
        3,
        3,
        move |x| vec![x[0].sin() * x[1], (0.5 * x[1]).exp() + x[0].powi(3) + a * x[2], x[2] + b * x[0] * x[1]],
        move |x| {
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    x[0].cos() * x[1],
                    x[0].sin(),
                    0.0,
                    3.0 * x[0] * x[0],
                    0.5 * (0.5 * x[1]).exp(),
                    a,
                    b * x[1],
                    b * x[0],
                    1.0,
                ],
            )
        },
    )
}

fn linear_map(m: Vec<f64>) -> SmoothMap {
    let mat = DMatrix::from_row_slice(3, 3, &m);
    let jac = mat.clone();
    SmoothMap::analytic(
        3,
        3,
        move |x| (&mat * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec(),
        move |_| jac.clone(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_two_form_is_antisymmetric(a in prop::collection::vec(-2.0..2.0f64, 16), u in vec3(), v in vec3(), pt in vec3()) {
        let m = DMatrix::from_row_slice(4, 4, &a);
        let omega = KForm::constant_two_form(&m - m.transpose());
        let (u4, v4) = ([u.clone(), vec![0.3]].concat(), [v.clone(), vec![-0.7]].concat());
        let p4 = [pt, vec![0.0]].concat();
        let s = omega.eval(&p4, &[&u4, &v4]) + omega.eval(&p4, &[&v4, &u4]);
        prop_assert!(s.abs() < 1e-10);
    }

    #[test]
    fn fd_two_form_is_antisymmetric(c in prop::array::uniform6(-2.0..2.0f64), pt in vec3(), u in vec3(), v in vec3()) {
        let d = one_form(c).d(FdConfig::default());
        let s = d.eval(&pt, &[&u, &v]) + d.eval(&pt, &[&v, &u]);
        prop_assert!(s.abs() < 1e-6);
    }

    #[test]
    fn d_squared_vanishes(c in prop::array::uniform6(-2.0..2.0f64), pt in vec3()) {
        let cfg = FdConfig::default();
        let d = one_form(c).d(cfg);
        let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let dd = exterior_derivative(&d, &pt, &[&e[0], &e[1], &e[2]], cfg).unwrap();
        prop_assert!(dd.abs() < 1e-5, "d² = {dd}");
    }

    #[test]
    fn pullback_is_functorial(a in -1.0..1.0f64, b in -1.0..1.0f64, m in prop::collection::vec(-1.0..1.0f64, 9),
                              c in prop::array::uniform6(-2.0..2.0f64), pt in vec3(), u in vec3(), v in vec3()) {
        let (f, g) = (smooth_map(a, b), linear_map(m));
        let composed = f.then(&g);
        let lambda = one_form(c);
        let omega = KForm::constant_two_form(DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -0.5, -1.0, 0.0, 2.0, 0.5, -2.0, 0.0]));
        let once = pullback_eval(&composed, &lambda, &pt, &[&u]).unwrap();
        let twice = pullback_eval(&f, &pullback(&g, &lambda), &pt, &[&u]).unwrap();
        prop_assert!((once - twice).abs() < 1e-8);
        let once = pullback_eval(&composed, &omega, &pt, &[&u, &v]).unwrap();
        let twice = pullback_eval(&f, &pullback(&g, &omega), &pt, &[&u, &v]).unwrap();
        prop_assert!((once - twice).abs() < 1e-8);
    }

    #[test]
    fn fd_jacobian_converges_at_order_two(a in -1.0..1.0f64, b in -1.0..1.0f64, pt in vec3()) {
        let map = smooth_map(a, b);
        let exact = map.jacobian(&pt);
        let err = |h: f64| (map.jacobian_fd(&pt, FdConfig::with_step(h)) - &exact).amax();
        let ratio = err(2e-2) / err(1e-2);
        prop_assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}
