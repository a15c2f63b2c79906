use nalgebra::DMatrix;
use proptest::prelude::*;

use ptube::geometry::{
    evaluate_metric, integrate_frame, CurvatureProfile, PlaneRotation, Profile, TwistProfile,
};

fn bump(center: f64, width: f64, amplitude: f64) -> Profile {
    Profile::bump(center, width, amplitude)
}

/// Curvature and twist in three dimensions with `a‖κ‖∞ < 1` for `|t| ≤ 0.5`.
fn tube_3d() -> impl Strategy<Value = (CurvatureProfile, TwistProfile)> {
    (-1.0..1.0f64, -1.0..1.0f64, -2.0..2.0f64, 0.5..3.0f64).prop_map(|(k1, k2, rate, width)| {
        let kappa =
            CurvatureProfile::new(vec![bump(0.0, width, k1), bump(0.5, width, k2)]).unwrap();
        (
            kappa,
            TwistProfile::planar(Profile::Plateau {
                half_length: 1.0,
                taper: 1.0,
                amplitude: rate,
            }),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn determinant_is_jacobian_squared(
        (kappa, twist) in tube_3d(),
        s in -4.0..4.0f64,
        t0 in -0.5..0.5f64,
        t1 in -0.5..0.5f64,
    ) {
        let m = evaluate_metric(&kappa, &twist, s, &[t0, t1]).unwrap();
        let det = m.g.determinant();
        prop_assert!((det - m.f * m.f).abs() <= 1e-10 * (1.0 + m.f * m.f), "det {det} f² {}", m.f * m.f);
    }

    #[test]
    fn inverse_metric_is_inverse(
        (kappa, twist) in tube_3d(),
        s in -4.0..4.0f64,
        t0 in -0.5..0.5f64,
        t1 in -0.5..0.5f64,
    ) {
        let m = evaluate_metric(&kappa, &twist, s, &[t0, t1]).unwrap();
        let defect = (&m.g * &m.g_inv - DMatrix::<f64>::identity(3, 3)).abs().max();
        prop_assert!(defect <= 1e-9, "defect {defect}");
    }

    #[test]
    fn shear_is_tangential(
        (kappa, twist) in tube_3d(),
        s in -4.0..4.0f64,
        t0 in -0.5..0.5f64,
        t1 in -0.5..0.5f64,
    ) {
        let m = evaluate_metric(&kappa, &twist, s, &[t0, t1]).unwrap();
        let radial = m.shear[0] * t0 + m.shear[1] * t1;
        prop_assert!(radial.abs() <= 1e-10, "Σ f_μ t_μ = {radial}");
    }

    #[test]
    fn planar_jacobian_is_affine_in_t(k in -0.9..0.9f64, s in -1.0..1.0f64, t in -0.5..0.5f64) {
        let kappa = CurvatureProfile::new(vec![Profile::Constant { value: k }]).unwrap();
        let m = evaluate_metric(&kappa, &TwistProfile::none(2), s, &[t]).unwrap();
        prop_assert!((m.f - (1.0 - t * k)).abs() < 1e-14);
        prop_assert!(m.shear[0] == 0.0);
    }
}

#[test]
fn untwisted_metric_is_diagonal() {
    let kappa = CurvatureProfile::new(vec![bump(0.0, 2.0, 0.4), bump(0.0, 2.0, -0.3)]).unwrap();
    let m = evaluate_metric(&kappa, &TwistProfile::none(3), 0.2, &[0.3, -0.1]).unwrap();
    assert!(m.shear.iter().all(|&x| x == 0.0));
    assert!((m.g[(0, 0)] - m.f * m.f).abs() < 1e-14);
    assert!(m.g[(0, 1)].abs() < 1e-14 && m.g[(1, 1)] == 1.0);
}

#[test]
fn twist_rotations_compose() {
    let twist = TwistProfile::new(
        3,
        vec![PlaneRotation {
            first: 0,
            second: 1,
            rate: Profile::Constant { value: 0.7 },
        }],
    )
    .unwrap();
    let r = twist.rotation(1.0);
    assert!((r[(0, 0)] - 0.7f64.cos()).abs() < 1e-14);
    assert!((r[(1, 0)] - 0.7f64.sin()).abs() < 1e-14);
    assert!(TwistProfile::new(
        3,
        vec![PlaneRotation {
            first: 0,
            second: 0,
            rate: Profile::Zero
        }]
    )
    .is_err());
}

fn bent_3d() -> CurvatureProfile {
    CurvatureProfile::new(vec![
        bump(-2.0, 6.0, 0.8),
        Profile::Decaying { amplitude: 0.5 },
    ])
    .unwrap()
}

#[test]
fn frame_drift_stays_below_limit() {
    let frame = integrate_frame(&bent_3d(), &DMatrix::identity(3, 3), -10.0, 10.0, 1e-3).unwrap();
    let drift = frame.orthonormality_defect();
    assert!(drift <= 1e-8, "orthonormality drift {drift:e}");
}

#[test]
fn frame_converges_at_fourth_order() {
    let kappa = bent_3d();
    let end = |h: f64| {
        let f = integrate_frame(&kappa, &DMatrix::identity(3, 3), -2.0, 2.0, h).unwrap();
        f.frames.last().unwrap().clone()
    };
    let (a, b, c) = (end(0.2), end(0.1), end(0.05));
    let d1 = (&a - &b).abs().max();
    let d2 = (&b - &c).abs().max();
    let order = (d1 / d2).log2();
    assert!(order >= 3.5, "observed order {order} ({d1:e}, {d2:e})");
}

#[test]
fn constant_planar_curvature_traces_a_circle() {
    let k = 0.5;
    let kappa = CurvatureProfile::new(vec![Profile::Constant { value: k }]).unwrap();
    let f = integrate_frame(
        &kappa,
        &DMatrix::identity(2, 2),
        0.0,
        std::f64::consts::PI,
        1e-3,
    )
    .unwrap();
    let centre_distance = |i: usize| {
        let g = &f.curve[i];
        let n = f.frames[i].row(1).transpose();
        // The centre of curvature sits at distance 1/k along ±N.
        let a = (g + &n / k).norm();
        let b = (g - &n / k).norm();
        a.min(b)
    };
    let first = centre_distance(0);
    let worst = (0..f.s.len())
        .map(|i| (centre_distance(i) - first).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-5, "centre of curvature moves by {worst:e}");
}
