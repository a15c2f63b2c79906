use proptest::prelude::*;

use ptube::tube_form::{
    beta_schedule, conjugate_weight, schedule_bound, split_power_bound, straight_trial_bound,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn splitting_inequality_holds(
        a in 0.0..50.0f64,
        b in 0.0..50.0f64,
        q in 1.0..6.0f64,
        alpha in 1.0001..20.0f64,
    ) {
        let (lhs, rhs) = split_power_bound(a, b, q, alpha);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn conjugate_weights_are_dual(alpha in 1.0001..1e4f64) {
        let beta = conjugate_weight(alpha);
        prop_assert!(beta > 1.0);
        prop_assert!((1.0 / alpha + 1.0 / beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_split_doubles_the_power(b in 0.1..10.0f64, q in 1.0..6.0f64, alpha in 1.1..10.0f64) {
        // With αa = βb = c the sum a + b equals c, so both sides are c^q and 2c^q.
        let a = conjugate_weight(alpha) * b / alpha;
        let c = alpha * a;
        let (lhs, rhs) = split_power_bound(a, b, q, alpha);
        prop_assert!((lhs / c.powf(q) - 1.0).abs() < 1e-12);
        prop_assert!((rhs / lhs - 2.0).abs() < 1e-12);
    }
}

#[test]
fn beta_schedule_tends_to_one() {
    let mut last = f64::INFINITY;
    for e in 1..=6 {
        let b = beta_schedule(10f64.powi(e));
        assert!(b > 1.0 && b < last);
        last = b;
    }
    assert!(last - 1.0 < 1e-7);
}

#[test]
fn schedule_bound_decays_like_inverse_log() {
    let lambda1 = std::f64::consts::PI.powi(2);
    for p in [2.5, 3.0, 4.0] {
        let mut last = f64::INFINITY;
        for e in 1..=6 {
            let n = 10f64.powi(e);
            let v = schedule_bound(p, n, 1.0, lambda1);
            assert!(
                v > 0.0 && v < last,
                "p = {p}, n = {n}: {v} not below {last}"
            );
            if e >= 3 {
                assert!(v * n.ln() <= 4.0 * p * lambda1, "p = {p}, n = {n}: {v}");
            }
            last = v;
        }
    }
}

#[test]
fn straight_trial_bound_shrinks_with_n() {
    let lambda1 = std::f64::consts::PI.powi(2);
    for p in [1.5, 2.0, 3.0] {
        let alpha = 1e6;
        let b4 = straight_trial_bound(p, 4.0, alpha, lambda1);
        let b64 = straight_trial_bound(p, 64.0, alpha, lambda1);
        assert!(b64 < b4);
    }
}
