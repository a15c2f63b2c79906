//! Scalar inequalities behind the trial-function estimates.

/// Conjugate weight `β = α / (α − 1)` of `α > 1`.
pub fn conjugate_weight(alpha: f64) -> f64 {
    alpha / (alpha - 1.0)
}

/// Both sides of `(a + b)^q ≤ α^q a^q + β^q b^q` with `β` conjugate to `α`.
pub fn split_power_bound(a: f64, b: f64, q: f64, alpha: f64) -> (f64, f64) {
    let beta = conjugate_weight(alpha);
    ((a + b).powf(q), (alpha * a).powf(q) + (beta * b).powf(q))
}

/// The slowly decaying weight `β_n = 1 + 1/(n ln n)`, `n ≥ 2`.
pub fn beta_schedule(n: f64) -> f64 {
    1.0 + 1.0 / (n * n.ln())
}

/// Upper bound on `R[φ_n ⊗ φ₁]` for the straight tube obtained from the
/// splitting inequality with weights `(α, β)`:
/// `α^{p/2}·(2/n^{p−1})/(4n − 2) + (β^{p/2} − 1)·λ₁`.
pub fn straight_trial_bound(p: f64, n: f64, alpha: f64, lambda1: f64) -> f64 {
    let beta = conjugate_weight(alpha);
    alpha.powf(0.5 * p) * (2.0 / n.powf(p - 1.0)) / (4.0 * n - 2.0)
        + (beta.powf(0.5 * p) - 1.0) * lambda1
}

/// `α^{p/2}·(2/n^{p−1})·C + (β^{p/2} − 1)·λ₁·4n` along the schedule
/// `β = β_n`, `α = β/(β − 1)`; tends to zero for `p > 2`.
pub fn schedule_bound(p: f64, n: f64, c: f64, lambda1: f64) -> f64 {
    let beta = beta_schedule(n);
    let alpha = conjugate_weight(beta);
    alpha.powf(0.5 * p) * 2.0 / n.powf(p - 1.0) * c + (beta.powf(0.5 * p) - 1.0) * lambda1 * 4.0 * n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_pair() {
        let b = conjugate_weight(3.0);
        assert!((1.0 / 3.0 + 1.0 / b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn splitting_dominates_convexity_bound() {
        // Convexity gives (a + b)^q ≤ α^{q−1} a^q + β^{q−1} b^q with equality at
        // αa = βb; the split bound sits above it.
        let (alpha, q) = (3.0, 2.5);
        let beta = conjugate_weight(alpha);
        let (a, b) = (1.0, alpha / beta);
        let (l, r) = split_power_bound(a, b, q, alpha);
        let convex = alpha.powf(q - 1.0) * a.powf(q) + beta.powf(q - 1.0) * b.powf(q);
        assert!((l - convex).abs() < 1e-12 * l);
        assert!(r > l);
    }
}
