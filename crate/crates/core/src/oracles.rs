//! Reference values computed without the finite element machinery.

use std::f64::consts::PI;

use crate::error::{input, Result};

/// First zero of the Bessel function `J₀`; `j₀₁²` is the first Dirichlet
/// eigenvalue of the unit disk.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// `π_p = 2π / (p sin(π/p))`.
pub fn pi_p(p: f64) -> f64 {
    2.0 * PI / (p * (PI / p).sin())
}

/// First Dirichlet eigenvalue of the one-dimensional p-Laplacian on an
/// interval of the given length, `(p − 1)(π_p / L)^p`.
pub fn interval_eigenvalue(p: f64, length: f64) -> f64 {
    (p - 1.0) * (pi_p(p) / length).powf(p)
}

/// Quarter-period of the solution of `(|u′|^{p−2}u′)′ + λ|u|^{p−2}u = 0`
/// with `u(0) = 0`, `u′(0) = 1`: the point where `u′` first vanishes.
fn quarter_period(p: f64, lambda: f64, step: f64, limit: f64) -> Option<f64> {
    // State (u, v) with v = |u′|^{p−2} u′, so u′ = |v|^{1/(p−1)} sgn v.
    let rhs = |u: f64, v: f64| -> (f64, f64) {
        (
            v.abs().powf(1.0 / (p - 1.0)) * v.signum(),
            -lambda * u.abs().powf(p - 1.0) * u.signum(),
        )
    };
    let (mut u, mut v) = (0.0, 1.0);
    let mut x = 0.0;
    while x < limit {
        let (k1u, k1v) = rhs(u, v);
        let (k2u, k2v) = rhs(u + 0.5 * step * k1u, v + 0.5 * step * k1v);
        let (k3u, k3v) = rhs(u + 0.5 * step * k2u, v + 0.5 * step * k2v);
        let (k4u, k4v) = rhs(u + step * k3u, v + step * k3v);
        let nu = u + step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        let nv = v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if nv <= 0.0 {
            // Linear interpolation of the sign change of v.
            return Some(x + step * v / (v - nv));
        }
        u = nu;
        v = nv;
        x += step;
    }
    None
}

/// Shooting method for the interval eigenvalue: bisection on `λ` until `u′`
/// first vanishes at the midpoint `L/2`.
pub fn shooting_interval_eigenvalue(p: f64, length: f64) -> Result<f64> {
    if !(p > 1.0) || !(length > 0.0) {
        return input("shooting oracle needs p > 1 and a positive length");
    }
    let half = 0.5 * length;
    let step = half * 2e-5;
    let period = |lambda: f64| quarter_period(p, lambda, step, 4.0 * half).unwrap_or(f64::INFINITY);
    // The quarter period decreases in λ; bracket the root first.
    let (mut lo, mut hi) = (1e-6, 1.0);
    while period(hi) > half {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return input("shooting oracle failed to bracket the eigenvalue");
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if period(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let radius = (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            (diag[i] - l - r, diag[i] + l + r)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| {
            (a.0.min(b.0), a.1.max(b.1))
        });
    let (mut lo, mut hi) = radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Second-order finite differences for `−u″ = λu` on an interval, `n`
/// interior points.
pub fn interval_fd_p2(length: f64, n: usize) -> f64 {
    let h = length / (n + 1) as f64;
    let diag = vec![2.0 / (h * h); n];
    let off = vec![-1.0 / (h * h); n.saturating_sub(1)];
    tridiagonal_lowest(&diag, &off)
}

/// Radial finite differences for the first Dirichlet Laplacian eigenvalue
/// of the disk of radius `r`, on `n` cell-centered points. The symmetric
/// scaling `r_i^{1/2}` turns the problem into a tridiagonal eigenproblem.
pub fn disk_radial_fd(radius: f64, n: usize) -> f64 {
    let h = radius / n as f64;
    let rc = |i: usize| (i as f64 + 0.5) * h;
    let face = |i: usize| i as f64 * h;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let mut d = (face(i) + face(i + 1)) / (h * h * rc(i));
        if i + 1 == n {
            // Ghost value −u_i puts the zero exactly on the boundary face.
            d += face(i + 1) / (h * h * rc(i));
        }
        diag.push(d);
        if i + 1 < n {
            off.push(-face(i + 1) / (h * h * (rc(i) * rc(i + 1)).sqrt()));
        }
    }
    tridiagonal_lowest(&diag, &off)
}

/// `λ₁(ω) + (π/(2L))²`: first Dirichlet eigenvalue of `(−L, L) × ω` for
/// `p = 2` by separation of variables.
pub fn separable_tube_p2(section_eigenvalue: f64, half_length: f64) -> f64 {
    section_eigenvalue + (PI / (2.0 * half_length)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_p_at_two_is_pi() {
        assert!((pi_p(2.0) - PI).abs() < 1e-15);
        assert!((interval_eigenvalue(2.0, 1.0) - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn shooting_agrees_with_closed_form() {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let s = shooting_interval_eigenvalue(p, 1.0).unwrap();
            let c = interval_eigenvalue(p, 1.0);
            assert!((s - c).abs() < 1e-6 * c, "p={p}: {s} vs {c}");
        }
    }

    #[test]
    fn tridiagonal_oracles() {
        let v = interval_fd_p2(1.0, 2000);
        assert!((v - PI * PI).abs() < 1e-5);
        let d = disk_radial_fd(1.0, 4000);
        let exact = BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO;
        assert!((d - exact).abs() < 1e-5, "{d}");
    }

    #[test]
    fn sturm_counts_eigenvalues() {
        // diag(1, 2, 3) has two eigenvalues below 2.5.
        assert_eq!(sturm_count(&[1.0, 2.0, 3.0], &[0.0, 0.0], 2.5), 2);
    }
}
