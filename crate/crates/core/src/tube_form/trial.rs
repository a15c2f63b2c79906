use serde::Serialize;

use super::mesh::{DiscreteField, Potential, TubeMesh};
use crate::cross_section::GroundState;
use crate::error::{input, Result};

/// Piecewise-linear plateau `φ_n`: one on `|s − c| ≤ n`, zero beyond
/// `|s − c| ≥ 2n`, linear in between. The unshifted profile has `c = 0`,
/// the shifted one `c = n²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cutoff {
    pub n: usize,
    pub center: f64,
}

pub fn cutoff_sequence(n: usize, shifted: bool) -> Result<Cutoff> {
    if n == 0 {
        return input("cutoff index n must be at least 1");
    }
    let nf = n as f64;
    Ok(Cutoff {
        n,
        center: if shifted { nf * nf } else { 0.0 },
    })
}

impl Cutoff {
    pub fn value(&self, s: f64) -> f64 {
        let n = self.n as f64;
        let r = (s - self.center).abs();
        if r <= n {
            1.0
        } else if r < 2.0 * n {
            (2.0 * n - r) / n
        } else {
            0.0
        }
    }

    /// Derivative away from the four kinks.
    pub fn derivative(&self, s: f64) -> f64 {
        let n = self.n as f64;
        let x = s - self.center;
        let r = x.abs();
        if r > n && r < 2.0 * n {
            -x.signum() / n
        } else {
            0.0
        }
    }

    /// `[c − 2n, c + 2n]`.
    pub fn support(&self) -> (f64, f64) {
        let n = self.n as f64;
        (self.center - 2.0 * n, self.center + 2.0 * n)
    }

    /// Midpoint rule for `∫ |φ_n′|^ξ ds` on cells of width `h` aligned with
    /// the kinks; exact because `φ_n′` is constant between kinks.
    pub fn derivative_power_integral(&self, xi: f64, h: f64) -> f64 {
        let (a, b) = self.support();
        let cells = ((b - a) / h).round().max(1.0) as usize;
        let h = (b - a) / cells as f64;
        (0..cells)
            .map(|i| h * self.derivative(a + (i as f64 + 0.5) * h).abs().powf(xi))
            .sum()
    }
}

/// `ψ(s, t) = g(s) φ₁(t)` sampled at the free nodes.
pub fn product_trial(
    mesh: &TubeMesh,
    g: impl Fn(f64) -> f64,
    state: &GroundState,
) -> Result<DiscreteField> {
    if state.phi.len() != mesh.section().n_nodes() {
        return input("ground state lives on a different cross-section mesh");
    }
    Ok(DiscreteField::from_fn(mesh, |s, j| g(s) * state.phi[j]))
}

/// `(Q[ψ] + ∫V|ψ|^p f − λ₁ N[ψ]) / N[ψ]`.
pub fn rayleigh_gap(
    mesh: &TubeMesh,
    field: &DiscreteField,
    p: f64,
    lambda1: f64,
    potential: Option<&Potential>,
) -> Result<f64> {
    let v = super::assemble(mesh, field, p, 0.0, potential)?;
    if !(v.mass > 0.0) {
        return input("Rayleigh gap of a field with zero p-mass");
    }
    Ok((v.energy + v.potential - lambda1 * v.mass) / v.mass)
}
