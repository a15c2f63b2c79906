use serde::Serialize;

use crate::cross_section::PINNED;
use crate::error::{input, Result};
use crate::linalg::BandMatrix;

/// Largest gradient dimension (`d ≤ 3`) and local dof count (prism cells in
/// a three-dimensional tube carry six nodes).
pub(crate) const MAX_M: usize = 3;
pub(crate) const MAX_K: usize = 6;

/// Values of the three integrals making up a discrete Rayleigh quotient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FormValue {
    /// `Σ w (|z|² + ε²)^{p/2}`.
    pub energy: f64,
    /// `Σ w |y|^p`.
    pub mass: f64,
    /// `Σ w V |y|^p`; zero without a potential.
    pub potential: f64,
}

impl FormValue {
    pub fn quotient(&self) -> f64 {
        (self.energy + self.potential) / self.mass
    }
}

/// Gradients of the three integrals with respect to the free coordinates.
#[derive(Clone, Debug)]
pub struct FormGradient {
    pub value: FormValue,
    pub energy: Vec<f64>,
    pub mass: Vec<f64>,
    pub potential: Vec<f64>,
}

/// A one-point-quadrature discretization of `∫ (|Gu|² + ε²)^{p/2} w` and
/// `∫ |bᵀu|^p w`. Each cell carries a weight `w`, an `m × k` gradient
/// operator `G`, interpolation weights `b` for its quadrature point, the
/// free indices of its `k` local nodes (or [`PINNED`]) and a potential
/// value.
#[derive(Clone, Debug)]
pub struct CellForm {
    n_free: usize,
    m: usize,
    k: usize,
    dofs: Vec<usize>,
    grad: Vec<f64>,
    bary: Vec<f64>,
    weight: Vec<f64>,
    potential: Vec<f64>,
    has_potential: bool,
}

#[derive(Clone, Copy)]
pub(crate) struct Local {
    pub z: [f64; MAX_M],
    pub y: f64,
}

impl CellForm {
    pub fn new(n_free: usize, m: usize, k: usize) -> Result<Self> {
        if m == 0 || m > MAX_M || k == 0 || k > MAX_K {
            return input(format!("unsupported cell shape {m}×{k}"));
        }
        Ok(Self {
            n_free,
            m,
            k,
            dofs: Vec::new(),
            grad: Vec::new(),
            bary: Vec::new(),
            weight: Vec::new(),
            potential: Vec::new(),
            has_potential: false,
        })
    }

    pub fn push_cell(
        &mut self,
        dofs: &[usize],
        grad: &[f64],
        bary: &[f64],
        weight: f64,
        potential: f64,
    ) {
        assert_eq!(dofs.len(), self.k);
        assert_eq!(grad.len(), self.m * self.k);
        assert_eq!(bary.len(), self.k);
        debug_assert!(dofs.iter().all(|&d| d == PINNED || d < self.n_free));
        self.dofs.extend_from_slice(dofs);
        self.grad.extend_from_slice(grad);
        self.bary.extend_from_slice(bary);
        self.weight.push(weight);
        self.potential.push(potential);
        if potential != 0.0 {
            self.has_potential = true;
        }
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_cells(&self) -> usize {
        self.weight.len()
    }

    pub fn gradient_rows(&self) -> usize {
        self.m
    }

    pub fn has_potential(&self) -> bool {
        self.has_potential
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn cell_potential(&self) -> &[f64] {
        &self.potential
    }

    /// Replaces the potential values, one per cell.
    pub fn set_potential(&mut self, values: Vec<f64>) {
        assert_eq!(values.len(), self.n_cells());
        self.has_potential = values.iter().any(|v| *v != 0.0);
        self.potential = values;
    }

    #[inline]
    pub(crate) fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.dofs[c * self.k..(c + 1) * self.k]
    }

    #[inline]
    fn cell_grad(&self, c: usize) -> &[f64] {
        let len = self.m * self.k;
        &self.grad[c * len..(c + 1) * len]
    }

    #[inline]
    fn cell_bary(&self, c: usize) -> &[f64] {
        &self.bary[c * self.k..(c + 1) * self.k]
    }

    /// `z = G u` and `y = bᵀu` on cell `c`.
    #[inline]
    pub(crate) fn local(&self, c: usize, u: &[f64]) -> Local {
        let dofs = self.cell_dofs(c);
        let g = self.cell_grad(c);
        let b = self.cell_bary(c);
        let mut z = [0.0; MAX_M];
        let mut y = 0.0;
        for (a, &d) in dofs.iter().enumerate() {
            if d == PINNED {
                continue;
            }
            let ua = u[d];
            y += b[a] * ua;
            for (r, zr) in z.iter_mut().enumerate().take(self.m) {
                *zr += g[r * self.k + a] * ua;
            }
        }
        Local { z, y }
    }

    /// Adds `Gᵀ gz` to `out_z` and `b·gy` to `out_y` on cell `c`.
    #[inline]
    fn scatter(&self, c: usize, gz: &[f64; MAX_M], gy: f64, out_z: &mut [f64], out_y: &mut [f64]) {
        let dofs = self.cell_dofs(c);
        let g = self.cell_grad(c);
        let b = self.cell_bary(c);
        for (a, &d) in dofs.iter().enumerate() {
            if d == PINNED {
                continue;
            }
            let mut acc = 0.0;
            for r in 0..self.m {
                acc += g[r * self.k + a] * gz[r];
            }
            out_z[d] += acc;
            out_y[d] += b[a] * gy;
        }
    }

    pub fn evaluate(&self, u: &[f64], p: f64, eps: f64) -> FormValue {
        assert_eq!(u.len(), self.n_free);
        let eps2 = eps * eps;
        let mut v = FormValue::default();
        for c in 0..self.n_cells() {
            let l = self.local(c, u);
            let w = self.weight[c];
            let r: f64 = l.z[..self.m].iter().map(|x| x * x).sum();
            v.energy += w * pow_half(r + eps2, p);
            let ay = l.y.abs().powf(p);
            v.mass += w * ay;
            v.potential += w * self.potential[c] * ay;
        }
        v
    }

    /// Values and analytic gradients of energy, mass and potential.
    pub fn gradient(&self, u: &[f64], p: f64, eps: f64) -> FormGradient {
        assert_eq!(u.len(), self.n_free);
        let eps2 = eps * eps;
        let n = self.n_free;
        let mut ge = vec![0.0; n];
        let mut gm = vec![0.0; n];
        let mut gv = vec![0.0; n];
        let mut v = FormValue::default();
        for c in 0..self.n_cells() {
            let l = self.local(c, u);
            let w = self.weight[c];
            let r: f64 = l.z[..self.m].iter().map(|x| x * x).sum();
            let x = r + eps2;
            v.energy += w * pow_half(x, p);
            // d/dz (r + ε²)^{p/2} = p (r + ε²)^{p/2 − 1} z
            let factor = if x > 0.0 {
                w * p * x.powf(0.5 * p - 1.0)
            } else {
                0.0
            };
            let mut gz = [0.0; MAX_M];
            for r in 0..self.m {
                gz[r] = factor * l.z[r];
            }
            let ay = l.y.abs();
            let pm = ay.powf(p);
            v.mass += w * pm;
            v.potential += w * self.potential[c] * pm;
            // d/dy |y|^p = p |y|^{p−2} y
            let gy = if ay > 0.0 {
                w * p * ay.powf(p - 1.0) * l.y.signum()
            } else {
                0.0
            };
            self.scatter(c, &gz, gy, &mut ge, &mut gm);
            let vc = self.potential[c];
            if vc != 0.0 {
                let dofs = self.cell_dofs(c);
                let b = self.cell_bary(c);
                for (a, &d) in dofs.iter().enumerate() {
                    if d != PINNED {
                        gv[d] += b[a] * gy * vc;
                    }
                }
            }
        }
        FormGradient {
            value: v,
            energy: ge,
            mass: gm,
            potential: gv,
        }
    }

    /// Largest index distance between coupled free dofs.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for c in 0..self.n_cells() {
            let dofs = self.cell_dofs(c);
            let free = dofs.iter().filter(|&&d| d != PINNED);
            let lo = free.clone().min();
            let hi = free.max();
            if let (Some(lo), Some(hi)) = (lo, hi) {
                bw = bw.max(hi - lo);
            }
        }
        bw
    }

    /// `Σ w·c_w GᵀG` with optional per-cell multipliers `c_w`.
    pub fn stiffness(&self, cell_weights: Option<&[f64]>) -> BandMatrix {
        let mut a = BandMatrix::zeros(self.n_free, self.bandwidth());
        for c in 0..self.n_cells() {
            let w = self.weight[c] * cell_weights.map_or(1.0, |cw| cw[c]);
            let dofs = self.cell_dofs(c);
            let g = self.cell_grad(c);
            for (i, &di) in dofs.iter().enumerate() {
                if di == PINNED {
                    continue;
                }
                for (j, &dj) in dofs.iter().enumerate() {
                    if dj == PINNED || dj > di {
                        continue;
                    }
                    let mut acc = 0.0;
                    for r in 0..self.m {
                        acc += g[r * self.k + i] * g[r * self.k + j];
                    }
                    a.add(di, dj, w * acc);
                }
            }
        }
        a
    }

    /// `Σ w·c_w b bᵀ`; with `potential = true` the multipliers are the cell
    /// potential values.
    pub fn mass_matrix(&self, potential: bool) -> BandMatrix {
        let mut a = BandMatrix::zeros(self.n_free, self.bandwidth());
        for c in 0..self.n_cells() {
            let w = self.weight[c] * if potential { self.potential[c] } else { 1.0 };
            if w == 0.0 {
                continue;
            }
            let dofs = self.cell_dofs(c);
            let b = self.cell_bary(c);
            for (i, &di) in dofs.iter().enumerate() {
                if di == PINNED {
                    continue;
                }
                for (j, &dj) in dofs.iter().enumerate() {
                    if dj == PINNED || dj > di {
                        continue;
                    }
                    a.add(di, dj, w * b[i] * b[j]);
                }
            }
        }
        a
    }
}

#[inline]
pub(crate) fn pow_half(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x
    } else {
        x.powf(0.5 * p)
    }
}
