//! Preconditioned subspace descent on the normalized quotient.
//!
//! The objective is `F(v) = Φ_ε(v / N(v)^{1/p})` with
//! `Φ_ε = Σ w (|z|² + ε²)^{p/2} + Σ w V |y|^p`. Every iteration minimizes `F`
//! over the plane spanned by a preconditioned gradient and the previous
//! step, using a damped Newton method on the two coefficients.

use super::form::{CellForm, Local, MAX_M};
use super::{SolverConfig, SolverResult, SolverStatus};
use crate::error::{input, Result};
use crate::linalg::{axpy, dot, norm2, BandCholesky};

const MAX_INNER: usize = 12;

pub fn minimize_quotient(
    form: &CellForm,
    p: f64,
    config: &SolverConfig,
    initial: Option<&[f64]>,
) -> Result<SolverResult> {
    config.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return input(format!("exponent p must exceed 1, got {p}"));
    }
    let n = form.n_free();
    if n == 0 {
        return input("no free degrees of freedom");
    }
    let mut u = match initial {
        Some(v) if v.len() != n => {
            return input(format!(
                "initial field has {} entries, expected {n}",
                v.len()
            ))
        }
        Some(v) => v.to_vec(),
        None => vec![1.0; n],
    };
    if !normalize(form, p, &mut u) {
        return input("initial field has zero p-mass");
    }

    let schedule = config.epsilon_schedule(p);
    let mut history = Vec::new();
    let mut stage_starts = Vec::new();
    let mut iterations = 0;
    let mut status = SolverStatus::Converged;
    let mut rel = f64::INFINITY;
    let mut eps = 0.0;

    'stages: for (stage, &stage_eps) in schedule.iter().enumerate() {
        eps = stage_eps;
        let last_stage = stage + 1 == schedule.len();
        let tol = if last_stage {
            config.gradient_tol
        } else {
            config.gradient_tol.max(stage_eps)
        };
        stage_starts.push(history.len());
        let stage_begin = history.len();
        let mut momentum: Option<Vec<f64>> = None;
        let mut precond = preconditioner(form, &u, p, eps)?;
        let mut since_refresh = 0;
        loop {
            let g = form.gradient(&u, p, eps);
            let value = g.value.energy + g.value.potential;
            // At unit mass: ∇F = ∇Φ − ((∇E·u)/p + P) ∇N.
            let coef = dot(&g.energy, &u) / p + g.value.potential;
            let mut grad_phi = g.energy.clone();
            axpy(1.0, &g.potential, &mut grad_phi);
            let mut grad = grad_phi.clone();
            axpy(-coef, &g.mass, &mut grad);
            let scale = norm2(&grad_phi);
            rel = if scale > 0.0 {
                norm2(&grad) / scale
            } else {
                0.0
            };
            history.push(value);

            if rel < tol {
                status = SolverStatus::Converged;
                continue 'stages;
            }
            let in_stage = history.len() - stage_begin;
            let window = config.stagnation_window;
            if in_stage > window {
                let old = history[history.len() - 1 - window];
                if old - value <= config.stagnation_tol * value.abs() {
                    status = SolverStatus::Stagnated;
                    if last_stage {
                        break 'stages;
                    }
                    continue 'stages;
                }
            }
            if iterations >= config.max_iterations {
                status = SolverStatus::MaxIterations;
                break 'stages;
            }
            iterations += 1;

            if p != 2.0 {
                since_refresh += 1;
                if since_refresh >= config.precond_refresh {
                    precond = preconditioner(form, &u, p, eps)?;
                    since_refresh = 0;
                }
            }

            // Search plane: preconditioned gradient and previous step, both
            // orthogonalized against the iterate.
            let mut w = precond.solve(&grad);
            for x in w.iter_mut() {
                *x = -*x;
            }
            let mut dirs = Vec::with_capacity(2);
            if orthonormalize(&mut w, &[&u]) {
                dirs.push(w);
            }
            if let Some(mut d) = momentum.take() {
                let basis: Vec<&[f64]> = std::iter::once(u.as_slice())
                    .chain(dirs.iter().map(|v| v.as_slice()))
                    .collect();
                if orthonormalize(&mut d, &basis) {
                    dirs.push(d);
                }
            }
            if dirs.is_empty() {
                status = SolverStatus::Stagnated;
                if last_stage {
                    break 'stages;
                }
                continue 'stages;
            }
            let unorm = norm2(&u);
            for d in dirs.iter_mut() {
                for x in d.iter_mut() {
                    *x *= unorm;
                }
            }

            let plane = Plane::new(form, p, eps, &u, &dirs);
            let coeffs = plane.minimize(config, value);
            if coeffs.iter().all(|c| *c == 0.0) {
                // No decrease along the plane: retry once without momentum
                // before declaring the stage stuck.
                if dirs.len() == 2 {
                    momentum = None;
                    continue;
                }
                status = SolverStatus::Stagnated;
                if last_stage {
                    break 'stages;
                }
                continue 'stages;
            }
            let mut step = vec![0.0; n];
            for (c, d) in coeffs.iter().zip(&dirs) {
                axpy(*c, d, &mut step);
            }
            axpy(1.0, &step, &mut u);
            let mass = form.evaluate(&u, p, 0.0).mass;
            let s = mass.powf(1.0 / p);
            for x in u.iter_mut() {
                *x /= s;
            }
            for x in step.iter_mut() {
                *x /= s;
            }
            momentum = Some(step);
        }
    }

    let eigenvalue = form.evaluate(&u, p, 0.0).quotient();
    if u.iter().sum::<f64>() < 0.0 {
        for x in u.iter_mut() {
            *x = -*x;
        }
    }
    Ok(SolverResult {
        eigenvalue,
        field: u,
        iterations,
        gradient_norm: rel,
        epsilon: eps,
        converged: status == SolverStatus::Converged,
        status,
        history,
        stage_starts,
    })
}

/// Scales `u` to unit p-mass; false if the mass vanishes.
pub(crate) fn normalize(form: &CellForm, p: f64, u: &mut [f64]) -> bool {
    let mass = form.evaluate(u, p, 0.0).mass;
    if !(mass > 0.0 && mass.is_finite()) {
        return false;
    }
    let s = mass.powf(1.0 / p);
    for x in u.iter_mut() {
        *x /= s;
    }
    true
}

/// Gram–Schmidt against `basis` (twice) and scaling to unit length; false if
/// nothing significant is left.
fn orthonormalize(v: &mut [f64], basis: &[&[f64]]) -> bool {
    let before = norm2(v);
    if !(before > 0.0 && before.is_finite()) {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let bb = dot(b, b);
            if bb > 0.0 {
                let c = dot(v, b) / bb;
                axpy(-c, b, v);
            }
        }
    }
    let after = norm2(v);
    if !(after > 1e-10 * before) {
        return false;
    }
    for x in v.iter_mut() {
        *x /= after;
    }
    true
}

/// Factor of the (weighted) stiffness used to precondition the gradient.
fn preconditioner(form: &CellForm, u: &[f64], p: f64, eps: f64) -> Result<BandCholesky> {
    let weights = if p == 2.0 {
        None
    } else {
        let m = form.gradient_rows();
        let raw: Vec<f64> = (0..form.n_cells())
            .map(|c| {
                let l = form.local(c, u);
                let r: f64 = l.z[..m].iter().map(|x| x * x).sum();
                (r + eps * eps).powf(0.5 * (p - 2.0))
            })
            .collect();
        let mut sorted: Vec<f64> = raw
            .iter()
            .copied()
            .filter(|v| v.is_finite() && *v > 0.0)
            .collect();
        if sorted.is_empty() {
            None
        } else {
            sorted.sort_by(|a, b| a.total_cmp(b));
            let median = sorted[sorted.len() / 2];
            let (lo, hi) = (median * 1e-4, median * 1e4);
            Some(
                raw.iter()
                    .map(|&v| if v.is_finite() { v.clamp(lo, hi) } else { hi })
                    .collect::<Vec<f64>>(),
            )
        }
    };
    let mut k = form.stiffness(weights.as_deref());
    let max_diag = k.diagonal().into_iter().fold(0.0, f64::max);
    k.add_diagonal(1e-12 * max_diag.max(f64::MIN_POSITIVE));
    k.cholesky()
}

/// The objective restricted to `u + Σ c_j d_j`, with cell-local data cached.
struct Plane<'a> {
    form: &'a CellForm,
    p: f64,
    eps2: f64,
    base: Vec<Local>,
    dirs: Vec<Vec<Local>>,
}

struct Taylor {
    value: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

impl<'a> Plane<'a> {
    fn new(form: &'a CellForm, p: f64, eps: f64, u: &[f64], dirs: &[Vec<f64>]) -> Self {
        let cells = form.n_cells();
        let base = (0..cells).map(|c| form.local(c, u)).collect();
        let dirs = dirs
            .iter()
            .map(|d| (0..cells).map(|c| form.local(c, d)).collect())
            .collect();
        Self {
            form,
            p,
            eps2: eps * eps,
            base,
            dirs,
        }
    }

    fn evaluate(&self, c: &[f64], derivatives: bool) -> Taylor {
        let p = self.p;
        let nd = self.dirs.len();
        let m = self.form.gradient_rows();
        let weights = self.form.weights();
        let pot = self.form.cell_potential();

        let (mut nn, mut nj, mut njk) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
        let (mut pp, mut pj, mut pjk) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
        for cell in 0..weights.len() {
            let w = weights[cell];
            let v = pot[cell];
            let mut y = self.base[cell].y;
            let mut yd = [0.0; 2];
            for j in 0..nd {
                yd[j] = self.dirs[j][cell].y;
                y += c[j] * yd[j];
            }
            let ay = y.abs();
            let pm = ay.powf(p);
            nn += w * pm;
            pp += w * v * pm;
            if derivatives && ay > 0.0 {
                let g1 = w * p * ay.powf(p - 1.0) * y.signum();
                let h1 = w * p * (p - 1.0) * ay.powf(p - 2.0);
                for j in 0..nd {
                    nj[j] += g1 * yd[j];
                    pj[j] += v * g1 * yd[j];
                    for k in 0..nd {
                        njk[j][k] += h1 * yd[j] * yd[k];
                        pjk[j][k] += v * h1 * yd[j] * yd[k];
                    }
                }
            }
        }
        if !(nn > 0.0) {
            return Taylor {
                value: f64::INFINITY,
                grad: [0.0; 2],
                hess: [[0.0; 2]; 2],
            };
        }

        // s = N^{−2/p} rescales |z|² to the normalized field.
        let q = 2.0 / p;
        let s = nn.powf(-q);
        let mut sj = [0.0; 2];
        let mut sjk = [[0.0; 2]; 2];
        if derivatives {
            let a1 = -q * nn.powf(-q - 1.0);
            let a2 = q * (q + 1.0) * nn.powf(-q - 2.0);
            for j in 0..nd {
                sj[j] = a1 * nj[j];
                for k in 0..nd {
                    sjk[j][k] = a2 * nj[j] * nj[k] + a1 * njk[j][k];
                }
            }
        }

        let mut value = 0.0;
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for cell in 0..weights.len() {
            let w = weights[cell];
            let mut z = self.base[cell].z;
            for j in 0..nd {
                let zj = &self.dirs[j][cell].z;
                for r in 0..m {
                    z[r] += c[j] * zj[r];
                }
            }
            let a: f64 = z[..m].iter().map(|x| x * x).sum();
            let x = a * s + self.eps2;
            value += w * if p == 2.0 { x } else { x.powf(0.5 * p) };
            if !derivatives || !(x > 0.0) {
                continue;
            }
            let mut aj = [0.0; 2];
            let mut ajk = [[0.0; 2]; 2];
            for j in 0..nd {
                let zj = &self.dirs[j][cell].z;
                aj[j] = 2.0 * dot_m(&z, zj, m);
                for k in 0..nd {
                    ajk[j][k] = 2.0 * dot_m(zj, &self.dirs[k][cell].z, m);
                }
            }
            let b1 = w * 0.5 * p * x.powf(0.5 * p - 1.0);
            let b2 = w * 0.5 * p * (0.5 * p - 1.0) * x.powf(0.5 * p - 2.0);
            let mut xj = [0.0; 2];
            for j in 0..nd {
                xj[j] = aj[j] * s + a * sj[j];
            }
            for j in 0..nd {
                grad[j] += b1 * xj[j];
                for k in 0..nd {
                    let xjk = ajk[j][k] * s + aj[j] * sj[k] + aj[k] * sj[j] + a * sjk[j][k];
                    hess[j][k] += b2 * xj[j] * xj[k] + b1 * xjk;
                }
            }
        }

        value += pp / nn;
        if derivatives {
            for j in 0..nd {
                grad[j] += pj[j] / nn - pp * nj[j] / (nn * nn);
                for k in 0..nd {
                    hess[j][k] += pjk[j][k] / nn
                        - (pj[j] * nj[k] + pj[k] * nj[j]) / (nn * nn)
                        - pp * njk[j][k] / (nn * nn)
                        + 2.0 * pp * nj[j] * nj[k] / (nn * nn * nn);
                }
            }
        }
        Taylor { value, grad, hess }
    }

    /// Damped Newton with Armijo backtracking from `c = 0`.
    fn minimize(&self, config: &SolverConfig, start_value: f64) -> Vec<f64> {
        let nd = self.dirs.len();
        let mut c = vec![0.0; nd];
        let mut t = self.evaluate(&c, true);
        if !t.value.is_finite() {
            t.value = start_value;
        }
        for _ in 0..MAX_INNER {
            let delta = newton_step(&t, nd);
            let slope: f64 = (0..nd).map(|j| t.grad[j] * delta[j]).sum();
            if !(slope < 0.0) || -slope <= 1e-16 * t.value.abs() {
                break;
            }
            let mut step = config.initial_step;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = (0..nd).map(|j| c[j] + step * delta[j]).collect();
                let v = self.evaluate(&trial, false).value;
                if v.is_finite() && v <= t.value + config.sufficient_decrease * step * slope {
                    accepted = Some(trial);
                    break;
                }
                step *= config.shrink;
            }
            let Some(next) = accepted else { break };
            let previous = t.value;
            c = next;
            t = self.evaluate(&c, true);
            if previous - t.value <= 1e-16 * t.value.abs() {
                break;
            }
        }
        c
    }
}

#[inline]
fn dot_m(a: &[f64; MAX_M], b: &[f64; MAX_M], m: usize) -> f64 {
    (0..m).map(|r| a[r] * b[r]).sum()
}

/// Newton direction on one or two coefficients, shifted toward steepest
/// descent when the Hessian is not positive definite.
fn newton_step(t: &Taylor, nd: usize) -> [f64; 2] {
    let g = t.grad;
    let h = t.hess;
    if nd == 1 {
        let scale = h[0][0].abs().max(1e-300);
        let hh = if h[0][0] > 1e-12 * scale {
            h[0][0]
        } else {
            scale.max(g[0].abs())
        };
        return [-g[0] / hh, 0.0];
    }
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = (0.25 * (h[0][0] - h[1][1]).powi(2) + h[0][1] * h[1][0])
        .max(0.0)
        .sqrt();
    let lmin = 0.5 * tr - disc;
    let lmax = 0.5 * tr + disc;
    let mu = if lmin > 1e-12 * lmax.abs() && det > 0.0 {
        0.0
    } else {
        -lmin + 1e-6 * lmax.abs().max(g[0].abs().max(g[1].abs())).max(1e-300)
    };
    let a = h[0][0] + mu;
    let d = h[1][1] + mu;
    let b = h[0][1];
    let det = a * d - b * b;
    [-(d * g[0] - b * g[1]) / det, -(a * g[1] - b * g[0]) / det]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::section_form;
    use crate::cross_section::{build_mesh, CrossSectionShape};

    #[test]
    fn plane_derivatives_match_differences() {
        let mesh = build_mesh(&CrossSectionShape::interval(1.0), 0.05).unwrap();
        let form = section_form(&mesh);
        let n = form.n_free();
        for &(p, eps) in &[(2.0, 0.0), (3.0, 0.0), (1.5, 1e-2)] {
            let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * (i as f64 * 0.7).sin()).collect();
            normalize(&form, p, &mut u);
            let d1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
            let d2: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).sin()).collect();
            let plane = Plane::new(&form, p, eps, &u, &[d1, d2]);
            let c = [0.05, -0.02];
            let t = plane.evaluate(&c, true);
            let h = 1e-5;
            for j in 0..2 {
                let mut cp = c;
                let mut cm = c;
                cp[j] += h;
                cm[j] -= h;
                let tp = plane.evaluate(&cp, true);
                let tm = plane.evaluate(&cm, true);
                let fd = (tp.value - tm.value) / (2.0 * h);
                assert!(
                    (fd - t.grad[j]).abs() < 1e-6 * (1.0 + t.grad[j].abs()),
                    "p={p} grad {j}"
                );
                for k in 0..2 {
                    let fd = (tp.grad[k] - tm.grad[k]) / (2.0 * h);
                    assert!(
                        (fd - t.hess[j][k]).abs() < 1e-5 * (1.0 + t.hess[j][k].abs()),
                        "p={p} hess {j}{k}"
                    );
                }
            }
        }
    }
}
