use std::sync::Arc;

use serde::Serialize;

use super::mesh::{CrossSectionMesh, PINNED};
use crate::eigensolver::{minimize_quotient, CellForm, SolverConfig, SolverResult, SolverStatus};
use crate::error::{input, Error, Result};
use crate::geometry::{jacobian_and_shear, TwistProfile};

/// First Dirichlet eigenpair of the p-Laplacian on a meshed cross-section.
#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    #[serde(skip)]
    pub mesh: Arc<CrossSectionMesh>,
    pub p: f64,
    pub eigenvalue: f64,
    /// Nodal values on all mesh nodes, zero on the boundary.
    pub phi: Vec<f64>,
    /// `|‖φ₁‖_p − 1|` under the one-point quadrature.
    pub normalization_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GroundState {
    /// `∇φ₁` on element `e`.
    pub fn element_gradient(&self, e: usize) -> Vec<f64> {
        element_gradient(&self.mesh, &self.phi, e)
    }

    /// `φ₁` at the barycenter of element `e`.
    pub fn element_value(&self, e: usize) -> f64 {
        let nodes = self.mesh.element(e);
        nodes.iter().map(|&i| self.phi[i]).sum::<f64>() / nodes.len() as f64
    }
}

fn element_gradient(mesh: &CrossSectionMesh, values: &[f64], e: usize) -> Vec<f64> {
    let g = mesh.gradient(e);
    let nodes = mesh.element(e);
    let k = nodes.len();
    (0..mesh.dim())
        .map(|r| (0..k).map(|a| g[r * k + a] * values[nodes[a]]).sum())
        .collect()
}

/// The cross-section quotient `∫|∇φ|^p / ∫|φ|^p` as a cell form.
pub fn section_form(mesh: &CrossSectionMesh) -> CellForm {
    let k = mesh.nodes_per_element();
    let mut form =
        CellForm::new(mesh.n_free(), mesh.dim(), k).expect("cross-section cells are small");
    let free = mesh.free_index();
    let bary = vec![1.0 / k as f64; k];
    let mut dofs = vec![PINNED; k];
    for e in 0..mesh.n_elements() {
        for (a, &node) in mesh.element(e).iter().enumerate() {
            dofs[a] = free[node];
        }
        form.push_cell(&dofs, mesh.gradient(e), &bary, mesh.volume(e), 0.0);
    }
    form
}

/// Minimizes the discrete Rayleigh quotient over fields vanishing on the
/// boundary. Hitting the iteration limit is an error; stagnation at a
/// stationary quotient is accepted.
pub fn solve_ground_state(
    mesh: &Arc<CrossSectionMesh>,
    p: f64,
    config: &SolverConfig,
) -> Result<GroundState> {
    solve_ground_state_from(mesh, p, config, None)
}

pub(crate) fn solve_ground_state_from(
    mesh: &Arc<CrossSectionMesh>,
    p: f64,
    config: &SolverConfig,
    initial: Option<&[f64]>,
) -> Result<GroundState> {
    if !(p > 1.0) {
        return input(format!("exponent p must exceed 1, got {p}"));
    }
    if mesh.n_free() == 0 {
        return input("cross-section mesh has no interior node");
    }
    let form = section_form(mesh);
    let result = minimize_quotient(&form, p, config, initial)?;
    if result.status == SolverStatus::MaxIterations {
        return Err(Error::Convergence(Box::new(result)));
    }
    Ok(from_result(mesh, p, &form, result))
}

fn from_result(
    mesh: &Arc<CrossSectionMesh>,
    p: f64,
    form: &CellForm,
    result: SolverResult,
) -> GroundState {
    let free = mesh.free_index();
    let phi: Vec<f64> = free
        .iter()
        .map(|&d| if d == PINNED { 0.0 } else { result.field[d] })
        .collect();
    let mass = form.evaluate(&result.field, p, 0.0).mass;
    GroundState {
        mesh: Arc::clone(mesh),
        p,
        eigenvalue: result.eigenvalue,
        phi,
        normalization_residual: (mass.powf(1.0 / p) - 1.0).abs(),
        iterations: result.iterations,
        converged: result.converged,
    }
}

/// `λ₁(cω)·c^p / λ₁(ω)` computed on the identically scaled mesh.
pub fn scale_eigenvalue_check(
    mesh: &Arc<CrossSectionMesh>,
    p: f64,
    c: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let base = solve_ground_state(mesh, p, config)?;
    let scaled = Arc::new(mesh.scaled(c)?);
    let other = solve_ground_state(&scaled, p, config)?;
    Ok(other.eigenvalue * c.powf(p) / base.eigenvalue)
}

/// `(∫|φ₁|^p t dt, ∫|∇φ₁|^p t dt)` by barycentric quadrature.
pub fn symmetry_moments(state: &GroundState) -> (Vec<f64>, Vec<f64>) {
    let mesh = &state.mesh;
    let m = mesh.dim();
    let mut m0 = vec![0.0; m];
    let mut m1 = vec![0.0; m];
    for e in 0..mesh.n_elements() {
        let vol = mesh.volume(e);
        let t = mesh.barycenter(e);
        let y = state.element_value(e).abs().powf(state.p);
        let g = state.element_gradient(e);
        let gp = g.iter().map(|x| x * x).sum::<f64>().powf(0.5 * state.p);
        for r in 0..m {
            m0[r] += vol * y * t[r];
            m1[r] += vol * gp * t[r];
        }
    }
    (m0, m1)
}

/// `∫ |∇φ₁|^{p−2} ∇(φ₁²) dt`, which vanishes for every domain when `p = 2`
/// and for circular domains at any `p`.
pub fn circular_identity_residual(state: &GroundState) -> Vec<f64> {
    let mesh = &state.mesh;
    let m = mesh.dim();
    let mut out = vec![0.0; m];
    for e in 0..mesh.n_elements() {
        let g = state.element_gradient(e);
        let r2: f64 = g.iter().map(|x| x * x).sum();
        if r2 == 0.0 {
            continue;
        }
        let factor = mesh.volume(e) * r2.powf(0.5 * (state.p - 2.0)) * 2.0 * state.element_value(e);
        for r in 0..m {
            out[r] += factor * g[r];
        }
    }
    out
}

/// Twist-condition magnitude `r(s) = ∫ |f_μ ∂_μ φ₁|^p dt` of an untwisted
/// cross-section swept with the rotation family `twist`.
pub fn twist_magnitude(state: &GroundState, twist: &TwistProfile, s: f64) -> Result<f64> {
    let mesh = &state.mesh;
    let m = mesh.dim();
    if twist.dim() != m + 1 {
        return input(format!(
            "twist acts in dimension {}, cross-section has dimension {m}",
            twist.dim()
        ));
    }
    let r = twist.rotation(s);
    let rp = twist.rotation_derivative(s);
    let zero = vec![0.0; m];
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let t = mesh.barycenter(e);
        let (_, shear) = jacobian_and_shear(&zero, &r, &rp, &t);
        let g = state.element_gradient(e);
        let v: f64 = shear.iter().zip(&g).map(|(a, b)| a * b).sum();
        total += mesh.volume(e) * v.abs().powf(state.p);
    }
    Ok(total)
}
